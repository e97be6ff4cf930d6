"""Derivation of per-phase random seeds from one master seed."""

from enum import IntEnum

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


class Phase(IntEnum):
    """Fixed seed offsets; changing a value changes every result downstream of it."""

    VARIATIONS = 1
    FEATURES = 2
    PHASE1 = 3
    PHASE1_EVAL = 4
    PARTITION = 5
    SPECIALISTS = 6
    SPECIALIST_EVAL = 7
    DEMOS = 8
    FINETUNE = 9
    FINAL_EVAL = 10


def derive_seed(master_seed: int, phase: int, index: int = 0) -> int:
    """``((master + phase * golden) xor index) mod 2**64``."""
    return ((master_seed + phase * _GOLDEN) ^ index) & _MASK
