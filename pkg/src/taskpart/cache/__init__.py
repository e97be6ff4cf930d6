"""Descriptor cache."""
