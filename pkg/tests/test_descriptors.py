import numpy as np
import pytest

from taskpart.core.descriptors import (
    extract_descriptor,
    load_external_features,
    write_feature_csv,
)
from taskpart.core.errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyInput,
    MalformedNumber,
    MalformedRecord,
)
from taskpart.core.gridworld import generate_variations, variation_point_cloud
from taskpart.models.cloud import PointCloud
from taskpart.models.features import DescriptorSpec, FeatureMatrix
from taskpart.models.simulation import RunConfig


@pytest.fixture
def blob() -> PointCloud:
    rng = np.random.default_rng(11)
    return PointCloud(id="blob", points=rng.normal(size=(500, 3)) * [3.0, 1.0, 0.5])


def test_default_dimension(blob: PointCloud):
    spec = DescriptorSpec()
    vector = extract_descriptor(blob, spec, seed=0)
    assert spec.dim == 59
    assert vector.values.shape == (59,)
    assert vector.id == "blob"


def test_blocks_are_distributions(blob: PointCloud):
    spec = DescriptorSpec()
    values = extract_descriptor(blob, spec, seed=0).values
    spread = values[:3]
    assert spread.sum() == pytest.approx(1.0)
    assert list(spread) == sorted(spread, reverse=True)
    d2 = values[3 : 3 + spec.histogram_bins]
    assert d2.sum() == pytest.approx(1.0)
    axes = values[3 + spec.histogram_bins :].reshape(3, spec.axis_bins)
    np.testing.assert_allclose(axes.sum(axis=1), 1.0)


def test_single_repeated_point():
    spec = DescriptorSpec(histogram_bins=4, axis_bins=2)
    cloud = PointCloud(id="dot", points=np.tile([1.0, 2.0, 3.0], (7, 1)))
    values = extract_descriptor(cloud, spec, seed=5).values
    assert values.tolist() == [0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, 0]


def test_single_point_cloud():
    cloud = PointCloud(id="one", points=np.array([[0.5, 0.5, 0.5]]))
    values = extract_descriptor(cloud, DescriptorSpec(), seed=0).values
    assert values[:3].tolist() == [0.0, 0.0, 0.0]
    assert values[3] == 1.0


def test_same_seed_same_descriptor(blob: PointCloud):
    spec = DescriptorSpec()
    first = extract_descriptor(blob, spec, seed=42).values
    second = extract_descriptor(blob, spec, seed=42).values
    assert first.tobytes() == second.tobytes()


def test_point_order_does_not_matter(blob: PointCloud):
    spec = DescriptorSpec()
    shuffled = PointCloud(
        id="blob", points=np.random.default_rng(3).permutation(blob.points)
    )
    np.testing.assert_array_equal(
        extract_descriptor(blob, spec, seed=9).values,
        extract_descriptor(shuffled, spec, seed=9).values,
    )


def test_uniform_scale_does_not_matter(blob: PointCloud):
    spec = DescriptorSpec()
    scaled = PointCloud(id="blob", points=blob.points * 2.0)
    np.testing.assert_allclose(
        extract_descriptor(blob, spec, seed=9).values,
        extract_descriptor(scaled, spec, seed=9).values,
        atol=1e-12,
    )


def test_translation_does_not_change_spread(blob: PointCloud):
    spec = DescriptorSpec()
    moved = PointCloud(id="blob", points=blob.points + [10.0, -4.0, 2.5])
    np.testing.assert_allclose(
        extract_descriptor(blob, spec, seed=1).values[:3],
        extract_descriptor(moved, spec, seed=1).values[:3],
        atol=1e-9,
    )


def test_same_archetype_descriptors_are_closer_on_average():
    config = RunConfig(n_variations=12, g_archetypes=4)
    spec = DescriptorSpec(pair_samples=20000)
    vectors = {}
    for i, v in enumerate(generate_variations(config)):
        cloud = variation_point_cloud(v, 0.05, seed=100 + i, points_per_cell=200)
        vectors[v.id] = (v.archetype, extract_descriptor(cloud, spec, seed=i).values)

    within, between = [], []
    items = list(vectors.values())
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            distance = float(np.linalg.norm(items[a][1] - items[b][1]))
            (within if items[a][0] == items[b][0] else between).append(distance)
    assert np.mean(within) < np.mean(between)


def test_load_feature_csv():
    matrix = load_external_features(b"id,f0,f1\na,1.5,0\nb,-2,0\n")
    assert matrix.ids == ("a", "b")
    assert matrix.values.tolist() == [[1.5, 0.0], [-2.0, 0.0]]


def test_load_keeps_all_zero_columns():
    matrix = load_external_features(b"id,f0,f1,f2\na,0,1,0\nb,0,2,0\n")
    assert matrix.dim == 3


def test_load_duplicate_id():
    with pytest.raises(DuplicateId) as info:
        load_external_features(b"id,f0\na,1\nb,2\na,3\n")
    assert info.value.item_id == "a"


def test_load_malformed_number_position():
    with pytest.raises(MalformedNumber) as info:
        load_external_features(b"id,f0,f1\na,1,2\nb,3,oops\n")
    assert (info.value.line, info.value.column) == (3, 3)


def test_load_rejects_infinity():
    with pytest.raises(MalformedNumber):
        load_external_features(b"id,f0\na,inf\n")


def test_load_rejects_bytes_that_are_not_utf8():
    with pytest.raises(MalformedRecord) as info:
        load_external_features(b"\xffa,1\n")
    assert info.value.line == 1
    assert info.value.exit_code == 2


def test_load_ragged_row():
    with pytest.raises(DimensionMismatch) as info:
        load_external_features(b"id,f0,f1\na,1,2\nb,3\n")
    assert info.value.line == 3


def test_load_bad_header():
    with pytest.raises(DimensionMismatch):
        load_external_features(b"name,f0\na,1\n")


def test_load_header_only():
    with pytest.raises(EmptyInput):
        load_external_features(b"id,f0\n")


def test_written_csv_reloads_exactly():
    values = np.array([[0.1, 1e-300], [-3.0, 2.0 / 3.0]])
    matrix = FeatureMatrix(ids=("x", "y"), values=values)
    again = load_external_features(write_feature_csv(matrix).encode())
    assert again.ids == matrix.ids
    assert again.values.tobytes() == matrix.values.tobytes()
