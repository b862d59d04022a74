import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentinel import dataset as ds

AREA = ds.DatasetMeta(area_bounds=(0.0, 0.0, 1000.0, 1000.0))

# Desk reference data: two independent 3-object logs with 0/1 labels.
LOG_1 = [
    ((234, 874), (214, 856), (764, 214)),
    ((45, 698), (102, 523), (154, 601)),
    ((487, 35), (924, 157), (245, 682)),
    ((147, 256), (651, 654), (213, 746)),
]
LABELS_1 = [
    (0.0, 0.0, 1.0),
    (0.0, 1.0, 0.0),
    (0.0, 0.0, 1.0),
    (1.0, 0.0, 1.0),
]
LOG_2 = [
    ((568, 248), (278, 698), (421, 297)),
    ((354, 14), (685, 32), (682, 413)),
    ((570, 694), (724, 31), (824, 246)),
]
LABELS_2 = [
    (1.0, 0.0, 0.0),
    (1.0, 0.0, 0.0),
    (0.0, 0.0, 1.0),
]


def group_from(rows, labels):
    return tuple(
        ds.Observation(
            locations=tuple(ds.Location(float(x), float(y)) for x, y in row),
            hostility=labels[i],
        )
        for i, row in enumerate(rows)
    )


@pytest.fixture
def two_group_dataset():
    return ds.RawDataset(
        n_objects=3,
        groups=(group_from(LOG_1, LABELS_1), group_from(LOG_2, LABELS_2)),
        meta=AREA,
    )


def random_raw(rng, n_objects, k_groups, max_records=3, meta=AREA):
    lo_x, lo_y, hi_x, hi_y = meta.area_bounds
    groups = []
    for _ in range(k_groups):
        records = []
        for _ in range(int(rng.integers(1, max_records + 1))):
            locations = tuple(
                ds.Location(float(rng.uniform(lo_x, hi_x)), float(rng.uniform(lo_y, hi_y)))
                for _ in range(n_objects)
            )
            hostility = tuple(float(rng.integers(0, 2)) for _ in range(n_objects))
            records.append(ds.Observation(locations=locations, hostility=hostility))
        groups.append(tuple(records))
    return ds.RawDataset(n_objects=n_objects, groups=tuple(groups), meta=meta)


class TestLookup:
    def test_reference_cell_group_one(self, two_group_dataset):
        loc, hostility = ds.lookup(two_group_dataset, k=1, u=2, v=3)
        assert (loc.x, loc.y) == (154.0, 601.0)
        assert hostility == 0.0

    def test_reference_cell_group_two(self, two_group_dataset):
        _, hostility = ds.lookup(two_group_dataset, k=2, u=3, v=1)
        assert hostility == 0.0

    def test_object_index_out_of_range(self, two_group_dataset):
        with pytest.raises(ds.IndexBoundsError, match=r"v=4 outside \[1, 3\]"):
            ds.lookup(two_group_dataset, k=1, u=1, v=4)

    def test_group_and_observation_bounds(self, two_group_dataset):
        with pytest.raises(ds.IndexBoundsError, match="k=3"):
            ds.lookup(two_group_dataset, k=3, u=1, v=1)
        with pytest.raises(ds.IndexBoundsError, match="u=5"):
            ds.lookup(two_group_dataset, k=1, u=5, v=1)


class TestNormalize:
    def test_two_object_pair_expands_to_four(self):
        rng = np.random.default_rng(0)
        raw = random_raw(rng, n_objects=2, k_groups=1, max_records=1)
        raw = ds.RawDataset(n_objects=2, groups=(raw.groups[0] * 2,), meta=AREA)
        assert raw.group_sizes() == (2,)
        norm = ds.normalize(raw)
        assert norm.group_sizes() == (4,)
        # both orderings of each record are present
        for obs in raw.groups[0]:
            swapped = obs.permuted((1, 0))
            assert obs in norm.groups[0]
            assert swapped in norm.groups[0]

    def test_three_object_counts(self, two_group_dataset):
        norm = ds.normalize(two_group_dataset)
        assert norm.group_sizes() == (4 * 6, 3 * 6)

    def test_single_object_is_identity(self):
        rng = np.random.default_rng(1)
        raw = random_raw(rng, n_objects=1, k_groups=2)
        norm = ds.normalize(raw)
        assert norm.groups == raw.groups

    def test_desk_scale_count_matches_test_slice(self):
        # 494 records of 5 objects expand to 59,280; the 10% test slice is
        # then 5,928 records.
        assert 494 * math.factorial(5) == 59280
        assert 59280 // 10 == 5928
        assert 1171 + 1199 + 1194 + 1186 + 1178 == 5928

    def test_lexicographic_order(self):
        rng = np.random.default_rng(2)
        raw = random_raw(rng, n_objects=3, k_groups=1, max_records=1)
        norm = ds.normalize(raw)
        base = raw.groups[0][0]
        expected = [base.permuted(p) for p in itertools.permutations(range(3))]
        assert list(norm.groups[0][:6]) == expected

    def test_factorial_cap(self):
        rng = np.random.default_rng(3)
        raw = random_raw(rng, n_objects=3, k_groups=1)
        with pytest.raises(ds.FactorialCapError, match="Sampled"):
            ds.normalize(raw, factorial_cap=2)

    def test_sampled_policy_includes_identity(self):
        rng = np.random.default_rng(4)
        raw = random_raw(rng, n_objects=4, k_groups=1, max_records=2)
        norm = ds.normalize(raw, ds.SampledPermutations(count=5, seed=9))
        assert norm.group_sizes() == (len(raw.groups[0]) * 5,)
        for obs in raw.groups[0]:
            assert obs in norm.groups[0]

    def test_sampled_policy_reproducible(self):
        rng = np.random.default_rng(5)
        raw = random_raw(rng, n_objects=4, k_groups=1)
        a = ds.normalize(raw, ds.SampledPermutations(count=6, seed=11))
        b = ds.normalize(raw, ds.SampledPermutations(count=6, seed=11))
        assert a == b

    def test_provenance_identifies_source(self, two_group_dataset):
        norm = ds.normalize(two_group_dataset)
        assert norm.provenance.policy == "full"
        assert norm.provenance.source_digest == ds.content_digest(two_group_dataset)


@settings(max_examples=30, deadline=None)
@given(
    n_objects=st.integers(min_value=1, max_value=4),
    k_groups=st.integers(min_value=1, max_value=2),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_expansion_count_and_closure(n_objects, k_groups, seed):
    """Each group grows by exactly N!, and the multiset of records is closed
    under simultaneous reordering by any fixed permutation."""
    raw = random_raw(np.random.default_rng(seed), n_objects, k_groups)
    norm = ds.normalize(raw)
    for raw_group, norm_group in zip(raw.groups, norm.groups):
        assert len(norm_group) == len(raw_group) * math.factorial(n_objects)
    sigma = tuple(np.random.default_rng(seed + 1).permutation(n_objects))
    for group in norm.groups:
        original = Counter(group)
        reordered = Counter(obs.permuted(sigma) for obs in group)
        assert original == reordered


@settings(max_examples=30, deadline=None)
@given(
    n_objects=st.integers(min_value=2, max_value=4),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_labels_travel_with_their_objects(n_objects, seed):
    raw = random_raw(np.random.default_rng(seed), n_objects, k_groups=1, max_records=2)
    norm = ds.normalize(raw)
    n_perms = math.factorial(n_objects)
    perms = list(itertools.permutations(range(n_objects)))
    for r, obs in enumerate(raw.groups[0]):
        for j, sigma in enumerate(perms):
            derived = norm.groups[0][r * n_perms + j]
            for i in range(n_objects):
                assert derived.locations[i] == obs.locations[sigma[i]]
                assert derived.hostility[i] == obs.hostility[sigma[i]]


class TestScaleCoordinates:
    def test_reference_point(self):
        raw = ds.RawDataset(
            n_objects=1,
            groups=((ds.Observation((ds.Location(234.0, 874.0),), (1.0,)),),),
            meta=AREA,
        )
        scaled = ds.scale_coordinates(raw)
        loc = scaled.groups[0][0].locations[0]
        assert (loc.x, loc.y) == (0.234, 0.874)
        assert scaled.meta.coordinate_scale == ds.UNIT_SCALE

    def test_lower_corner_and_midpoint(self):
        meta = ds.DatasetMeta(area_bounds=(100.0, 100.0, 200.0, 200.0))
        raw = ds.RawDataset(
            n_objects=2,
            groups=((ds.Observation(
                (ds.Location(100.0, 100.0), ds.Location(150.0, 150.0)), (0.0, 0.0)),),),
            meta=meta,
        )
        scaled = ds.scale_coordinates(raw)
        a, b = scaled.groups[0][0].locations
        assert (a.x, a.y) == (0.0, 0.0)
        assert (b.x, b.y) == (0.5, 0.5)

    def test_hostility_untouched(self, two_group_dataset):
        scaled = ds.scale_coordinates(two_group_dataset)
        for orig_group, scaled_group in zip(two_group_dataset.groups, scaled.groups):
            for orig, new in zip(orig_group, scaled_group):
                assert new.hostility == orig.hostility

    def test_double_scaling_rejected(self, two_group_dataset):
        scaled = ds.scale_coordinates(two_group_dataset)
        with pytest.raises(ds.ScalingError, match="already scaled"):
            ds.scale_coordinates(scaled)

    def test_location_outside_bounds(self):
        meta = ds.DatasetMeta(area_bounds=(0.0, 0.0, 1000.0, 1000.0))
        raw = ds.RawDataset(
            n_objects=1,
            groups=((ds.Observation((ds.Location(500.0, 500.0),), (0.0,)),),),
            meta=meta,
        )
        tight = ds.DatasetMeta(area_bounds=(0.0, 0.0, 100.0, 100.0))
        with pytest.raises(ds.ScalingError, match="outside declared bounds"):
            ds.scale_coordinates(raw, tight)


class TestSplit:
    def test_desk_scale_sizes(self):
        class Fake:
            record_count = 59280
        assignment = ds.split(Fake(), seed=0)
        counts = assignment.counts()
        assert counts == {"train": 41496, "validation": 11856, "test": 5928}

    def test_ten_records(self):
        rng = np.random.default_rng(6)
        raw = random_raw(rng, n_objects=1, k_groups=1, max_records=1)
        group = raw.groups[0] * 10
        raw = ds.RawDataset(n_objects=1, groups=(group,), meta=AREA)
        counts = ds.split(raw, seed=1).counts()
        assert counts == {"train": 7, "validation": 2, "test": 1}

    def test_same_seed_reproduces(self, two_group_dataset):
        norm = ds.normalize(two_group_dataset)
        assert ds.split(norm, seed=5) == ds.split(norm, seed=5)

    def test_partition_is_exact(self, two_group_dataset):
        norm = ds.normalize(two_group_dataset)
        assignment = ds.split(norm, seed=5)
        total = norm.record_count
        train = set(assignment.indices("train").tolist())
        val = set(assignment.indices("validation").tolist())
        test = set(assignment.indices("test").tolist())
        assert not (train & val) and not (train & test) and not (val & test)
        assert train | val | test == set(range(total))

    def test_too_small(self):
        rng = np.random.default_rng(7)
        raw = random_raw(rng, n_objects=2, k_groups=1, max_records=1)
        with pytest.raises(ds.DatasetError, match="at least 10"):
            ds.split(raw, seed=0)


@settings(max_examples=25, deadline=None)
@given(total=st.integers(min_value=10, max_value=3000), seed=st.integers(0, 1000))
def test_split_fractions_exact(total, seed):
    class Fake:
        record_count = total
    counts = ds.split(Fake(), seed=seed).counts()
    assert counts["train"] == int(math.floor(0.70 * total + 0.5))
    assert counts["validation"] == int(math.floor(0.20 * total + 0.5))
    assert counts["test"] == total - counts["train"] - counts["validation"]
    assert counts["test"] >= 1


class TestFileRoundTrip:
    def test_raw_round_trip(self, two_group_dataset, tmp_path):
        path = tmp_path / "data.raw"
        ds.write_raw(two_group_dataset, path)
        assert ds.read_raw(path) == two_group_dataset
        # writing the re-read value reproduces the bytes
        again = tmp_path / "again.raw"
        ds.write_raw(ds.read_raw(path), again)
        assert again.read_bytes() == path.read_bytes()

    def test_normalized_round_trip(self, two_group_dataset, tmp_path):
        norm = ds.normalize(two_group_dataset)
        path = tmp_path / "data.norm"
        ds.write_normalized(norm, path)
        assert ds.read_normalized(path) == norm

    def test_scaled_round_trip_is_bit_exact(self, two_group_dataset, tmp_path):
        scaled = ds.scale_coordinates(ds.normalize(two_group_dataset))
        path = tmp_path / "scaled.norm"
        ds.write_normalized(scaled, path)
        back = ds.read_normalized(path)
        assert back == scaled

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.raw"
        path.write_text("")
        with pytest.raises(ds.DatasetFormatError, match="empty"):
            ds.read_raw(path)

    def test_row_arity_error_names_the_row(self, two_group_dataset, tmp_path):
        path = tmp_path / "bad.raw"
        ds.write_raw(two_group_dataset, path)
        lines = path.read_text().splitlines()
        lines[4] = lines[4].rsplit(" ", 1)[0]  # drop one hostility value from row 2
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ds.DatasetFormatError, match="group 1 row 2"):
            ds.read_raw(path)

    def test_wrong_object_count_in_row(self, two_group_dataset, tmp_path):
        path = tmp_path / "bad.raw"
        ds.write_raw(two_group_dataset, path)
        lines = path.read_text().splitlines()
        lines[5] = "1.0 2.0 | 0.0"  # 1-object row inside a 3-object file
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ds.DatasetFormatError, match="row 3"):
            ds.read_raw(path)

    def test_non_numeric_field(self, two_group_dataset, tmp_path):
        path = tmp_path / "bad.raw"
        ds.write_raw(two_group_dataset, path)
        path.write_text(path.read_text().replace("234.0", "banana", 1))
        with pytest.raises(ds.DatasetFormatError, match="banana"):
            ds.read_raw(path)

    def test_raw_reader_rejects_normalized_files(self, two_group_dataset, tmp_path):
        norm = ds.normalize(two_group_dataset)
        path = tmp_path / "data.norm"
        ds.write_normalized(norm, path)
        with pytest.raises(ds.DatasetFormatError, match="normalized"):
            ds.read_raw(path)


class TestValidation:
    def test_hostility_range(self):
        with pytest.raises(ds.DatasetError, match="outside"):
            ds.Observation((ds.Location(1.0, 1.0),), (1.5,))

    def test_length_mismatch(self):
        with pytest.raises(ds.DatasetError, match="locations but"):
            ds.Observation((ds.Location(1.0, 1.0),), (0.0, 1.0))

    def test_non_finite_location(self):
        with pytest.raises(ds.DatasetError, match="finite"):
            ds.Location(float("nan"), 0.0)

    def test_degenerate_bounds(self):
        with pytest.raises(ds.DatasetError, match="degenerate"):
            ds.DatasetMeta(area_bounds=(10.0, 0.0, 10.0, 5.0))

    def test_empty_group(self):
        with pytest.raises(ds.DatasetError, match="empty"):
            ds.RawDataset(n_objects=1, groups=((),), meta=AREA)
