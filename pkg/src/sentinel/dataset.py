"""Datasets of object-location snapshots with per-object hostility labels.

A raw dataset is a collection of independent groups; each group is an ordered
log of observations, and each observation pairs the locations of the N objects
in the area of observation with their 0/1 hostility labels.  Expanding every
observation with simultaneous permutations of the object order produces the
training set actually fed to a network, so a hostile object is recognised no
matter which index it happens to be assigned.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

NO_SCALE = "none"
UNIT_SCALE = "minmax-to-unit-interval"

# Full permutation expansion is refused above this object count (7! = 5040
# copies per record); larger sets must use sampled permutations.
DEFAULT_FACTORIAL_CAP = 7

SPLIT_FRACTIONS = (0.70, 0.20, 0.10)
TRAIN, VALIDATION, TEST = "train", "validation", "test"


class DatasetError(Exception):
    """Base class for dataset construction and I/O failures."""


class DatasetFormatError(DatasetError):
    """Malformed dataset file; carries a line number when one is known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IndexBoundsError(DatasetError, IndexError):
    """A (group, observation, object) index fell outside the dataset."""


class ScalingError(DatasetError):
    """Coordinate scaling applied twice, or a location outside bounds."""


class FactorialCapError(DatasetError):
    """Full permutation expansion requested for too many objects."""


@dataclass(frozen=True)
class Location:
    """A single object position inside the area of observation."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DatasetError(f"location coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class DatasetMeta:
    """Area bounds, coordinate-scaling state and generation seed.

    ``area_bounds`` is always expressed in world units.  ``coordinate_scale``
    records the domain the stored coordinates live in: ``"none"`` means world
    units within ``area_bounds``; ``"minmax-to-unit-interval"`` means every
    coordinate has been affinely mapped to [0, 1] using those bounds.
    """

    area_bounds: tuple[float, float, float, float] = (0.0, 0.0, 1000.0, 1000.0)
    coordinate_scale: str = NO_SCALE
    seed: int = 0

    def __post_init__(self):
        min_x, min_y, max_x, max_y = self.area_bounds
        if not (min_x < max_x and min_y < max_y):
            raise DatasetError(f"degenerate area bounds {self.area_bounds}")
        if self.coordinate_scale not in (NO_SCALE, UNIT_SCALE):
            raise DatasetError(f"unknown coordinate scale {self.coordinate_scale!r}")

    def coordinate_domain(self) -> tuple[float, float, float, float]:
        """Bounds the stored coordinates must respect, in their own units."""
        if self.coordinate_scale == UNIT_SCALE:
            return (0.0, 0.0, 1.0, 1.0)
        return self.area_bounds


@dataclass(frozen=True)
class Observation:
    """One snapshot: ordered object locations and their hostility labels."""

    locations: tuple[Location, ...]
    hostility: tuple[float, ...]

    def __post_init__(self):
        if len(self.locations) != len(self.hostility):
            raise DatasetError(
                f"{len(self.locations)} locations but {len(self.hostility)} hostility values"
            )
        for h in self.hostility:
            if not (math.isfinite(h) and 0.0 <= h <= 1.0):
                raise DatasetError(f"hostility {h} outside [0, 1]")

    def permuted(self, perm: tuple[int, ...]) -> "Observation":
        """Reorder objects by ``perm``; labels travel with their objects."""
        return Observation(
            locations=tuple(self.locations[i] for i in perm),
            hostility=tuple(self.hostility[i] for i in perm),
        )


@dataclass(frozen=True)
class Provenance:
    """Identity of the raw dataset a normalized dataset was expanded from."""

    source_digest: str
    policy: str


def _check_groups(n_objects, groups, meta):
    if n_objects < 1:
        raise DatasetError(f"n_objects must be >= 1, got {n_objects}")
    if len(groups) < 1:
        raise DatasetError("dataset needs at least one group")
    lo_x, lo_y, hi_x, hi_y = meta.coordinate_domain()
    for k, group in enumerate(groups, start=1):
        if len(group) == 0:
            raise DatasetError(f"group {k} is empty")
        for u, obs in enumerate(group, start=1):
            if len(obs.locations) != n_objects:
                raise DatasetError(
                    f"group {k} observation {u} has {len(obs.locations)} objects, expected {n_objects}"
                )
            for loc in obs.locations:
                if not (lo_x <= loc.x <= hi_x and lo_y <= loc.y <= hi_y):
                    raise DatasetError(
                        f"group {k} observation {u}: location ({loc.x}, {loc.y}) "
                        f"outside domain ({lo_x}, {lo_y}, {hi_x}, {hi_y})"
                    )


@dataclass(frozen=True)
class RawDataset:
    """K independent groups of logged observations, plus area metadata."""

    n_objects: int
    groups: tuple[tuple[Observation, ...], ...]
    meta: DatasetMeta = field(default_factory=DatasetMeta)

    def __post_init__(self):
        _check_groups(self.n_objects, self.groups, self.meta)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def group_sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    def records(self):
        """All observations flattened in (group, observation) order."""
        for group in self.groups:
            yield from group

    @property
    def record_count(self) -> int:
        return sum(len(g) for g in self.groups)


@dataclass(frozen=True)
class NormalizedDataset:
    """A permutation-expanded dataset, tagged with its source and policy."""

    n_objects: int
    groups: tuple[tuple[Observation, ...], ...]
    meta: DatasetMeta
    provenance: Provenance

    def __post_init__(self):
        _check_groups(self.n_objects, self.groups, self.meta)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def group_sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    def records(self):
        for group in self.groups:
            yield from group

    @property
    def record_count(self) -> int:
        return sum(len(g) for g in self.groups)


def lookup(ds, k: int, u: int, v: int) -> tuple[Location, float]:
    """Fetch (location, hostility) of object v in observation u of group k.

    Indices are 1-based.  Raises IndexBoundsError naming the violated bound.
    """
    if not 1 <= k <= ds.n_groups:
        raise IndexBoundsError(f"group index k={k} outside [1, {ds.n_groups}]")
    group = ds.groups[k - 1]
    if not 1 <= u <= len(group):
        raise IndexBoundsError(f"observation index u={u} outside [1, {len(group)}] for group {k}")
    obs = group[u - 1]
    if not 1 <= v <= ds.n_objects:
        raise IndexBoundsError(f"object index v={v} outside [1, {ds.n_objects}]")
    return obs.locations[v - 1], obs.hostility[v - 1]


@dataclass(frozen=True)
class FullPermutations:
    """Expand every record with all N! object-order permutations."""


@dataclass(frozen=True)
class SampledPermutations:
    """Expand with ``count`` distinct permutations per record (identity always
    included), drawn reproducibly from ``seed``."""

    count: int
    seed: int

    def __post_init__(self):
        if self.count < 1:
            raise DatasetError(f"permutation sample count must be >= 1, got {self.count}")


def _policy_tag(policy) -> str:
    if isinstance(policy, FullPermutations):
        return "full"
    return f"sample:{policy.count}:{policy.seed}"


def _sample_permutations(n: int, count: int, rng) -> list[tuple[int, ...]]:
    identity = tuple(range(n))
    if n <= DEFAULT_FACTORIAL_CAP:
        universe = list(itertools.permutations(range(n)))
        if count > len(universe):
            raise DatasetError(f"cannot draw {count} distinct permutations of {n} objects ({n}! = {len(universe)})")
        universe.remove(identity)
        picked = [universe[i] for i in rng.choice(len(universe), size=count - 1, replace=False)] if count > 1 else []
        return sorted([identity] + picked)
    # Factorial too large to enumerate; rejection-sample distinct draws.
    seen = {identity}
    while len(seen) < count:
        seen.add(tuple(int(i) for i in rng.permutation(n)))
    return sorted(seen)


def normalize(raw: RawDataset, policy=FullPermutations(), factorial_cap: int = DEFAULT_FACTORIAL_CAP) -> NormalizedDataset:
    """Expand each record with simultaneous permutations of the object order.

    Full expansion emits the N! reorderings of every record in lexicographic
    permutation order, so each group grows by exactly N! and the output is
    byte-reproducible.  Sampled expansion keeps ``policy.count`` distinct
    permutations per record, identity always among them.
    """
    n = raw.n_objects
    if isinstance(policy, FullPermutations):
        if n > factorial_cap:
            raise FactorialCapError(
                f"full expansion of {n} objects would copy every record {math.factorial(n)} times "
                f"(cap {factorial_cap}!); use SampledPermutations instead"
            )
        perms = list(itertools.permutations(range(n)))
        groups = tuple(
            tuple(obs.permuted(p) for obs in group for p in perms)
            for group in raw.groups
        )
    elif isinstance(policy, SampledPermutations):
        rng = np.random.default_rng(policy.seed)
        out_groups = []
        for group in raw.groups:
            expanded = []
            for obs in group:
                for p in _sample_permutations(n, policy.count, rng):
                    expanded.append(obs.permuted(p))
            out_groups.append(tuple(expanded))
        groups = tuple(out_groups)
    else:
        raise TypeError(f"unknown permutation policy {policy!r}")
    return NormalizedDataset(
        n_objects=n,
        groups=groups,
        meta=raw.meta,
        provenance=Provenance(source_digest=content_digest(raw), policy=_policy_tag(policy)),
    )


def scale_coordinates(ds, meta: DatasetMeta | None = None):
    """Map every coordinate affinely onto [0, 1] using the area bounds.

    Refuses to run twice: scaled datasets are marked in their metadata and a
    second application raises instead of silently compounding.
    """
    base = ds.meta if meta is None else meta
    if base.coordinate_scale == UNIT_SCALE:
        raise ScalingError("dataset coordinates are already scaled to the unit interval")
    min_x, min_y, max_x, max_y = base.area_bounds
    span_x, span_y = max_x - min_x, max_y - min_y

    def scale_obs(obs, k, u):
        pts = []
        for loc in obs.locations:
            if not (min_x <= loc.x <= max_x and min_y <= loc.y <= max_y):
                raise ScalingError(
                    f"group {k} observation {u}: location ({loc.x}, {loc.y}) "
                    f"outside declared bounds ({min_x}, {min_y}, {max_x}, {max_y})"
                )
            pts.append(Location((loc.x - min_x) / span_x, (loc.y - min_y) / span_y))
        return Observation(locations=tuple(pts), hostility=obs.hostility)

    groups = tuple(
        tuple(scale_obs(obs, k, u) for u, obs in enumerate(group, start=1))
        for k, group in enumerate(ds.groups, start=1)
    )
    new_meta = replace(base, coordinate_scale=UNIT_SCALE)
    return replace(ds, groups=groups, meta=new_meta)


@dataclass(frozen=True)
class SplitAssignment:
    """A seeded train/validation/test partition of the flattened records.

    ``tags[i]`` labels record i in (group, observation) order.  Train takes
    round(0.70 * total) records and validation round(0.20 * total); test gets
    the remainder, so it is never empty.  The assignment is a pure function of
    (record count, seed).
    """

    tags: tuple[str, ...]
    seed: int
    fractions: tuple[float, float, float] = SPLIT_FRACTIONS

    def indices(self, tag: str) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.tags, dtype=object) == tag)

    def counts(self) -> dict[str, int]:
        return {t: sum(1 for tag in self.tags if tag == t) for t in (TRAIN, VALIDATION, TEST)}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(ds, seed: int) -> SplitAssignment:
    """Randomly partition the dataset's records 70/20/10 by seed."""
    total = ds.record_count
    if total < 10:
        raise DatasetError(f"dataset has {total} records; need at least 10 to split 70/20/10")
    n_train = _round_half_up(SPLIT_FRACTIONS[0] * total)
    n_val = _round_half_up(SPLIT_FRACTIONS[1] * total)
    order = np.random.default_rng(seed).permutation(total)
    tags = np.empty(total, dtype=object)
    tags[order[:n_train]] = TRAIN
    tags[order[n_train:n_train + n_val]] = VALIDATION
    tags[order[n_train + n_val:]] = TEST
    return SplitAssignment(tags=tuple(tags), seed=seed)


def to_arrays(ds, assignment: SplitAssignment | None = None, tag: str | None = None):
    """Flatten records to (inputs, targets) float64 arrays.

    Inputs interleave coordinates as x1 y1 ... xN yN.  When an assignment and
    tag are given, only that slice's records are returned, in record order.
    """
    n = ds.n_objects
    rows = list(ds.records())
    if assignment is not None:
        if len(assignment.tags) != len(rows):
            raise DatasetError(
                f"split covers {len(assignment.tags)} records but dataset has {len(rows)}"
            )
        if tag is None:
            raise DatasetError("an assignment was given but no slice tag")
        rows = [rows[i] for i in assignment.indices(tag)]
    X = np.empty((len(rows), 2 * n))
    Y = np.empty((len(rows), n))
    for i, obs in enumerate(rows):
        for v, loc in enumerate(obs.locations):
            X[i, 2 * v] = loc.x
            X[i, 2 * v + 1] = loc.y
        Y[i] = obs.hostility
    return X, Y


# ---------------------------------------------------------------------------
# Text format.  Grammar (see docs/formats.md):
#   N=<n> K=<k>
#   meta bounds=<minx> <miny> <maxx> <maxy> scale=<none|minmax-to-unit-interval> seed=<int>
#   provenance source=<hex> policy=<full|sample:<count>:<seed>>      (normalized only)
#   group <k> M=<m>
#   <x1> <y1> ... <xN> <yN> | <h1> ... <hN>                          (M rows per group)
# Numbers are written with repr() so a write/read round trip is bit-exact.
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return repr(float(value))


def _serialize(ds, provenance: Provenance | None) -> str:
    lines = [f"N={ds.n_objects} K={ds.n_groups}"]
    b = ds.meta.area_bounds
    lines.append(
        f"meta bounds={_fmt(b[0])} {_fmt(b[1])} {_fmt(b[2])} {_fmt(b[3])} "
        f"scale={ds.meta.coordinate_scale} seed={ds.meta.seed}"
    )
    if provenance is not None:
        lines.append(f"provenance source={provenance.source_digest} policy={provenance.policy}")
    for k, group in enumerate(ds.groups, start=1):
        lines.append(f"group {k} M={len(group)}")
        for obs in group:
            coords = " ".join(f"{_fmt(loc.x)} {_fmt(loc.y)}" for loc in obs.locations)
            hostile = " ".join(_fmt(h) for h in obs.hostility)
            lines.append(f"{coords} | {hostile}")
    return "\n".join(lines) + "\n"


def content_digest(ds) -> str:
    """Stable identity of a dataset's contents (provenance excluded)."""
    return hashlib.sha256(_serialize(ds, provenance=None).encode("utf-8")).hexdigest()


def write_raw(ds: RawDataset, path):
    Path(path).write_text(_serialize(ds, provenance=None), encoding="utf-8")


def write_normalized(ds: NormalizedDataset, path):
    Path(path).write_text(_serialize(ds, provenance=ds.provenance), encoding="utf-8")


def _parse_float(token: str, line: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise DatasetFormatError(f"{what}: {token!r} is not a number", line) from None


def _parse_kv(token: str, key: str, line: int) -> str:
    if not token.startswith(key + "="):
        raise DatasetFormatError(f"expected {key}=<value>, got {token!r}", line)
    return token[len(key) + 1:]


def _parse(text: str, expect_provenance: bool):
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DatasetFormatError("empty dataset file", 1)

    header = lines[0].split()
    if len(header) != 2:
        raise DatasetFormatError(f"header must be 'N=<n> K=<k>', got {lines[0]!r}", 1)
    n = int(_parse_float(_parse_kv(header[0], "N", 1), 1, "N"))
    k_total = int(_parse_float(_parse_kv(header[1], "K", 1), 1, "K"))

    if len(lines) < 2:
        raise DatasetFormatError("missing meta line", 2)
    meta_tokens = lines[1].split()
    if len(meta_tokens) != 7 or meta_tokens[0] != "meta":
        raise DatasetFormatError(f"expected meta line, got {lines[1]!r}", 2)
    bounds = (
        _parse_float(_parse_kv(meta_tokens[1], "bounds", 2), 2, "bounds"),
        _parse_float(meta_tokens[2], 2, "bounds"),
        _parse_float(meta_tokens[3], 2, "bounds"),
        _parse_float(meta_tokens[4], 2, "bounds"),
    )
    scale = _parse_kv(meta_tokens[5], "scale", 2)
    seed = int(_parse_float(_parse_kv(meta_tokens[6], "seed", 2), 2, "seed"))
    meta = DatasetMeta(area_bounds=bounds, coordinate_scale=scale, seed=seed)

    cursor = 2
    provenance = None
    if expect_provenance:
        if cursor >= len(lines) or not lines[cursor].startswith("provenance "):
            raise DatasetFormatError("normalized dataset file must carry a provenance line", cursor + 1)
        tokens = lines[cursor].split()
        if len(tokens) != 3:
            raise DatasetFormatError(f"malformed provenance line {lines[cursor]!r}", cursor + 1)
        provenance = Provenance(
            source_digest=_parse_kv(tokens[1], "source", cursor + 1),
            policy=_parse_kv(tokens[2], "policy", cursor + 1),
        )
        cursor += 1
    elif cursor < len(lines) and lines[cursor].startswith("provenance "):
        raise DatasetFormatError("file carries provenance: this is a normalized dataset, not a raw one", cursor + 1)

    groups = []
    for k in range(1, k_total + 1):
        if cursor >= len(lines):
            raise DatasetFormatError(f"expected 'group {k} M=...' but the file ended", cursor + 1)
        tokens = lines[cursor].split()
        if len(tokens) != 3 or tokens[0] != "group":
            raise DatasetFormatError(f"expected 'group {k} M=...', got {lines[cursor]!r}", cursor + 1)
        if int(_parse_float(tokens[1], cursor + 1, "group index")) != k:
            raise DatasetFormatError(f"groups must appear in order; expected group {k}, got {tokens[1]}", cursor + 1)
        m = int(_parse_float(_parse_kv(tokens[2], "M", cursor + 1), cursor + 1, "M"))
        cursor += 1
        group = []
        for u in range(1, m + 1):
            if cursor >= len(lines):
                raise DatasetFormatError(f"group {k} promises {m} rows but the file ended at row {u}", cursor + 1)
            row = lines[cursor]
            if "|" not in row:
                raise DatasetFormatError(f"group {k} row {u}: missing '|' separator", cursor + 1)
            left, right = row.split("|", 1)
            coord_tokens = left.split()
            hostile_tokens = right.split()
            if len(coord_tokens) != 2 * n or len(hostile_tokens) != n:
                raise DatasetFormatError(
                    f"group {k} row {u}: expected {2 * n} coordinates and {n} hostility values, "
                    f"got {len(coord_tokens)} and {len(hostile_tokens)}",
                    cursor + 1,
                )
            coords = [_parse_float(t, cursor + 1, f"group {k} row {u} coordinate") for t in coord_tokens]
            hostile = [_parse_float(t, cursor + 1, f"group {k} row {u} hostility") for t in hostile_tokens]
            locations = tuple(Location(coords[2 * v], coords[2 * v + 1]) for v in range(n))
            group.append(Observation(locations=locations, hostility=tuple(hostile)))
            cursor += 1
        groups.append(tuple(group))
    if cursor < len(lines) and any(line.strip() for line in lines[cursor:]):
        raise DatasetFormatError("trailing content after the last declared group", cursor + 1)
    return n, tuple(groups), meta, provenance


def read_raw(path) -> RawDataset:
    text = Path(path).read_text(encoding="utf-8")
    n, groups, meta, _ = _parse(text, expect_provenance=False)
    try:
        return RawDataset(n_objects=n, groups=groups, meta=meta)
    except DatasetError as exc:
        raise DatasetFormatError(str(exc)) from exc


def read_normalized(path) -> NormalizedDataset:
    text = Path(path).read_text(encoding="utf-8")
    n, groups, meta, provenance = _parse(text, expect_provenance=True)
    try:
        return NormalizedDataset(n_objects=n, groups=groups, meta=meta, provenance=provenance)
    except DatasetError as exc:
        raise DatasetFormatError(str(exc)) from exc
