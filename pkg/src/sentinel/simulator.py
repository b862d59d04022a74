"""Tick-driven area-of-observation simulation.

A scenario scripts every object's movement as timed waypoints (linearly
interpolated), optionally leaving one object to be steered by an operator,
and declares ground-truth hostile windows per object.  Each tick the selected
network scores all objects, alarms are raised at the threshold, and an
append-only log records what happened.  Afterwards the log can be mined for
missed hostile events, which become labelled observations ready for
retraining.

The scenario generator builds desk-scale synthetic data: a protected landmass
sits along the eastern edge, benign traffic wanders the western half, and a
library of scripted attack runs approaches the protected edge, one attacking
object per pattern phase.  One pattern, the lurker, never enters the eastern
approach lane at all; it is deliberately excluded from the default set so a
model trained on the others will miss it, exercising the online-learning
loop.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dataset import DatasetMeta, Location, Observation, RawDataset
from .evaluation import (
    ConfusionMatrix,
    ErrorHistogram,
    confusion,
    error_histogram,
    write_confusion,
    write_histogram,
)
from .mlp import predict
from .netbank import NetworkBank

DEFAULT_THRESHOLD = 0.5
DEFAULT_EVENT_WINDOW = 30  # ticks of history packaged per missed event


class SimulatorError(Exception):
    pass


class ScenarioFormatError(SimulatorError):
    pass


@dataclass(frozen=True)
class Trajectory:
    """A scripted (waypoint) or operator-steered object path.

    Waypoint times are in simulated seconds; positions between waypoints are
    linearly interpolated, and the path holds still before the first and
    after the last waypoint.
    """

    object_index: int  # 1-based
    kind: str  # "waypoints" | "user"
    waypoints: tuple[tuple[float, Location], ...] = ()
    start: Location | None = None

    def __post_init__(self):
        if self.kind == "waypoints":
            if not self.waypoints:
                raise SimulatorError(f"object {self.object_index}: waypoint trajectory is empty")
            times = [t for t, _ in self.waypoints]
            if any(b < a for a, b in zip(times, times[1:])):
                raise SimulatorError(f"object {self.object_index}: waypoint times must not decrease")
        elif self.kind == "user":
            if self.start is None:
                raise SimulatorError(f"object {self.object_index}: user trajectory needs a start")
        else:
            raise SimulatorError(f"object {self.object_index}: unknown trajectory kind {self.kind!r}")

    def position_at(self, time: float) -> Location:
        if self.kind != "waypoints":
            raise SimulatorError("user-steered objects have no scripted position")
        points = self.waypoints
        if time <= points[0][0]:
            return points[0][1]
        if time >= points[-1][0]:
            return points[-1][1]
        for (t0, p0), (t1, p1) in zip(points, points[1:]):
            if t0 <= time <= t1:
                if t1 == t0:
                    return p1
                f = (time - t0) / (t1 - t0)
                return Location(p0.x + f * (p1.x - p0.x), p0.y + f * (p1.y - p0.y))
        raise SimulatorError("unreachable: waypoint bracketing failed")


@dataclass(frozen=True)
class HostileWindow:
    """Inclusive tick range during which an object is truly hostile."""

    start_tick: int
    end_tick: int

    def __post_init__(self):
        if self.end_tick < self.start_tick:
            raise SimulatorError(f"window ends ({self.end_tick}) before it starts ({self.start_tick})")

    def contains(self, tick: int) -> bool:
        return self.start_tick <= tick <= self.end_tick


@dataclass(frozen=True)
class Scenario:
    meta: DatasetMeta
    n_objects: int
    tick_interval: float
    trajectories: tuple[Trajectory, ...]
    ground_truth: tuple[tuple[int, tuple[HostileWindow, ...]], ...]
    seed: int = 0
    protected_edge: str = "east"

    def __post_init__(self):
        if self.tick_interval <= 0:
            raise SimulatorError(f"tick_interval must be > 0, got {self.tick_interval}")
        indices = [t.object_index for t in self.trajectories]
        if sorted(indices) != list(range(1, self.n_objects + 1)):
            raise SimulatorError(
                f"trajectories must cover objects 1..{self.n_objects} exactly, got {sorted(indices)}"
            )
        if sum(1 for t in self.trajectories if t.kind == "user") > 1:
            raise SimulatorError("at most one object may be user-steered")
        min_x, min_y, max_x, max_y = self.meta.area_bounds
        for t in self.trajectories:
            points = [p for _, p in t.waypoints] + ([t.start] if t.start else [])
            for p in points:
                if not (min_x <= p.x <= max_x and min_y <= p.y <= max_y):
                    raise SimulatorError(
                        f"object {t.object_index}: waypoint ({p.x}, {p.y}) outside area bounds"
                    )
        for obj, windows in self.ground_truth:
            if not 1 <= obj <= self.n_objects:
                raise SimulatorError(f"ground truth names object {obj}, outside 1..{self.n_objects}")
            for a, b in zip(windows, windows[1:]):
                if b.start_tick <= a.end_tick:
                    raise SimulatorError(f"object {obj}: hostile windows overlap or are out of order")

    def trajectory(self, object_index: int) -> Trajectory:
        for t in self.trajectories:
            if t.object_index == object_index:
                return t
        raise SimulatorError(f"no trajectory for object {object_index}")

    def user_object(self) -> int | None:
        for t in self.trajectories:
            if t.kind == "user":
                return t.object_index
        return None

    def windows_for(self, object_index: int) -> tuple[HostileWindow, ...]:
        for obj, windows in self.ground_truth:
            if obj == object_index:
                return windows
        return ()

    def truth_at(self, tick: int) -> frozenset[int]:
        return frozenset(
            obj for obj, windows in self.ground_truth if any(w.contains(tick) for w in windows)
        )


@dataclass(frozen=True)
class SteerCommand:
    """Operator steering: heading in degrees (0 = east, counterclockwise)."""

    heading_degrees: float
    speed: float

    def __post_init__(self):
        if not math.isfinite(self.heading_degrees) or not math.isfinite(self.speed):
            raise SimulatorError("steer command must be finite")
        if self.speed < 0:
            raise SimulatorError(f"speed must be >= 0, got {self.speed}")


@dataclass(frozen=True)
class WorldState:
    tick: int
    positions: tuple[Location, ...]
    last_prediction: tuple[float, ...]
    alarms: frozenset[int]


@dataclass(frozen=True)
class LogEntry:
    tick: int
    positions: tuple[Location, ...]
    predictions: tuple[float, ...]
    alarms: tuple[int, ...]
    command: SteerCommand | None
    truth: tuple[int, ...]


class EventLog:
    """Append-only per-tick record; ticks must strictly increase."""

    def __init__(self):
        self.entries: list[LogEntry] = []

    def append(self, entry: LogEntry):
        if self.entries and entry.tick <= self.entries[-1].tick:
            raise SimulatorError(
                f"log ticks must strictly increase: {entry.tick} after {self.entries[-1].tick}"
            )
        self.entries.append(entry)

    def __len__(self):
        return len(self.entries)

    def write(self, path):
        lines = []
        for e in self.entries:
            lines.append(json.dumps({
                "tick": e.tick,
                "positions": [[p.x, p.y] for p in e.positions],
                "predictions": list(e.predictions),
                "alarms": list(e.alarms),
                "command": None if e.command is None else
                    {"heading_degrees": e.command.heading_degrees, "speed": e.command.speed},
                "truth": list(e.truth),
            }, sort_keys=True))
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    @classmethod
    def read(cls, path) -> "EventLog":
        log = cls()
        for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                entry = LogEntry(
                    tick=obj["tick"],
                    positions=tuple(Location(x, y) for x, y in obj["positions"]),
                    predictions=tuple(obj["predictions"]),
                    alarms=tuple(obj["alarms"]),
                    command=None if obj["command"] is None else SteerCommand(**obj["command"]),
                    truth=tuple(obj["truth"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ScenarioFormatError(f"{path}: bad log entry on line {i} ({exc})") from exc
            log.append(entry)
        return log


def _clamp(value, lo, hi):
    return min(max(value, lo), hi)


def initial_state(scenario: Scenario, bank: NetworkBank,
                  threshold: float = DEFAULT_THRESHOLD) -> WorldState:
    """World state at tick zero, scored so the alarm invariant already holds."""
    record = bank.select(scenario.n_objects)
    positions = []
    for index in range(1, scenario.n_objects + 1):
        t = scenario.trajectory(index)
        positions.append(t.start if t.kind == "user" else t.position_at(0.0))
    positions = tuple(positions)
    prediction = tuple(float(p) for p in predict(record.network, positions, record.meta))
    alarms = frozenset(v + 1 for v, p in enumerate(prediction) if p >= threshold)
    return WorldState(tick=0, positions=positions, last_prediction=prediction, alarms=alarms)


def step(state: WorldState, scenario: Scenario, bank: NetworkBank,
         user_command: SteerCommand | None = None,
         threshold: float = DEFAULT_THRESHOLD) -> WorldState:
    """Advance one tick: move objects, rescore, recompute alarms.

    Scripted objects follow their waypoints; the user object moves by the
    given command for exactly this tick (callers that want course-holding
    repeat the last command) and is clamped to the area bounds.  Pure
    function of its arguments.
    """
    record = bank.select(scenario.n_objects)
    tick = state.tick + 1
    time = tick * scenario.tick_interval
    min_x, min_y, max_x, max_y = scenario.meta.area_bounds
    positions = []
    for index in range(1, scenario.n_objects + 1):
        t = scenario.trajectory(index)
        if t.kind == "user":
            current = state.positions[index - 1]
            if user_command is None:
                positions.append(current)
            else:
                theta = math.radians(user_command.heading_degrees)
                dx = user_command.speed * scenario.tick_interval * math.cos(theta)
                dy = user_command.speed * scenario.tick_interval * math.sin(theta)
                positions.append(Location(
                    _clamp(current.x + dx, min_x, max_x),
                    _clamp(current.y + dy, min_y, max_y),
                ))
        else:
            positions.append(t.position_at(time))
    positions = tuple(positions)
    prediction = tuple(float(p) for p in predict(record.network, positions, record.meta))
    alarms = frozenset(v + 1 for v, p in enumerate(prediction) if p >= threshold)
    return WorldState(tick=tick, positions=positions, last_prediction=prediction, alarms=alarms)


class Simulation:
    """Owns the world state and event log for one scenario run."""

    def __init__(self, scenario: Scenario, bank: NetworkBank,
                 threshold: float = DEFAULT_THRESHOLD):
        self.scenario = scenario
        self.bank = bank
        self.threshold = threshold
        self.state = initial_state(scenario, bank, threshold)
        self.log = EventLog()

    def step(self, user_command: SteerCommand | None = None) -> WorldState:
        self.state = step(self.state, self.scenario, self.bank, user_command, self.threshold)
        self.log.append(LogEntry(
            tick=self.state.tick,
            positions=self.state.positions,
            predictions=self.state.last_prediction,
            alarms=tuple(sorted(self.state.alarms)),
            command=user_command,
            truth=tuple(sorted(self.scenario.truth_at(self.state.tick))),
        ))
        return self.state


@dataclass(frozen=True)
class MissedEvent:
    """A ground-truth hostile window that never raised an alarm."""

    object_index: int
    window: HostileWindow
    observations: tuple[Observation, ...]


def detect_missed_event(log: EventLog, scenario: Scenario,
                        window_len: int = DEFAULT_EVENT_WINDOW) -> list[MissedEvent]:
    """Find hostile windows whose object never alarmed, packaged for retraining.

    Each miss carries the last ``window_len`` logged ticks of the window as
    observations labelled 1.0 for the missed object and 0.0 for everyone
    else (labels are per-window, independent of any overlapping window).
    """
    by_tick = {e.tick: e for e in log.entries}
    missed = []
    for obj, windows in scenario.ground_truth:
        for window in windows:
            ticks = [t for t in range(window.start_tick, window.end_tick + 1) if t in by_tick]
            if not ticks:
                continue
            if any(obj in by_tick[t].alarms for t in ticks):
                continue
            tail = ticks[-window_len:]
            observations = tuple(
                Observation(
                    locations=by_tick[t].positions,
                    hostility=tuple(1.0 if v == obj else 0.0
                                    for v in range(1, scenario.n_objects + 1)),
                )
                for t in tail
            )
            missed.append(MissedEvent(object_index=obj, window=window, observations=observations))
    return missed


@dataclass(frozen=True)
class HeadlessReport:
    confusion: ConfusionMatrix
    histogram: ErrorHistogram


def run_headless(scenario: Scenario, bank: NetworkBank, ticks: int,
                 threshold: float = DEFAULT_THRESHOLD,
                 stand_in: Trajectory | None = None,
                 out_dir=None) -> tuple[EventLog, HeadlessReport | None]:
    """Run a scenario without an operator and score it against ground truth.

    A scenario containing a user-steered object needs a scripted stand-in
    trajectory.  With ``out_dir`` set, per-object confusion counts and the
    error histogram are written there as delimited text and rendered figures.
    """
    user = scenario.user_object()
    if user is not None:
        if stand_in is None:
            raise SimulatorError(
                f"object {user} is user-steered; provide a scripted stand-in trajectory"
            )
        if stand_in.kind != "waypoints" or stand_in.object_index != user:
            raise SimulatorError(f"stand-in must be a waypoint trajectory for object {user}")
        scenario = replace(
            scenario,
            trajectories=tuple(stand_in if t.object_index == user else t
                               for t in scenario.trajectories),
        )

    sim = Simulation(scenario, bank, threshold)
    for _ in range(ticks):
        sim.step()

    report = None
    if sim.log.entries:
        record = bank.select(scenario.n_objects)
        records = [
            Observation(
                locations=e.positions,
                hostility=tuple(1.0 if v in e.truth else 0.0
                                for v in range(1, scenario.n_objects + 1)),
            )
            for e in sim.log.entries
        ]
        cm = confusion(record.network, records, record.meta, mode="threshold", threshold=threshold)
        hist = error_histogram(record.network, records, record.meta)
        report = HeadlessReport(confusion=cm, histogram=hist)
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            sim.log.write(out / "eventlog.jsonl")
            write_confusion(cm, out / "confusion.tsv")
            write_histogram(hist, out / "histogram.tsv")
            from .figures import render_confusion, render_histogram
            render_confusion(cm, out / "confusion.png")
            render_histogram(hist, out / "histogram.png")
    elif out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        sim.log.write(out / "eventlog.jsonl")
    return sim.log, report


# ---------------------------------------------------------------------------
# Synthetic scenario generation.
#
# World geometry (area 1000 x 1000, protected landmass on the east edge):
#   benign lane     x in [40, 600],  y in [200, 950]   wandering traffic
#   approach lane   x in [620, 985], y in [300, 700]   scripted attack runs
#   lurk pocket     around (450, 100)                  south lane, kept empty
# The south lane stays clear of benign traffic so the lurker pattern is truly
# novel to a model trained without it.
# ---------------------------------------------------------------------------

BENIGN_REGION = (40.0, 200.0, 600.0, 950.0)
APPROACH_X = (620.0, 985.0)
APPROACH_Y = (300.0, 700.0)
LURK_POINT = (450.0, 100.0)

PHASE_TICKS = 100
_PRE_TICKS = 40       # approach to the lane entry
_HOSTILE_TICKS = 50   # inside the lane / holding the lurk point
ATTACK_PATTERNS = ("straight_run", "arc_approach", "feint_turn", "zigzag", "dash")
HOLDOUT_PATTERN = "lurker"


@dataclass(frozen=True)
class ScenarioSpec:
    n_objects: int
    n_patterns: int
    records_per_pattern: int
    seed: int
    total_records: int | None = None
    patterns: tuple[str, ...] | None = None
    area_bounds: tuple[float, float, float, float] = (0.0, 0.0, 1000.0, 1000.0)
    tick_interval: float = 1.0

    def __post_init__(self):
        if self.n_objects < 1:
            raise SimulatorError(f"n_objects must be >= 1, got {self.n_objects}")
        if not 1 <= self.n_patterns <= self.n_objects:
            raise SimulatorError(
                f"n_patterns must be in [1, n_objects]; got {self.n_patterns} for {self.n_objects} objects"
            )
        if self.records_per_pattern < 1:
            raise SimulatorError("records_per_pattern must be >= 1")
        names = self.pattern_names()
        if len(names) != self.n_patterns:
            raise SimulatorError(f"{self.n_patterns} patterns requested but {len(names)} names given")
        known = set(ATTACK_PATTERNS) | {HOLDOUT_PATTERN}
        for name in names:
            if name not in known:
                raise SimulatorError(f"unknown attack pattern {name!r}; known: {sorted(known)}")

    def pattern_names(self) -> tuple[str, ...]:
        if self.patterns is not None:
            return self.patterns
        return ATTACK_PATTERNS[: self.n_patterns]

    def record_total(self) -> int:
        return self.total_records if self.total_records is not None else (
            self.n_patterns * self.records_per_pattern
        )


def _benign_point(rng) -> Location:
    return Location(
        rng.uniform(BENIGN_REGION[0], BENIGN_REGION[2]),
        rng.uniform(BENIGN_REGION[1], BENIGN_REGION[3]),
    )


def _central_y(rng, lo=380.0, hi=620.0) -> float:
    return rng.uniform(lo, hi)


def _attack_path(name: str, rng) -> tuple[list[Location], list[Location], list[Location]]:
    """Pre-approach, hostile and retreat point lists for one attack run."""
    if name == "straight_run":
        y0, y1 = _central_y(rng), _central_y(rng)
        entry = Location(APPROACH_X[0], y0)
        hostile = [entry, Location(975.0, y1)]
    elif name == "arc_approach":
        low = bool(rng.integers(0, 2))
        y_a = rng.uniform(310.0, 390.0) if low else rng.uniform(610.0, 690.0)
        y_mid = rng.uniform(420.0, 580.0)
        entry = Location(APPROACH_X[0], y_a)
        hostile = [entry, Location(790.0, y_mid), Location(975.0, _central_y(rng, 440.0, 560.0))]
    elif name == "feint_turn":
        y0 = _central_y(rng)
        swing = rng.uniform(90.0, 140.0) * (1 if y0 < 500.0 else -1)
        entry = Location(APPROACH_X[0], y0)
        hostile = [entry, Location(770.0, _clamp(y0 + swing, *APPROACH_Y)), Location(975.0, _central_y(rng))]
    elif name == "zigzag":
        y0 = _central_y(rng, 420.0, 580.0)
        amp = rng.uniform(70.0, 110.0)
        entry = Location(APPROACH_X[0], y0)
        hostile = [
            entry,
            Location(705.0, _clamp(y0 + amp, *APPROACH_Y)),
            Location(790.0, _clamp(y0 - amp, *APPROACH_Y)),
            Location(875.0, _clamp(y0 + amp, *APPROACH_Y)),
            Location(975.0, y0),
        ]
    elif name == "dash":
        y0 = _central_y(rng, 460.0, 540.0)
        entry = Location(APPROACH_X[0], y0)
        hostile = [entry, Location(985.0, y0 + rng.uniform(-25.0, 25.0))]
    elif name == HOLDOUT_PATTERN:
        cx, cy = LURK_POINT
        hold = Location(cx + rng.uniform(-8.0, 8.0), cy + rng.uniform(-8.0, 8.0))
        entry = hold
        hostile = [hold, Location(hold.x + rng.uniform(-6.0, 6.0), hold.y + rng.uniform(-6.0, 6.0)),
                   Location(hold.x + rng.uniform(-6.0, 6.0), hold.y + rng.uniform(-6.0, 6.0))]
    else:
        raise SimulatorError(f"unknown attack pattern {name!r}")
    start = _benign_point(rng)
    pre = [start, entry]
    retreat = [hostile[-1], _benign_point(rng)]
    return pre, hostile, retreat


def _path_sample(points: list[Location], fraction: float) -> Location:
    """Point at a fraction of the way along a polyline, by segment length."""
    if len(points) == 1:
        return points[0]
    lengths = [math.dist((a.x, a.y), (b.x, b.y)) for a, b in zip(points, points[1:])]
    total = sum(lengths)
    if total == 0:
        return points[0]
    target = fraction * total
    for (a, b), seg in zip(zip(points, points[1:]), lengths):
        if target <= seg or seg == lengths[-1]:
            f = 0.0 if seg == 0 else min(target / seg, 1.0)
            return Location(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
        target -= seg
    return points[-1]


def _wander_waypoints(rng, start_tick: int, end_tick: int, tick_interval: float,
                      start: Location | None = None) -> list[tuple[float, Location]]:
    """Benign drift: a new leg every 20-35 ticks inside the benign region."""
    points = [(start_tick * tick_interval, start if start is not None else _benign_point(rng))]
    tick = start_tick
    while tick < end_tick:
        tick = min(tick + int(rng.integers(20, 36)), end_tick)
        points.append((tick * tick_interval, _benign_point(rng)))
    return points


def generate_scenario(spec: ScenarioSpec) -> tuple[Scenario, RawDataset]:
    """Synthesize a scripted scenario and a matching raw training dataset.

    The scenario runs one phase per pattern; in phase p object p enters its
    attack run while everyone else wanders, and the phase's hostile ticks
    become that object's ground-truth window.  The dataset is built from the
    same pattern geometry: each record drops the attacker somewhere along its
    hostile path (with a little jitter) among independently placed benign
    objects, labelled 1.0 for the attacker and 0.0 for the rest.
    """
    rng = np.random.default_rng(spec.seed)
    meta = DatasetMeta(area_bounds=spec.area_bounds, coordinate_scale="none", seed=spec.seed)
    names = spec.pattern_names()

    # --- dataset records ---------------------------------------------------
    total = spec.record_total()
    base = total // spec.n_patterns
    extras = total % spec.n_patterns
    records = []
    for p, name in enumerate(names):
        count = base + (1 if p < extras else 0)
        attacker = p  # 0-based object slot for this pattern
        for r in range(count):
            _, hostile_path, _ = _attack_path(name, rng)
            fraction = (r + 0.5) / count
            spot = _path_sample(hostile_path, fraction)
            jx = _clamp(spot.x + rng.normal(0.0, 5.0),
                        spec.area_bounds[0] + 1.0, spec.area_bounds[2] - 1.0)
            jy = _clamp(spot.y + rng.normal(0.0, 5.0),
                        spec.area_bounds[1] + 1.0, spec.area_bounds[3] - 1.0)
            locations = [_benign_point(rng) for _ in range(spec.n_objects)]
            locations[attacker] = Location(jx, jy)
            hostility = [0.0] * spec.n_objects
            hostility[attacker] = 1.0
            records.append(Observation(locations=tuple(locations), hostility=tuple(hostility)))
    raw = RawDataset(n_objects=spec.n_objects, groups=(tuple(records),), meta=meta)

    # --- scripted scenario ---------------------------------------------------
    total_ticks = spec.n_patterns * PHASE_TICKS
    trajectories = []
    ground_truth = []
    for index in range(1, spec.n_objects + 1):
        p = index - 1
        if p < spec.n_patterns:
            phase_start = p * PHASE_TICKS
            pre, hostile, retreat = _attack_path(names[p], rng)
            points: list[tuple[float, Location]] = []
            if phase_start > 0:
                points.extend(_wander_waypoints(rng, 0, phase_start, spec.tick_interval,
                                                start=pre[0]))
            hostile_start = phase_start + _PRE_TICKS
            hostile_end = phase_start + _PRE_TICKS + _HOSTILE_TICKS - 1
            # the wander (if any) is pulled back to the attack start here: the
            # dedup below keeps the later point for a duplicated timestamp
            points.append((phase_start * spec.tick_interval, pre[0]))
            points.append((hostile_start * spec.tick_interval, hostile[0]))
            span = hostile_end - hostile_start
            for i, point in enumerate(hostile[1:], start=1):
                t = hostile_start + span * i / (len(hostile) - 1)
                points.append((t * spec.tick_interval, point))
            phase_end = phase_start + PHASE_TICKS
            points.append((phase_end * spec.tick_interval, retreat[-1]))
            if phase_end < total_ticks:
                points.extend(_wander_waypoints(rng, phase_end, total_ticks,
                                                spec.tick_interval, start=retreat[-1]))
            # drop duplicated timestamps introduced at phase joins
            deduped = [points[0]]
            for t, loc in points[1:]:
                if t > deduped[-1][0]:
                    deduped.append((t, loc))
                else:
                    deduped[-1] = (t, loc)
            trajectories.append(Trajectory(object_index=index, kind="waypoints",
                                           waypoints=tuple(deduped)))
            ground_truth.append((index, (HostileWindow(hostile_start, hostile_end),)))
        else:
            trajectories.append(Trajectory(
                object_index=index, kind="waypoints",
                waypoints=tuple(_wander_waypoints(rng, 0, total_ticks, spec.tick_interval)),
            ))
    scenario = Scenario(
        meta=meta,
        n_objects=spec.n_objects,
        tick_interval=spec.tick_interval,
        trajectories=tuple(trajectories),
        ground_truth=tuple(ground_truth),
        seed=spec.seed,
    )
    return scenario, raw


# ---------------------------------------------------------------------------
# Scenario file format: one JSON document (see docs/formats.md).
# ---------------------------------------------------------------------------

def write_scenario(scenario: Scenario, path):
    doc = {
        "n_objects": scenario.n_objects,
        "tick_interval": scenario.tick_interval,
        "seed": scenario.seed,
        "meta_seed": scenario.meta.seed,
        "protected_edge": scenario.protected_edge,
        "area_bounds": list(scenario.meta.area_bounds),
        "trajectories": [
            {
                "object": t.object_index,
                "kind": t.kind,
                **({"points": [[time, p.x, p.y] for time, p in t.waypoints]}
                   if t.kind == "waypoints" else {"start": [t.start.x, t.start.y]}),
            }
            for t in scenario.trajectories
        ],
        "hostile_windows": [
            {"object": obj, "windows": [[w.start_tick, w.end_tick] for w in windows]}
            for obj, windows in scenario.ground_truth
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_scenario(path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}: not valid JSON ({exc})") from exc
    try:
        trajectories = []
        for t in doc["trajectories"]:
            if t["kind"] == "waypoints":
                trajectories.append(Trajectory(
                    object_index=t["object"], kind="waypoints",
                    waypoints=tuple((time, Location(x, y)) for time, x, y in t["points"]),
                ))
            else:
                trajectories.append(Trajectory(
                    object_index=t["object"], kind=t["kind"],
                    start=Location(*t["start"]),
                ))
        ground_truth = tuple(
            (w["object"], tuple(HostileWindow(a, b) for a, b in w["windows"]))
            for w in doc["hostile_windows"]
        )
        return Scenario(
            meta=DatasetMeta(area_bounds=tuple(doc["area_bounds"]),
                             coordinate_scale="none",
                             seed=doc.get("meta_seed", doc["seed"])),
            n_objects=doc["n_objects"],
            tick_interval=doc["tick_interval"],
            trajectories=tuple(trajectories),
            ground_truth=ground_truth,
            seed=doc["seed"],
            protected_edge=doc.get("protected_edge", "east"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"{path}: malformed scenario ({exc})") from exc
