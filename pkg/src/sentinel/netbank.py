"""A bank of trained networks, one per object count, with versioned storage.

A network can only serve the object count it was shaped for, so deployment
keeps one model per N and picks the right one at runtime.  After a missed
hostile event the bank appends the event's observations to the stored raw
dataset as a fresh group, re-expands it, and retrains from the current
weights; the new version is published atomically and every prior version
stays on disk.

On-disk layout, rooted at the bank directory:

    n<N>/dataset.raw        raw training data (dataset text format)
    n<N>/v<version>.model   network weights (model text format)
    n<N>/v<version>.json    record metadata: meta, provenance, report summary
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import asdict, dataclass
from pathlib import Path

from .dataset import (
    DatasetMeta,
    FullPermutations,
    RawDataset,
    SampledPermutations,
    content_digest,
    normalize,
    read_raw,
    scale_coordinates,
    split,
    write_raw,
)
from .mlp import (
    Network,
    TrainConfig,
    init,
    load_model,
    predict,
    save_model,
    train_early_stop,
)


class NetbankError(Exception):
    pass


class MissingModelError(NetbankError):
    """No trained model for this object count."""

    def __init__(self, n_objects: int):
        super().__init__(
            f"no model for {n_objects} objects; train a network with {2 * n_objects} inputs first"
        )
        self.n_objects = n_objects


@dataclass(frozen=True)
class TrainingProvenance:
    """Where a record's weights came from: data identity, config, outcome."""

    dataset_digest: str
    policy: str
    split_seed: int
    train_config: TrainConfig
    stop_epoch: int
    best_epoch: int
    best_validation_mse: float


@dataclass(frozen=True)
class ModelRecord:
    n_objects: int
    network: Network
    meta: DatasetMeta
    version: int
    provenance: TrainingProvenance

    def __post_init__(self):
        if self.network.config.n_objects != self.n_objects:
            raise NetbankError(
                f"record for {self.n_objects} objects holds a network for "
                f"{self.network.config.n_objects}"
            )
        if self.version < 1:
            raise NetbankError(f"versions start at 1, got {self.version}")


def _policy_from_tag(tag: str):
    if tag == "full":
        return FullPermutations()
    m = re.fullmatch(r"sample:(\d+):(-?\d+)", tag)
    if not m:
        raise NetbankError(f"unrecognised permutation policy tag {tag!r}")
    return SampledPermutations(count=int(m.group(1)), seed=int(m.group(2)))


def _record_meta_path(model_path: Path) -> Path:
    return model_path.with_suffix(".json")


def _write_record(record: ModelRecord, model_path: Path):
    save_model(record.network, model_path)
    payload = {
        "n_objects": record.n_objects,
        "version": record.version,
        "meta": {
            "area_bounds": list(record.meta.area_bounds),
            "coordinate_scale": record.meta.coordinate_scale,
            "seed": record.meta.seed,
        },
        "provenance": {
            "dataset_digest": record.provenance.dataset_digest,
            "policy": record.provenance.policy,
            "split_seed": record.provenance.split_seed,
            "train_config": asdict(record.provenance.train_config),
            "stop_epoch": record.provenance.stop_epoch,
            "best_epoch": record.provenance.best_epoch,
            "best_validation_mse": record.provenance.best_validation_mse,
        },
    }
    _record_meta_path(model_path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _read_record(model_path: Path) -> ModelRecord:
    network = load_model(model_path)
    meta_path = _record_meta_path(model_path)
    if not meta_path.exists():
        raise NetbankError(f"{model_path}: missing record metadata {meta_path.name}")
    try:
        payload = json.loads(meta_path.read_text(encoding="utf-8"))
        meta = DatasetMeta(
            area_bounds=tuple(payload["meta"]["area_bounds"]),
            coordinate_scale=payload["meta"]["coordinate_scale"],
            seed=payload["meta"]["seed"],
        )
        prov = payload["provenance"]
        provenance = TrainingProvenance(
            dataset_digest=prov["dataset_digest"],
            policy=prov["policy"],
            split_seed=prov["split_seed"],
            train_config=TrainConfig(**prov["train_config"]),
            stop_epoch=prov["stop_epoch"],
            best_epoch=prov["best_epoch"],
            best_validation_mse=prov["best_validation_mse"],
        )
        return ModelRecord(
            n_objects=payload["n_objects"],
            network=network,
            meta=meta,
            version=payload["version"],
            provenance=provenance,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise NetbankError(f"{meta_path}: corrupt record metadata ({exc})") from exc


class NetworkBank:
    """Trained models keyed by object count, persisted under one root."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._records: dict[int, ModelRecord] = {}
        self._lock = threading.Lock()
        self._retraining: set[int] = set()

    # -- selection ---------------------------------------------------------

    def select(self, n_objects: int) -> ModelRecord:
        """Latest record for this object count, or MissingModelError."""
        with self._lock:
            record = self._records.get(n_objects)
        if record is None:
            raise MissingModelError(n_objects)
        return record

    def object_counts(self) -> tuple[int, ...]:
        with self._lock:
            return tuple(sorted(self._records))

    # -- installation ------------------------------------------------------

    def _slot_dir(self, n_objects: int) -> Path:
        return self.root / f"n{n_objects}"

    def dataset_path(self, n_objects: int) -> Path:
        return self._slot_dir(n_objects) / "dataset.raw"

    def model_path(self, n_objects: int, version: int) -> Path:
        return self._slot_dir(n_objects) / f"v{version}.model"

    def install(self, record: ModelRecord, raw: RawDataset | None = None):
        """Write a record to disk and publish it as the latest for its N.

        A raw dataset must accompany the first record for an object count; it
        is what future retraining extends.  Existing versions are never
        overwritten.
        """
        slot = self._slot_dir(record.n_objects)
        slot.mkdir(parents=True, exist_ok=True)
        model_path = self.model_path(record.n_objects, record.version)
        if model_path.exists():
            raise NetbankError(f"{model_path} already exists; versions are immutable")
        if raw is not None:
            if raw.n_objects != record.n_objects:
                raise NetbankError(
                    f"raw dataset has {raw.n_objects} objects, record serves {record.n_objects}"
                )
            write_raw(raw, self.dataset_path(record.n_objects))
        elif not self.dataset_path(record.n_objects).exists():
            raise NetbankError(
                f"first record for {record.n_objects} objects needs its raw dataset"
            )
        _write_record(record, model_path)
        with self._lock:
            current = self._records.get(record.n_objects)
            if current is None or record.version > current.version:
                self._records[record.n_objects] = record

    # -- online retraining ---------------------------------------------------

    def retrain_from_event(self, n_objects: int, event_records, *,
                           full_retrain: bool = False,
                           relearn_threshold: float = 0.5) -> ModelRecord:
        """Learn from a missed hostile event and publish the next version.

        The event observations join the stored raw dataset as a new group,
        the whole set is re-expanded with the stored permutation policy, and
        training continues from the current weights (or from scratch when
        ``full_retrain`` is set).  A missed event means the current model is
        confidently wrong there, and a confidently-wrong sigmoid output has a
        near-zero gradient, so a warm start can stall; if the warm-started
        model still scores every event observation below
        ``relearn_threshold``, training restarts from fresh weights on the
        same extended dataset.  On divergence the old record stays published
        and the error propagates.
        """
        event_records = tuple(event_records)
        if not event_records:
            raise NetbankError("event_records is empty; nothing to learn from")
        for i, obs in enumerate(event_records, start=1):
            if len(obs.locations) != n_objects:
                raise NetbankError(
                    f"event record {i} has {len(obs.locations)} objects, expected {n_objects}"
                )
        if not any(h == 1.0 for obs in event_records for h in obs.hostility):
            raise NetbankError("event records carry no hostile label; nothing to learn from")

        current = self.select(n_objects)
        with self._lock:
            if n_objects in self._retraining:
                raise NetbankError(f"a retrain for {n_objects} objects is already running")
            self._retraining.add(n_objects)
        try:
            raw = read_raw(self.dataset_path(n_objects))
            extended = RawDataset(
                n_objects=raw.n_objects,
                groups=raw.groups + (event_records,),
                meta=raw.meta,
            )
            policy = _policy_from_tag(current.provenance.policy)
            normalized = normalize(extended, policy)
            scaled = scale_coordinates(normalized)
            assignment = split(scaled, current.provenance.split_seed)
            tc = current.provenance.train_config
            start = init(current.network.config) if full_retrain else current.network
            trained, report = train_early_stop(start, scaled, assignment, tc)
            if not full_retrain and not self._event_learned(
                    trained, current.meta, event_records, relearn_threshold):
                trained, report = train_early_stop(
                    init(current.network.config), scaled, assignment, tc)

            record = ModelRecord(
                n_objects=n_objects,
                network=trained,
                meta=current.meta,
                version=current.version + 1,
                provenance=TrainingProvenance(
                    dataset_digest=content_digest(extended),
                    policy=current.provenance.policy,
                    split_seed=current.provenance.split_seed,
                    train_config=tc,
                    stop_epoch=report.stop_epoch,
                    best_epoch=report.best_epoch,
                    best_validation_mse=report.best_validation_mse,
                ),
            )
            # Persist the extended dataset only together with the new record,
            # so a diverged run leaves the slot exactly as it was.
            write_raw(extended, self.dataset_path(n_objects))
            _write_record(record, self.model_path(n_objects, record.version))
            with self._lock:
                self._records[n_objects] = record
            return record
        finally:
            with self._lock:
                self._retraining.discard(n_objects)

    @staticmethod
    def _event_learned(network: Network, meta: DatasetMeta, event_records,
                       threshold: float) -> bool:
        """Would replaying the event raise an alarm on any marked object?"""
        for obs in event_records:
            scores = predict(network, obs.locations, meta)
            if any(h == 1.0 and score >= threshold
                   for h, score in zip(obs.hostility, scores)):
                return True
        return False

    # -- persistence ---------------------------------------------------------

    def save(self):
        """No-op beyond a sanity check: records are written as installed."""
        for n, record in list(self._records.items()):
            if not self.model_path(n, record.version).exists():
                raise NetbankError(f"record n{n} v{record.version} missing on disk")

    @classmethod
    def load(cls, root) -> "NetworkBank":
        """Read every slot under root, keeping the highest version per N."""
        bank = cls(root)
        for slot in sorted(bank.root.glob("n*")):
            if not slot.is_dir():
                continue
            m = re.fullmatch(r"n(\d+)", slot.name)
            if not m:
                raise NetbankError(f"unexpected entry {slot} in bank root")
            n_objects = int(m.group(1))
            versions = []
            for model_path in slot.glob("v*.model"):
                vm = re.fullmatch(r"v(\d+)\.model", model_path.name)
                if not vm:
                    raise NetbankError(f"unexpected model file name {model_path}")
                versions.append((int(vm.group(1)), model_path))
            if not versions:
                continue
            version, model_path = max(versions)
            record = _read_record(model_path)
            if record.n_objects != n_objects or record.version != version:
                raise NetbankError(f"{model_path}: metadata disagrees with its location")
            bank._records[n_objects] = record
        return bank
