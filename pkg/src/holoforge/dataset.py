"""The dataset factory: enumerate scene configurations, fuse every
indoor/outdoor pair, label and annotate the results, split them into
reproducible train/test folds, and emit a checksummed manifest.

Cardinality with the stock 13-object registry and 50 soil patches:
13*2*4*2 = 208 indoor configs times 200 outdoor captures = 41,600 fused
records, plus 200 soil-only background records, 41,800 in total.
"""

from __future__ import annotations

import dataclasses
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import io as hio
from .angular import PropagationParams, reconstruct_volume
from .annotations import BBox, make_annotation, rle_decode, rle_encode
from .fusion import DEFAULT_ALPHA, fuse
from .gridding import GridSpec
from .model import (
    CARDINALS,
    ComplexField2D,
    INDOOR_HEIGHTS_MM,
    INDOOR_SLOPES_DEG,
    IndoorConfig,
    ObjectRegistry,
    OutdoorConfig,
)
from .validation import check_unit_interval

TASKS = ("binary", "ternary", "multi")
MINE_LABEL = "mine"
NON_MINE_LABEL = "non-mine"
BACKGROUND_LABEL = "background"

MANIFEST_SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"
HOLOGRAM_DIR = "holograms"
VOLUME_DIR = "volumes"

_OUTDOOR_NAME_RE = re.compile(r"^soil(\d+)_([NSWE])\.hgrm$")


class GenerationError(ValueError):
    """The factory inputs are incomplete or inconsistent."""


class ManifestError(ValueError):
    """A manifest fails validation against its own files or invariants."""


def round_half_up(x: float) -> int:
    """Round to the nearest integer with halves going up."""
    return math.floor(x + 0.5)


def enumerate_indoor(registry: ObjectRegistry) -> list[IndoorConfig]:
    """Every controlled-scene configuration, in deterministic order.

    The order is lexicographic over (registry position, height, facing,
    slope) with facings ordered N, S, W, E; each object contributes
    2*4*2 = 16 configurations.
    """
    configs = []
    for obj in registry:
        for h in INDOOR_HEIGHTS_MM:
            for orientation in CARDINALS:
                for s in INDOOR_SLOPES_DEG:
                    configs.append(
                        IndoorConfig(obj.object_id, h, orientation, s)
                    )
    return configs


def enumerate_outdoor(n_patches: int = 50) -> list[OutdoorConfig]:
    """Every soil capture: each patch scanned in N, S, W, E order."""
    n = int(n_patches)
    if n < 0:
        raise ValueError(f"n_patches must be non-negative, got {n_patches!r}")
    return [
        OutdoorConfig(patch, direction)
        for patch in range(1, n + 1)
        for direction in CARDINALS
    ]


def discover_outdoor(scan_dir: str | Path) -> list[OutdoorConfig]:
    """Infer the outdoor capture set from the files present in a directory.

    Files must follow the soilNN_D.hgrm naming rule and every discovered
    patch must be present in all four directions.
    """
    scan_dir = Path(scan_dir)
    patches: dict[int, set[str]] = {}
    for entry in scan_dir.iterdir():
        m = _OUTDOOR_NAME_RE.match(entry.name)
        if m:
            patches.setdefault(int(m.group(1)), set()).add(m.group(2))
    if not patches:
        raise GenerationError(f"no outdoor scans (soilNN_D.hgrm) found in {scan_dir}")
    for patch in sorted(patches):
        missing = set(CARDINALS) - patches[patch]
        if missing:
            raise GenerationError(
                f"outdoor patch {patch} is missing directions {sorted(missing)}"
            )
    return [
        OutdoorConfig(patch, direction)
        for patch in sorted(patches)
        for direction in CARDINALS
    ]


def make_labels(object_id: str | None, registry: ObjectRegistry) -> dict[str, str]:
    """Label triplet for one record.

    binary separates mines from everything else; ternary is the object
    category with soil-only records as a distinct background class; multi is
    the object id (background again for soil-only).
    """
    if object_id is None:
        return {
            "binary": NON_MINE_LABEL,
            "ternary": BACKGROUND_LABEL,
            "multi": BACKGROUND_LABEL,
        }
    obj = registry.get(object_id)
    return {
        "binary": MINE_LABEL if obj.category == MINE_LABEL else NON_MINE_LABEL,
        "ternary": obj.category,
        "multi": obj.object_id,
    }


@dataclass(frozen=True)
class SplitSpec:
    """How to fold a dataset: which task, what train share, which seed."""

    task: str
    train_fraction: float = 0.8
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        frac = float(self.train_fraction)
        if not 0.0 < frac < 1.0:
            raise ValueError(
                f"train_fraction must lie strictly inside (0, 1), got {frac!r}"
            )
        object.__setattr__(self, "train_fraction", frac)
        object.__setattr__(self, "rng_seed", int(self.rng_seed))


@dataclass(frozen=True, eq=False)
class SplitAssignment:
    """A concrete fold: every sample id mapped to train or test."""

    task: str
    rng_seed: int
    train_fraction: float
    assignments: dict[str, str]

    def __post_init__(self) -> None:
        bad = {v for v in self.assignments.values()} - {"train", "test"}
        if bad:
            raise ValueError(f"assignments must map to train/test, found {sorted(bad)}")

    def side(self, sample_id: str) -> str:
        return self.assignments[sample_id]

    def train_ids(self) -> list[str]:
        return sorted(k for k, v in self.assignments.items() if v == "train")

    def test_ids(self) -> list[str]:
        return sorted(k for k, v in self.assignments.items() if v == "test")


@dataclass(frozen=True, eq=False)
class SampleRecord:
    """One dataset sample: its scene provenance, artifact paths, labels,
    annotation, fold assignments, and file checksums.

    Soil-only records (indoor is None) carry no annotation and the
    background label.
    """

    sample_id: str
    indoor: IndoorConfig | None
    outdoor: OutdoorConfig
    alpha: float
    hologram_path: str
    volume_path: str | None
    labels: dict[str, str]
    annotation: BBox | None
    splits: dict[str, str] = field(default_factory=dict)
    checksums: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.sample_id:
            raise ValueError("sample_id must be non-empty")
        object.__setattr__(self, "alpha", check_unit_interval(self.alpha, "alpha"))
        if set(self.labels) != set(TASKS):
            raise ValueError(f"labels must cover exactly {TASKS}, got {sorted(self.labels)}")
        if self.indoor is None:
            if self.annotation is not None:
                raise ValueError("soil-only records must not carry an annotation")
            if self.labels["ternary"] != BACKGROUND_LABEL:
                raise ValueError("soil-only records must carry the background label")
        elif self.annotation is None:
            raise ValueError("object records must carry an annotation")
        bad_tasks = set(self.splits) - set(TASKS)
        if bad_tasks:
            raise ValueError(f"unknown split tasks {sorted(bad_tasks)}")
        bad_sides = set(self.splits.values()) - {"train", "test"}
        if bad_sides:
            raise ValueError(f"split sides must be train/test, got {sorted(bad_sides)}")

    @property
    def is_soil_only(self) -> bool:
        return self.indoor is None


def _fused_object_ids(records: list[SampleRecord]) -> dict[str, list[str]]:
    """Object ids of the non-background records, grouped by ternary label,
    sorted for deterministic RNG consumption."""
    by_category: dict[str, set[str]] = {}
    for rec in records:
        if rec.indoor is not None:
            by_category.setdefault(rec.labels["ternary"], set()).add(
                rec.indoor.object_id
            )
    return {cat: sorted(ids) for cat, ids in sorted(by_category.items())}


def _split_soil_only(
    records: list[SampleRecord], rng: np.random.Generator, train_fraction: float
) -> dict[str, str]:
    """Record-level 80/20 fold of the background samples."""
    ids = sorted(rec.sample_id for rec in records if rec.is_soil_only)
    sides: dict[str, str] = {}
    if ids:
        order = rng.permutation(len(ids))
        n_train = round_half_up(train_fraction * len(ids))
        train = {ids[i] for i in order[:n_train]}
        sides = {sid: ("train" if sid in train else "test") for sid in ids}
    return sides


def split_object_disjoint(
    records: list[SampleRecord], spec: SplitSpec
) -> SplitAssignment:
    """Fold records so no buried object straddles train and test.

    Objects are partitioned per category (round-half-up share to train), so
    all 16 configurations of an object land on one side; soil patches are
    not a split dimension and may back fused records on both sides.
    Soil-only records are folded at the record level with the same share.
    """
    rng = np.random.default_rng(spec.rng_seed)
    train_objects: set[str] = set()
    for _category, ids in _fused_object_ids(records).items():
        order = rng.permutation(len(ids))
        n_train = round_half_up(spec.train_fraction * len(ids))
        train_objects.update(ids[i] for i in order[:n_train])
    assignments = _split_soil_only(records, rng, spec.train_fraction)
    for rec in records:
        if rec.indoor is not None:
            side = "train" if rec.indoor.object_id in train_objects else "test"
            assignments[rec.sample_id] = side
    return SplitAssignment(spec.task, spec.rng_seed, spec.train_fraction, assignments)


def split_config_grouped(
    records: list[SampleRecord], spec: SplitSpec
) -> SplitAssignment:
    """Fold records so each full scene configuration stays on one side.

    The grouping key is (object id, height, facing, slope): all fused
    records of one indoor configuration are co-located, but different
    configurations of the same object may land on different sides.
    Soil-only records are folded at the record level.
    """
    rng = np.random.default_rng(spec.rng_seed)
    groups = sorted({rec.indoor.key for rec in records if rec.indoor is not None})
    train_groups: set[tuple] = set()
    if groups:
        order = rng.permutation(len(groups))
        n_train = round_half_up(spec.train_fraction * len(groups))
        train_groups = {groups[i] for i in order[:n_train]}
    assignments = _split_soil_only(records, rng, spec.train_fraction)
    for rec in records:
        if rec.indoor is not None:
            side = "train" if rec.indoor.key in train_groups else "test"
            assignments[rec.sample_id] = side
    return SplitAssignment(spec.task, spec.rng_seed, spec.train_fraction, assignments)


def split_records(
    records: list[SampleRecord], spec: SplitSpec
) -> SplitAssignment:
    """Dispatch to the folding rule the task calls for: object-disjoint for
    binary/ternary, configuration-grouped for multi."""
    if spec.task in ("binary", "ternary"):
        return split_object_disjoint(records, spec)
    return split_config_grouped(records, spec)


@dataclass(frozen=True, eq=False)
class DatasetManifest:
    """Everything needed to audit or reload a generated dataset."""

    seed: int
    alpha: float
    propagation: PropagationParams
    grid: GridSpec
    volume_range: tuple[float, float, int] | None   # (z0_mm, z1_mm, slices)
    registry: ObjectRegistry
    records: tuple[SampleRecord, ...]
    split_summary: dict[str, dict[str, int]]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for rec in self.records:
            if rec.sample_id in seen:
                raise ValueError(f"duplicate sample_id {rec.sample_id!r}")
            seen.add(rec.sample_id)

    def __len__(self) -> int:
        return len(self.records)

    def get(self, sample_id: str) -> SampleRecord:
        for rec in self.records:
            if rec.sample_id == sample_id:
                return rec
        raise KeyError(f"unknown sample_id {sample_id!r}")

    def to_doc(self) -> dict:
        return {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "kind": "dataset",
            "seed": self.seed,
            "alpha": self.alpha,
            "propagation": {
                "frequency_hz": self.propagation.frequency_hz,
                "eps_r": self.propagation.eps_r,
            },
            "grid": {
                "rows": self.grid.rows,
                "cols": self.grid.cols,
                "pitch_mm": self.grid.pitch_mm,
            },
            "volume": None
            if self.volume_range is None
            else {
                "z0_mm": self.volume_range[0],
                "z1_mm": self.volume_range[1],
                "slices": self.volume_range[2],
            },
            "format_versions": {
                "hgrm": hio.FIELD_VERSION,
                "hvol": hio.VOLUME_VERSION,
                "manifest": MANIFEST_SCHEMA_VERSION,
            },
            "registry": hio.registry_to_doc(self.registry),
            "split_summary": self.split_summary,
            "records": [_record_to_doc(rec) for rec in self.records],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "DatasetManifest":
        try:
            if doc["schema_version"] != MANIFEST_SCHEMA_VERSION:
                raise ManifestError(
                    f"unsupported manifest schema_version {doc['schema_version']!r}"
                )
            vol = doc["volume"]
            volume_range = (
                None
                if vol is None
                else (float(vol["z0_mm"]), float(vol["z1_mm"]), int(vol["slices"]))
            )
            return cls(
                seed=int(doc["seed"]),
                alpha=float(doc["alpha"]),
                propagation=PropagationParams(
                    doc["propagation"]["frequency_hz"], doc["propagation"]["eps_r"]
                ),
                grid=GridSpec(
                    doc["grid"]["rows"], doc["grid"]["cols"], doc["grid"]["pitch_mm"]
                ),
                volume_range=volume_range,
                registry=hio.parse_registry(doc["registry"]),
                records=tuple(_record_from_doc(d) for d in doc["records"]),
                split_summary={
                    task: {side: int(n) for side, n in sides.items()}
                    for task, sides in doc["split_summary"].items()
                },
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ManifestError):
                raise
            raise ManifestError(f"malformed manifest: {exc}") from None

    def save(self, path: str | Path) -> None:
        hio.write_json_doc(self.to_doc(), path)

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        return cls.from_doc(hio.read_json_doc(path))


def _record_to_doc(rec: SampleRecord) -> dict:
    ann = None
    if rec.annotation is not None:
        ann = {
            "x": rec.annotation.x,
            "y": rec.annotation.y,
            "w": rec.annotation.w,
            "h": rec.annotation.h,
            "mask_rle": rle_encode(rec.annotation.mask),
        }
    indoor = None
    if rec.indoor is not None:
        indoor = {
            "object_id": rec.indoor.object_id,
            "height_mm": rec.indoor.height_mm,
            "orientation": rec.indoor.orientation,
            "slope_deg": rec.indoor.slope_deg,
        }
    return {
        "sample_id": rec.sample_id,
        "indoor": indoor,
        "outdoor": {
            "patch_id": rec.outdoor.patch_id,
            "direction": rec.outdoor.direction,
        },
        "alpha": rec.alpha,
        "hologram": rec.hologram_path,
        "volume": rec.volume_path,
        "labels": dict(rec.labels),
        "annotation": ann,
        "splits": dict(rec.splits),
        "checksums": dict(rec.checksums),
    }


def _record_from_doc(doc: dict) -> SampleRecord:
    indoor = None
    if doc["indoor"] is not None:
        d = doc["indoor"]
        indoor = IndoorConfig(
            d["object_id"], d["height_mm"], d["orientation"], d["slope_deg"]
        )
    annotation = None
    if doc["annotation"] is not None:
        a = doc["annotation"]
        annotation = BBox(
            a["x"], a["y"], a["w"], a["h"],
            rle_decode(a["mask_rle"], (a["h"], a["w"])),
        )
    return SampleRecord(
        sample_id=doc["sample_id"],
        indoor=indoor,
        outdoor=OutdoorConfig(doc["outdoor"]["patch_id"], doc["outdoor"]["direction"]),
        alpha=doc["alpha"],
        hologram_path=doc["hologram"],
        volume_path=doc["volume"],
        labels=dict(doc["labels"]),
        annotation=annotation,
        splits=dict(doc["splits"]),
        checksums=dict(doc["checksums"]),
    )


def _stem(name: str) -> str:
    return name[: -len(".hgrm")] if name.endswith(".hgrm") else name


def generate_dataset(
    registry: ObjectRegistry,
    indoor: Mapping[IndoorConfig, ComplexField2D],
    outdoor: Mapping[OutdoorConfig, ComplexField2D],
    out_dir: str | Path,
    alpha: float = DEFAULT_ALPHA,
    params: PropagationParams = PropagationParams.in_soil(),
    *,
    include_soil_only: bool = True,
    include_volumes: bool = True,
    slices: int = 1,
    z0_mm: float = 0.0,
    z1_mm: float = 200.0,
    seed: int = 0,
    train_fraction: float = 0.8,
    jobs: int = 1,
    evanescent: str = "zero",
    indoor_configs: list[IndoorConfig] | None = None,
    progress: Callable[[str], None] | None = None,
) -> DatasetManifest:
    """Fuse every indoor/outdoor pair into a labeled, split, checksummed
    dataset on disk and return its manifest.

    One record is emitted per (indoor config, outdoor capture) pair, plus
    one soil-only background record per outdoor capture unless disabled.
    Hologram files land under holograms/, single- or multi-slice volumes
    under volumes/ when include_volumes is set, and the manifest under
    manifest.json. Work is fanned out over `jobs` workers but records are
    assembled in enumeration order, so equal inputs and seed reproduce the
    dataset byte for byte.

    indoor_configs restricts the run to a subset of scene configurations;
    by default every configuration enumerated from the registry must have
    a scan in `indoor`.
    """
    alpha = check_unit_interval(alpha, "alpha")
    jobs = int(jobs)
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs!r}")
    indoor_cfgs = (
        list(indoor_configs) if indoor_configs is not None else enumerate_indoor(registry)
    )
    missing = [cfg for cfg in indoor_cfgs if cfg not in indoor]
    if missing:
        names = ", ".join(hio.indoor_scan_name(cfg) for cfg in missing[:3])
        raise GenerationError(
            f"{len(missing)} enumerated indoor scans are missing (first: {names})"
        )
    outdoor_cfgs = sorted(
        outdoor.keys(), key=lambda c: (c.patch_id, CARDINALS.index(c.direction))
    )
    if not outdoor_cfgs:
        raise GenerationError("no outdoor captures supplied")

    fields = [indoor[cfg] for cfg in indoor_cfgs] + [outdoor[cfg] for cfg in outdoor_cfgs]
    names = [hio.indoor_scan_name(cfg) for cfg in indoor_cfgs] + [
        hio.outdoor_scan_name(cfg) for cfg in outdoor_cfgs
    ]
    ref = fields[0]
    for f, name in zip(fields, names):
        if f.shape != ref.shape or f.pitch_mm != ref.pitch_mm:
            raise GenerationError(
                f"scan {name} grid {f.shape}@{f.pitch_mm}mm does not match "
                f"{names[0]} grid {ref.shape}@{ref.pitch_mm}mm"
            )

    grid = GridSpec(ref.rows, ref.cols, ref.pitch_mm)
    out_dir = Path(out_dir)
    (out_dir / HOLOGRAM_DIR).mkdir(parents=True, exist_ok=True)
    if include_volumes:
        (out_dir / VOLUME_DIR).mkdir(parents=True, exist_ok=True)

    # Labels and the annotation depend only on the indoor configuration, so
    # they are computed once and shared by that configuration's records.
    labels_by_cfg = {
        cfg: make_labels(cfg.object_id, registry) for cfg in indoor_cfgs
    }
    annotation_by_cfg = {
        cfg: make_annotation(registry.get(cfg.object_id), cfg.orientation, grid)
        for cfg in indoor_cfgs
    }
    soil_labels = make_labels(None, registry)

    def emit(sample_id: str, f: ComplexField2D) -> tuple[str, str | None, dict[str, str]]:
        checksums: dict[str, str] = {}
        holo_rel = f"{HOLOGRAM_DIR}/{sample_id}.hgrm"
        blob = hio.encode_field(f)
        checksums[holo_rel] = hio.checksum_bytes(blob)
        hio.atomic_write_bytes(out_dir / holo_rel, blob)
        vol_rel = None
        if include_volumes:
            vol = reconstruct_volume(f, z0_mm, z1_mm, slices, params, evanescent)
            vol_rel = f"{VOLUME_DIR}/{sample_id}.hvol"
            vblob = hio.encode_volume(vol)
            checksums[vol_rel] = hio.checksum_bytes(vblob)
            hio.atomic_write_bytes(out_dir / vol_rel, vblob)
        return holo_rel, vol_rel, checksums

    def fused_batch(cfg: IndoorConfig) -> list[SampleRecord]:
        h_in = indoor[cfg]
        in_stem = _stem(hio.indoor_scan_name(cfg))
        batch = []
        for ocfg in outdoor_cfgs:
            sample_id = f"{in_stem}__{_stem(hio.outdoor_scan_name(ocfg))}"
            try:
                fused = fuse(h_in, outdoor[ocfg], alpha)
            except ValueError as exc:
                raise GenerationError(f"sample {sample_id}: {exc}") from exc
            holo_rel, vol_rel, checksums = emit(sample_id, fused)
            batch.append(
                SampleRecord(
                    sample_id=sample_id,
                    indoor=cfg,
                    outdoor=ocfg,
                    alpha=alpha,
                    hologram_path=holo_rel,
                    volume_path=vol_rel,
                    labels=labels_by_cfg[cfg],
                    annotation=annotation_by_cfg[cfg],
                    checksums=checksums,
                )
            )
        return batch

    def soil_batch() -> list[SampleRecord]:
        batch = []
        for ocfg in outdoor_cfgs:
            sample_id = _stem(hio.outdoor_scan_name(ocfg))
            holo_rel, vol_rel, checksums = emit(sample_id, outdoor[ocfg])
            batch.append(
                SampleRecord(
                    sample_id=sample_id,
                    indoor=None,
                    outdoor=ocfg,
                    alpha=alpha,
                    hologram_path=holo_rel,
                    volume_path=vol_rel,
                    labels=soil_labels,
                    annotation=None,
                    checksums=checksums,
                )
            )
        return batch

    records: list[SampleRecord] = []
    if jobs == 1:
        batches = []
        for i, cfg in enumerate(indoor_cfgs):
            batches.append(fused_batch(cfg))
            if progress:
                progress(f"fused {i + 1}/{len(indoor_cfgs)} indoor configs")
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fused_batch, cfg) for cfg in indoor_cfgs]
            batches = []
            for i, fut in enumerate(futures):
                batches.append(fut.result())
                if progress:
                    progress(f"fused {i + 1}/{len(indoor_cfgs)} indoor configs")
    for batch in batches:
        records.extend(batch)
    if include_soil_only:
        records.extend(soil_batch())
        if progress:
            progress(f"emitted {len(outdoor_cfgs)} soil-only records")

    assignments = {
        task: split_records(records, SplitSpec(task, train_fraction, seed))
        for task in TASKS
    }
    records = [
        dataclasses.replace(
            rec,
            splits={task: assignments[task].side(rec.sample_id) for task in TASKS},
        )
        for rec in records
    ]
    split_summary = {
        task: {
            "train": len(a.train_ids()),
            "test": len(a.test_ids()),
        }
        for task, a in assignments.items()
    }

    manifest = DatasetManifest(
        seed=int(seed),
        alpha=alpha,
        propagation=params,
        grid=grid,
        volume_range=(float(z0_mm), float(z1_mm), int(slices)) if include_volumes else None,
        registry=registry,
        records=tuple(records),
        split_summary=split_summary,
    )
    manifest.save(out_dir / MANIFEST_NAME)
    if progress:
        progress(f"wrote manifest with {len(records)} records")
    return manifest


def validate_manifest(
    manifest: DatasetManifest, root: str | Path, check_files: bool = True
) -> dict[str, int]:
    """Audit a manifest against its invariants and, optionally, its files.

    Checks id uniqueness, cardinality arithmetic, label consistency, split
    completeness and disjointness, annotation geometry, and (when
    check_files is set) that every referenced file exists and matches its
    recorded checksum. Raises ManifestError on the first violation.
    """
    root = Path(root)
    n_fused = sum(1 for r in manifest.records if not r.is_soil_only)
    n_soil = len(manifest.records) - n_fused
    n_indoor = len({r.indoor.key for r in manifest.records if r.indoor is not None})
    n_outdoor = len({(r.outdoor.patch_id, r.outdoor.direction) for r in manifest.records})
    if n_fused != n_indoor * n_outdoor:
        raise ManifestError(
            f"cardinality mismatch: {n_fused} fused records from "
            f"{n_indoor} indoor x {n_outdoor} outdoor configs"
        )
    if n_soil not in (0, n_outdoor):
        raise ManifestError(
            f"{n_soil} soil-only records but {n_outdoor} outdoor captures"
        )

    train_objects: dict[str, set[str]] = {"binary": set(), "ternary": set()}
    test_objects: dict[str, set[str]] = {"binary": set(), "ternary": set()}
    group_sides: dict[tuple, str] = {}
    for rec in manifest.records:
        if set(rec.splits) != set(TASKS):
            raise ManifestError(f"{rec.sample_id}: incomplete split assignments")
        labels = rec.labels
        if (labels["binary"] == MINE_LABEL) != (labels["ternary"] == MINE_LABEL):
            raise ManifestError(f"{rec.sample_id}: binary/ternary labels disagree")
        if rec.is_soil_only:
            if labels["multi"] != BACKGROUND_LABEL:
                raise ManifestError(f"{rec.sample_id}: soil-only multi label")
        else:
            obj = manifest.registry.get(labels["multi"])
            if obj.category != labels["ternary"]:
                raise ManifestError(
                    f"{rec.sample_id}: multi label {labels['multi']!r} is not a "
                    f"{labels['ternary']!r} object"
                )
            ann = rec.annotation
            if (
                ann.x + ann.w > manifest.grid.cols
                or ann.y + ann.h > manifest.grid.rows
            ):
                raise ManifestError(f"{rec.sample_id}: annotation exceeds the grid")
            for task in ("binary", "ternary"):
                side = rec.splits[task]
                (train_objects if side == "train" else test_objects)[task].add(
                    rec.indoor.object_id
                )
            key = rec.indoor.key
            side = rec.splits["multi"]
            if group_sides.setdefault(key, side) != side:
                raise ManifestError(
                    f"configuration {key} straddles the multi-task fold"
                )
    for task in ("binary", "ternary"):
        overlap = train_objects[task] & test_objects[task]
        if overlap:
            raise ManifestError(
                f"objects {sorted(overlap)} straddle the {task} fold"
            )

    files_checked = 0
    if check_files:
        for rec in manifest.records:
            for rel, expected in rec.checksums.items():
                path = root / rel
                if not path.is_file():
                    raise ManifestError(f"{rec.sample_id}: missing file {rel}")
                actual = hio.checksum_file(path)
                if actual != expected:
                    raise ManifestError(
                        f"{rec.sample_id}: checksum mismatch for {rel}: "
                        f"recorded {expected}, found {actual}"
                    )
                files_checked += 1

    return {
        "records": len(manifest.records),
        "fused": n_fused,
        "soil_only": n_soil,
        "files_checked": files_checked,
    }
