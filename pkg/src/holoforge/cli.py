"""Batch front-end: one binary, subcommand per pipeline stage.

Standard output carries exactly one machine-readable JSON summary line per
command (or per input file for multi-file commands); progress and errors go
to standard error, errors as a single line starting with "error:". All
randomness flows from --seed, with the HOLOFORGE_SEED environment variable
as fallback.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .angular import (
    DEFAULT_FREQUENCY_HZ,
    EPS_R_SOIL,
    EVANESCENT_MODES,
    PropagationParams,
    focus_depth,
    reconstruct_volume,
)
from .dataset import (
    DatasetManifest,
    GenerationError,
    ManifestError,
    SplitSpec,
    TASKS,
    discover_outdoor,
    enumerate_indoor,
    generate_dataset,
    split_records,
)
from .fusion import DEFAULT_ALPHA, calibrate_alpha, fuse, fuse_volume
from .gridding import GriddingError, GridSpec, grid_scan
from .metrics import MetricUndefinedWarning, f1_micro, f1_score, precision, recall
from . import io as hio


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters of one cmd_generate run."""

    indoor: str
    outdoor: str
    out: str
    registry: str | None = None     # None selects the built-in registry
    alpha: float = DEFAULT_ALPHA
    frequency_hz: float = DEFAULT_FREQUENCY_HZ
    eps_r: float = EPS_R_SOIL
    slices: int = 1
    z0_mm: float = 0.0
    z1_mm: float = 200.0
    seed: int = 0
    jobs: int = 1
    soil_only: bool = True

    def __post_init__(self) -> None:
        for name in ("indoor", "outdoor", "out"):
            if not getattr(self, name):
                raise ValueError(f"{name} directory must be set")
        if not 0.0 <= float(self.alpha) <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if int(self.slices) < 1:
            raise ValueError(f"slices must be >= 1, got {self.slices!r}")
        if int(self.jobs) < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "frequency_hz", float(self.frequency_hz))
        object.__setattr__(self, "eps_r", float(self.eps_r))
        object.__setattr__(self, "slices", int(self.slices))
        object.__setattr__(self, "z0_mm", float(self.z0_mm))
        object.__setattr__(self, "z1_mm", float(self.z1_mm))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "jobs", int(self.jobs))
        object.__setattr__(self, "soil_only", bool(self.soil_only))


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("HOLOFORGE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"HOLOFORGE_SEED must be an integer, got {env!r}") from None


def _emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _parse_grid(text: str) -> tuple[float, ...]:
    """Parse a sweep grid given as start:stop:step or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(v) for v in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"grid {text!r} is not an increasing range")
        count = int(round((stop - start) / step)) + 1
        values = tuple(round(start + i * step, 10) for i in range(count))
        return tuple(v for v in values if v <= stop + 1e-12)
    return tuple(float(v) for v in text.split(","))


def _read_predictions(path: str | Path) -> dict[str, str]:
    """Read a predictions CSV with header sample_id,label."""
    path = Path(path)
    preds: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != ("sample_id", "label"):
            raise hio.FormatError(f"{path}: expected header sample_id,label")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise hio.FormatError(
                    f"{path} line {lineno}: expected 2 fields, got {len(row)}"
                )
            sid, label = row[0].strip(), row[1].strip()
            if sid in preds:
                raise hio.FormatError(f"{path} line {lineno}: duplicate id {sid!r}")
            preds[sid] = label
    if not preds:
        raise hio.FormatError(f"{path}: no predictions")
    return preds


def cmd_ingest(args: argparse.Namespace) -> int:
    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    spec = GridSpec()
    for scan_path in args.scans:
        scan_path = Path(scan_path)
        trace = hio.read_scan(scan_path)
        field = grid_scan(trace, spec)
        target_dir = out_dir if out_dir is not None else scan_path.parent
        out_path = target_dir / (scan_path.stem + ".hgrm")
        hio.write_field(field, out_path)
        _emit(
            {
                "scan": str(scan_path),
                "hologram": str(out_path),
                "rows": field.rows,
                "cols": field.cols,
                "pitch_mm": field.pitch_mm,
                "samples": trace.n_samples,
            }
        )
    return 0


def cmd_invert(args: argparse.Namespace) -> int:
    field = hio.read_field(args.hologram)
    params = PropagationParams(args.freq_hz, args.eps_r)
    volume = reconstruct_volume(
        field, args.z0_mm, args.z1_mm, args.slices, params, args.evanescent
    )
    out_path = Path(args.out) if args.out else Path(args.hologram).with_suffix(".hvol")
    hio.write_volume(volume, out_path)
    focus = focus_depth(volume)
    _emit(
        {
            "hologram": str(args.hologram),
            "volume": str(out_path),
            "slices": volume.slices,
            "z0_mm": volume.z0_mm,
            "dz_mm": volume.dz_mm,
            "focus_slice": focus.slice_index,
            "focus_z_mm": focus.z_mm,
        }
    )
    return 0


def cmd_fuse(args: argparse.Namespace) -> int:
    kind_in = hio.sniff_container(args.indoor_file)
    kind_out = hio.sniff_container(args.outdoor_file)
    if kind_in != kind_out:
        raise ValueError(
            f"cannot fuse a {kind_in} with a {kind_out}; supply two holograms "
            f"or two volumes"
        )
    out_path = Path(args.out)
    if kind_in == "field":
        fused = fuse(
            hio.read_field(args.indoor_file),
            hio.read_field(args.outdoor_file),
            args.alpha,
        )
        hio.write_field(fused, out_path)
    else:
        fused_vol = fuse_volume(
            hio.read_volume(args.indoor_file),
            hio.read_volume(args.outdoor_file),
            args.alpha,
        )
        hio.write_volume(fused_vol, out_path)
    _emit(
        {
            "indoor": str(args.indoor_file),
            "outdoor": str(args.outdoor_file),
            "fused": str(out_path),
            "kind": "hologram" if kind_in == "field" else "volume",
            "alpha": float(args.alpha),
        }
    )
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    grid = _parse_grid(args.grid) if args.grid else None
    result = calibrate_alpha(
        hio.read_field(args.indoor_file),
        hio.read_field(args.outdoor_file),
        hio.read_field(args.natural_file),
        grid,
    )
    out_path = Path(args.out)
    hio.write_alpha_sweep(result, out_path)
    _emit(
        {
            "best_alpha": result.best_alpha,
            "best_score": result.best_score,
            "entries": len(result.entries),
            "report": str(out_path),
        }
    )
    return 0


def _run_config_from_args(args: argparse.Namespace) -> RunConfig:
    doc: dict = {}
    if args.config:
        doc = hio.read_json_doc(args.config)
        doc.pop("schema_version", None)
        doc.pop("kind", None)
        known = {f.name for f in fields(RunConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(doc)
    # Flags win over the config file; argparse leaves unset flags as None.
    overrides = {
        "registry": args.registry,
        "indoor": args.indoor,
        "outdoor": args.outdoor,
        "out": args.out,
        "alpha": args.alpha,
        "frequency_hz": args.freq_hz,
        "eps_r": args.eps_r,
        "slices": args.slices,
        "z0_mm": args.z0_mm,
        "z1_mm": args.z1_mm,
        "jobs": args.jobs,
    }
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    if args.no_soil_only:
        merged["soil_only"] = False
    if args.seed is not None:
        merged["seed"] = args.seed
    elif "seed" not in merged:
        merged["seed"] = _resolve_seed(None)
    for key in ("indoor", "outdoor", "out"):
        if key not in merged:
            raise ValueError(f"--{key} is required (flag or config file)")
    return RunConfig(**merged)


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _run_config_from_args(args)
    registry = (
        hio.load_registry(cfg.registry) if cfg.registry else hio.default_registry()
    )
    started = time.monotonic()
    indoor_dir = Path(cfg.indoor)
    indoor = {}
    missing = []
    for icfg in enumerate_indoor(registry):
        path = indoor_dir / hio.indoor_scan_name(icfg)
        if not path.is_file():
            missing.append(path.name)
            continue
        indoor[icfg] = hio.read_field(path)
    if missing:
        raise GenerationError(
            f"{len(missing)} indoor scans missing from {indoor_dir} "
            f"(first: {', '.join(missing[:3])})"
        )
    outdoor_dir = Path(cfg.outdoor)
    outdoor = {
        ocfg: hio.read_field(outdoor_dir / hio.outdoor_scan_name(ocfg))
        for ocfg in discover_outdoor(outdoor_dir)
    }
    _progress(
        f"loaded {len(indoor)} indoor and {len(outdoor)} outdoor scans"
    )
    manifest = generate_dataset(
        registry,
        indoor,
        outdoor,
        cfg.out,
        alpha=cfg.alpha,
        params=PropagationParams(cfg.frequency_hz, cfg.eps_r),
        include_soil_only=cfg.soil_only,
        include_volumes=True,
        slices=cfg.slices,
        z0_mm=cfg.z0_mm,
        z1_mm=cfg.z1_mm,
        seed=cfg.seed,
        jobs=cfg.jobs,
        progress=_progress,
    )
    _emit(
        {
            "records": len(manifest),
            "manifest": str(Path(cfg.out) / "manifest.json"),
            "out": cfg.out,
            "seed": cfg.seed,
            "alpha": cfg.alpha,
            "elapsed_s": round(time.monotonic() - started, 3),
        }
    )
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    manifest_path = Path(args.manifest)
    manifest = DatasetManifest.load(manifest_path)
    seed = _resolve_seed(args.seed)
    spec = SplitSpec(args.task, rng_seed=seed)
    assignment = split_records(list(manifest.records), spec)
    out_path = (
        Path(args.out)
        if args.out
        else manifest_path.parent / f"split_{args.task}_{seed}.json"
    )
    hio.write_json_doc(
        {
            "schema_version": 1,
            "kind": "split",
            "task": assignment.task,
            "seed": assignment.rng_seed,
            "train_fraction": assignment.train_fraction,
            "train": assignment.train_ids(),
            "test": assignment.test_ids(),
        },
        out_path,
    )
    _emit(
        {
            "task": args.task,
            "seed": seed,
            "train": len(assignment.train_ids()),
            "test": len(assignment.test_ids()),
            "out": str(out_path),
        }
    )
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    path = Path(args.file)
    kind = hio.sniff_container(path)
    out_dir = Path(args.out) if args.out else path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    if kind == "field":
        field = hio.read_field(path)
        render_source = field
        meta = {
            "kind": "hologram",
            "path": str(path),
            "rows": field.rows,
            "cols": field.cols,
            "pitch_mm": field.pitch_mm,
        }
    else:
        volume = hio.read_volume(path)
        focus = focus_depth(volume)
        render_source = volume.slice_field(focus.slice_index)
        meta = {
            "kind": "volume",
            "path": str(path),
            "slices": volume.slices,
            "rows": volume.rows,
            "cols": volume.cols,
            "pitch_mm": volume.pitch_mm,
            "z0_mm": volume.z0_mm,
            "dz_mm": volume.dz_mm,
            "focus_slice": focus.slice_index,
            "focus_z_mm": focus.z_mm,
        }
    mag = np.abs(render_source.data)
    meta["amplitude_min"] = float(mag.min())
    meta["amplitude_max"] = float(mag.max())
    meta["checksum"] = hio.checksum_file(path)
    amp_png = out_dir / (path.stem + ".amplitude.png")
    phase_png = out_dir / (path.stem + ".phase.png")
    hio.render_png(render_source, "amplitude", amp_png)
    hio.render_png(render_source, "phase", phase_png)
    meta["amplitude_png"] = str(amp_png)
    meta["phase_png"] = str(phase_png)
    _emit(meta)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    manifest = DatasetManifest.load(args.manifest)
    preds = _read_predictions(args.predictions)
    truth: dict[str, str] = {}
    for sid in preds:
        try:
            truth[sid] = manifest.get(sid).labels[args.task]
        except KeyError:
            raise ValueError(f"prediction for unknown sample_id {sid!r}") from None
    classes = sorted(set(truth.values()) | set(preds.values()))
    index = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for sid, label in preds.items():
        confusion[index[truth[sid]], index[label]] += 1
    per_class = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MetricUndefinedWarning)
        for c in classes:
            i = index[c]
            tp = int(confusion[i, i])
            fp = int(confusion[:, i].sum() - tp)
            fn = int(confusion[i, :].sum() - tp)
            per_class[c] = {
                "precision": precision(tp, fp),
                "recall": recall(tp, fn),
                "f1": f1_score(tp, fp, fn),
            }
        micro = f1_micro(confusion)
    _emit(
        {
            "task": args.task,
            "n": len(preds),
            "classes": per_class,
            "f1_micro": micro,
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holoforge",
        description="Subsurface-holography pipeline: ingest scans, invert and "
        "fuse holograms, and generate labeled datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="grid scan CSVs into hologram containers")
    p.add_argument("scans", nargs="+", help="scan CSV files")
    p.add_argument("--out", help="output directory (default: beside each scan)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("invert", help="reconstruct a depth volume from a hologram")
    p.add_argument("hologram", help=".hgrm file")
    p.add_argument("--out", help="output .hvol path (default: beside the input)")
    p.add_argument("--slices", type=int, default=21)
    p.add_argument("--z0-mm", type=float, default=0.0)
    p.add_argument("--z1-mm", type=float, default=200.0)
    p.add_argument("--freq-hz", type=float, default=DEFAULT_FREQUENCY_HZ)
    p.add_argument("--eps-r", type=float, default=EPS_R_SOIL)
    p.add_argument("--evanescent", choices=EVANESCENT_MODES, default="zero")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("fuse", help="blend an indoor and an outdoor capture")
    p.add_argument("indoor_file", help="indoor .hgrm or .hvol")
    p.add_argument("outdoor_file", help="outdoor .hgrm or .hvol")
    p.add_argument("--out", required=True, help="output path")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("calibrate", help="sweep alpha against a natural capture")
    p.add_argument("indoor_file", help="indoor .hgrm")
    p.add_argument("outdoor_file", help="outdoor .hgrm")
    p.add_argument("natural_file", help="natural buried-object .hgrm")
    p.add_argument("--grid", help="sweep grid start:stop:step or comma list")
    p.add_argument("--out", default="alpha_sweep.json", help="report path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("generate", help="generate the full fused dataset")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--registry", help="registry JSON (default: built-in)")
    p.add_argument("--indoor", help="directory of indoor scans")
    p.add_argument("--outdoor", help="directory of outdoor scans")
    p.add_argument("--out", help="output dataset directory")
    p.add_argument("--alpha", type=float)
    p.add_argument("--eps-r", type=float)
    p.add_argument("--freq-hz", type=float)
    p.add_argument("--slices", type=int)
    p.add_argument("--z0-mm", type=float)
    p.add_argument("--z1-mm", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--no-soil-only", action="store_true",
                   help="skip the soil-only background records")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("split", help="write a train/test fold for a task")
    p.add_argument("manifest", help="dataset manifest.json")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output JSON path")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("inspect", help="print metadata and render PNG previews")
    p.add_argument("file", help=".hgrm or .hvol file")
    p.add_argument("--out", help="directory for PNGs (default: beside the file)")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("eval", help="score predictions against a manifest")
    p.add_argument("predictions", help="CSV with header sample_id,label")
    p.add_argument("manifest", help="dataset manifest.json")
    p.add_argument("--task", choices=TASKS, required=True)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ValueError,
        KeyError,
        OSError,
        GriddingError,
        GenerationError,
        ManifestError,
        hio.FormatError,
    ) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
