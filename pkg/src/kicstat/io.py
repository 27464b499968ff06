"""Spectrum cache files, CSV curves and run reports."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .diagonalize import QuasiEnergySpectrum
from .floquet import ModelParams
from .rmt import EnsembleSpec
from .spectral import StatCurve

SCHEMA_VERSION = 1
SPECTRUM_FIELDS = ("schema_version", "L", "k", "J", "b", "symmetrized", "dim", "phases")
ENSEMBLE_FIELDS = ("schema_version", "ensemble", "dim", "seed", "member", "phases")
SCHEMA_HASH = hashlib.sha256(
    ("|".join(SPECTRUM_FIELDS) + "#" + "|".join(ENSEMBLE_FIELDS) + f"#v{SCHEMA_VERSION}").encode()
).hexdigest()[:16]


def cache_dir(out: Path) -> Path:
    env = os.environ.get("KIC_CACHE_DIR")
    return Path(env) if env else Path(out) / "cache"


def spectrum_path(cache: Path, L: int, k: int, symmetrized: bool = True) -> Path:
    tag = "" if symmetrized else "_plain"
    return Path(cache) / f"spectrum_L{L}_k{k}{tag}.json"


def member_path(cache: Path, spec: EnsembleSpec, member: int) -> Path:
    return Path(cache) / f"{spec.ensemble}_N{spec.dim}_seed{spec.seed}_m{member}.json"


def _dump(record: Dict[str, Any]) -> str:
    # json writes floats with repr(), the shortest string that round-trips
    # the double exactly
    return json.dumps(record, indent=1, allow_nan=False) + "\n"


def write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def spectrum_record(spec: QuasiEnergySpectrum, params: ModelParams, diagnostics: Optional[Dict[str, float]] = None) -> Dict[str, Any]:
    rec = {
        "schema_version": SCHEMA_VERSION,
        "schema_hash": SCHEMA_HASH,
        "L": params.L,
        "k": int(spec.k),
        "J": params.J,
        "b": list(params.b),
        "symmetrized": bool(spec.symmetrized),
        "dim": spec.dim,
        "phases": [float(x) for x in spec.phases],
    }
    if diagnostics:
        rec["diagnostics"] = {key: float(v) for key, v in sorted(diagnostics.items())}
    return rec


def member_record(spec: QuasiEnergySpectrum, ens: EnsembleSpec) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "schema_hash": SCHEMA_HASH,
        "ensemble": ens.ensemble,
        "dim": ens.dim,
        "seed": ens.seed,
        "member": int(spec.k),
        "residual": float(spec.residual),
        "phases": [float(x) for x in spec.phases],
    }


def write_spectrum(path: Path, record: Dict[str, Any]) -> None:
    write_text(path, _dump(record))


def read_record(path: Path) -> Dict[str, Any]:
    with open(path) as fh:
        return json.load(fh)


def cache_matches(record: Dict[str, Any], params: ModelParams, k: int, symmetrized: bool = True) -> bool:
    """Bit-exact comparison of the cache key (L, k, J, b, symmetrized, schema)."""
    try:
        return (
            record["schema_version"] == SCHEMA_VERSION
            and record.get("schema_hash") == SCHEMA_HASH
            and record["L"] == params.L
            and record["k"] == k
            and _same_float(record["J"], params.J)
            and len(record["b"]) == 3
            and all(_same_float(a, b) for a, b in zip(record["b"], params.b))
            and record["symmetrized"] == symmetrized
            and record["dim"] == len(record["phases"])
        )
    except (KeyError, TypeError):
        return False


def _same_float(a, b) -> bool:
    return np.float64(a).tobytes() == np.float64(b).tobytes()


def load_spectrum(record: Dict[str, Any]) -> QuasiEnergySpectrum:
    if "L" in record:
        params = ModelParams(record["J"], tuple(record["b"]), record["L"])
        return QuasiEnergySpectrum(record["k"], np.array(record["phases"], dtype=float), params,
                                   record.get("diagnostics", {}).get("residual", 0.0),
                                   record["symmetrized"])
    return QuasiEnergySpectrum(record["member"], np.array(record["phases"], dtype=float),
                               residual=record.get("residual", 0.0))


def _fmt(x: float) -> str:
    return repr(float(x))


def curve_csv(curve: StatCurve, header: str) -> str:
    n = curve.abscissa.size
    nan = np.full(n, np.nan)
    ref = curve.reference if curve.reference is not None else nan
    band = curve.band if curve.band is not None else nan
    lines = [f"# {header}", "abscissa,value,reference,band"]
    for row in zip(curve.abscissa, curve.values, ref, band):
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_curve(path: Path, curve: StatCurve, header: str) -> None:
    write_text(path, curve_csv(curve, header))


def read_curve(path: Path) -> StatCurve:
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    return StatCurve(data[:, 0], data[:, 1], data[:, 2], data[:, 3])


def file_hash(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunReport:
    command: str
    summaries: Dict[str, Any] = field(default_factory=dict)
    invariants: Dict[str, bool] = field(default_factory=dict)
    wall_times: Dict[str, float] = field(default_factory=dict)
    cache_hits: List[str] = field(default_factory=list)
    errors: Dict[str, str] = field(default_factory=dict)
    files: List[Path] = field(default_factory=list)

    def add_file(self, path: Path) -> None:
        self.files.append(Path(path))

    def manifest(self, root: Path) -> Dict[str, str]:
        out = {}
        for p in sorted(set(self.files)):
            try:
                key = str(p.relative_to(root))
            except ValueError:
                key = str(p)
            out[key] = file_hash(p)
        return out

    @property
    def ok(self) -> bool:
        return all(self.invariants.values()) and not self.errors

    def to_dict(self, root: Path) -> Dict[str, Any]:
        return {
            "command": self.command,
            "ok": self.ok,
            "summaries": _jsonable(self.summaries),
            "invariants": dict(sorted(self.invariants.items())),
            "errors": dict(sorted(self.errors.items())),
            "cache_hits": sorted(self.cache_hits),
            "wall_times": {k: round(v, 3) for k, v in sorted(self.wall_times.items())},
            "manifest": self.manifest(root),
        }

    def write(self, path: Path, root: Path) -> None:
        write_text(path, json.dumps(self.to_dict(root), indent=1) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return None if not np.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def verify_manifest(report_path: Path) -> List[str]:
    """Files whose current hash differs from the one recorded in a report."""
    rep = read_record(report_path)
    root = Path(report_path).parent
    bad = []
    for name, digest in rep.get("manifest", {}).items():
        p = Path(name) if Path(name).is_absolute() else root / name
        if not p.exists() or file_hash(p) != digest:
            bad.append(name)
    return bad
