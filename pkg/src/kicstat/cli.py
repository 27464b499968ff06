"""Command-line front end: ``kicstat {dims,spectrum,stats,baseline,report}``.

Options can also come from a flat INI file (``--config run.ini``) whose
``[kicstat]`` section uses the long option names without dashes, e.g.::

    [kicstat]
    L = 12
    paper = true
    all_relevant = true
    out = runs/L12

Command-line flags override the file.  Exit codes: 0 success, 1 invariant
violation, 2 bad arguments, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import io
from .combinatorics import dimension_table, relevant_sectors, sector_dimension
from .diagonalize import circular_distance, eigenphases, phases_from_eigenvalues
from .errors import CacheMissingError, InvariantError, KicError, NumericalError, ResourceError
from .floquet import (
    CANONICAL_B,
    CANONICAL_J,
    ModelParams,
    build_sector_basis,
    check_sector_operator,
    full_floquet_matrix,
    sector_floquet,
)
from .pipeline import STATISTICS, PipelineConfig, StatsBundle, ensemble_spectra, run_statistics
from .rmt import EnsembleSpec

log = logging.getLogger("kicstat")

EXIT_OK, EXIT_INVARIANT, EXIT_ARGS, EXIT_NUMERICAL = 0, 1, 2, 3
DESK_SCALE_L = 16
CROSS_CHECK_MAX_L = 10


@dataclass
class RunConfig:
    model: ModelParams
    sectors: List[int]
    statistics: Tuple[str, ...] = STATISTICS
    baseline: Optional[EnsembleSpec] = None
    out: Path = Path("kicstat-out")
    seed: int = 0
    tol_unitarity: float = 1e-10
    tol_residual: float = 1e-10
    symmetrized: bool = True
    force: bool = False
    workers: int = 1
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    @property
    def cache(self) -> Path:
        return io.cache_dir(self.out)


class ArgumentError(KicError):
    exit_code = EXIT_ARGS


# argument parsing

def _shared(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("model and run")
    g.add_argument("--config", type=Path, help="INI file with a [kicstat] section of defaults")
    g.add_argument("--L", type=int, help="number of qubits (sites on the ring)")
    g.add_argument("--d", type=int, default=2, help="local dimension (dims only; default 2)")
    g.add_argument("--J", type=float, default=None, help=f"Ising coupling (default {CANONICAL_J})")
    g.add_argument("--bx", type=float, default=None, help=f"kick field x (default {CANONICAL_B[0]})")
    g.add_argument("--by", type=float, default=None, help=f"kick field y (default {CANONICAL_B[1]})")
    g.add_argument("--bz", type=float, default=None, help=f"kick field z (default {CANONICAL_B[2]})")
    g.add_argument("--paper", action="store_true",
                   help=f"canonical parameters J={CANONICAL_J}, b={CANONICAL_B}")
    g.add_argument("--k", type=int, action="append", help="momentum sector (repeatable)")
    g.add_argument("--all-relevant", action="store_true",
                   help="sectors k = 1 .. ceil(L/2)-1 (default when no --k is given)")
    g.add_argument("--plain", action="store_true",
                   help="use U_ising U_kick instead of the symmetrized period")
    g.add_argument("--seed", type=int, default=0, help="RNG seed for ensemble sampling (default 0)")
    g.add_argument("--out", type=Path, default=Path("kicstat-out"),
                   help="output directory (default ./kicstat-out); KIC_CACHE_DIR overrides the cache location")
    g.add_argument("--force", action="store_true", help="recompute even when a matching cache exists")
    g.add_argument("--tol-unitarity", type=float, default=1e-10,
                   help="max |U^dag U - I| and |U - U^T| accepted (default 1e-10)")
    g.add_argument("--tol-residual", type=float, default=1e-10,
                   help="max eigen-residual accepted (default 1e-10)")
    g.add_argument("--window-kicks", type=int, default=None,
                   help="form-factor window in kicks (default round(tau_H/25))")
    g.add_argument("--smax-frac", type=float, default=0.5,
                   help="largest s of the number-variance grid as a fraction of N (default 0.5)")
    g.add_argument("--statistics", default=",".join(STATISTICS),
                   help=f"comma list from {','.join(STATISTICS)} (default all)")
    g.add_argument("--workers", type=int, default=1, help="parallel worker processes (default 1)")
    g.add_argument("--yes-i-have-time", action="store_true", help=f"allow L > {DESK_SCALE_L}")
    g.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kicstat", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dims", help="momentum-sector dimensions")
    _shared(p)

    p = sub.add_parser("spectrum", help="diagonalize sectors and cache quasi-energies")
    _shared(p)
    p.add_argument("--cross-check", action="store_true",
                   help=f"compare the sector union with the full 2^L matrix (L <= {CROSS_CHECK_MAX_L})")

    p = sub.add_parser("stats", help="spectral statistics from cached spectra")
    _shared(p)
    p.add_argument("--baseline-samples", type=int, default=0,
                   help="also sample this many COE members of the mean sector dimension")

    p = sub.add_parser("baseline", help="sampled circular-ensemble reference statistics")
    _shared(p)
    p.add_argument("--ensemble", default="COE", choices=["COE", "CUE"])
    p.add_argument("--dim", type=int, required=False, help="matrix dimension N")
    p.add_argument("--samples", type=int, default=10, help="number of members (default 10)")

    p = sub.add_parser("report", help="summarize reports in --out and verify their manifests")
    _shared(p)
    return parser


def _config_defaults(path: Path) -> Dict[str, str]:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case sensitive (L vs l)
    if not cp.read(path):
        raise ArgumentError(f"cannot read config file {path}")
    if "kicstat" not in cp:
        raise ArgumentError(f"{path} has no [kicstat] section")
    return dict(cp["kicstat"])


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        values = _config_defaults(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        converted = {}
        for key, raw in values.items():
            dest = key.replace("-", "_")
            if dest not in actions:
                raise ArgumentError(f"unknown config key {key!r}")
            act = actions[dest]
            if isinstance(act, argparse._StoreTrueAction):
                converted[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(act, argparse._AppendAction):
                converted[dest] = [act.type(x) for x in raw.replace(",", " ").split()]
            else:
                converted[dest] = act.type(raw) if act.type else raw
        sub.set_defaults(**converted)
        args = parser.parse_args(argv)
    return args


def run_config(args: argparse.Namespace) -> RunConfig:
    if args.L is None:
        raise ArgumentError("--L is required")
    if args.L > DESK_SCALE_L and not args.yes_i_have_time:
        raise ArgumentError(f"L={args.L} > {DESK_SCALE_L} needs --yes-i-have-time")
    J = CANONICAL_J if args.paper or args.J is None else args.J
    b = list(CANONICAL_B)
    if not args.paper:
        for i, v in enumerate((args.bx, args.by, args.bz)):
            if v is not None:
                b[i] = v
    try:
        model = ModelParams(J, tuple(b), args.L)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from exc
    if args.k and args.all_relevant:
        raise ArgumentError("give either --k or --all-relevant, not both")
    sectors = sorted(set(args.k)) if args.k else relevant_sectors(args.L)
    bad = [k for k in sectors if not 0 <= k < args.L]
    if bad:
        raise ArgumentError(f"sectors {bad} invalid for L={args.L}")
    stats = tuple(s.strip() for s in args.statistics.split(",") if s.strip())
    try:
        pipeline = PipelineConfig(statistics=stats, window_kicks=args.window_kicks,
                                  smax_frac=args.smax_frac)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from exc
    if args.window_kicks is not None and args.window_kicks < 1:
        raise ArgumentError("--window-kicks must be >= 1")
    if not 0 < args.smax_frac <= 1:
        raise ArgumentError("--smax-frac must lie in (0, 1]")
    return RunConfig(model, sectors, pipeline.statistics, None, args.out, args.seed,
                     args.tol_unitarity, args.tol_residual, not args.plain, args.force,
                     max(1, args.workers), pipeline)


# subcommands

def cmd_dims(L: int, d: int = 2, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        table = dimension_table(L, d)
    except ResourceError as exc:
        raise ArgumentError(f"d^L too large for exact counting: {exc}") from exc
    except ValueError as exc:
        raise ArgumentError(str(exc)) from exc
    print(f"{'k':>4} {'dim':>22}  special", file=stream)
    for k, dim in table.dims.items():
        print(f"{k:>4} {dim:>22}  {'yes' if table.is_special(k) else ''}", file=stream)
    print(f"{'sum':>4} {table.total:>22}  (d^L = {d**L})", file=stream)
    return EXIT_OK


def _sector_job(params: ModelParams, k: int, symmetrized: bool, tol_u: float, tol_r: float):
    """Build, check and diagonalize one sector; runs in a worker process."""
    t0 = time.perf_counter()
    try:
        basis = build_sector_basis(params.L, k)
        op = sector_floquet(params, basis, symmetrized, tol=tol_u)
        check_sector_operator(op, tol_u)
        spec = eigenphases(op, tol_r)
    except KicError as exc:
        return k, None, exc, time.perf_counter() - t0
    diag = {"residual": spec.residual, "unitarity_error": op.unitarity_error,
            "symmetry_error": op.symmetry_error, "z_rotation": op.metadata["z_rotation"]}
    return k, io.spectrum_record(spec, params, diag), None, time.perf_counter() - t0


def _fan_out(jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [_sector_job(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_sector_job, *j) for j in jobs]
        return [f.result() for f in futures]


def _exit_code(errors: Sequence[BaseException]) -> int:
    codes = {getattr(e, "exit_code", EXIT_NUMERICAL) for e in errors}
    for code in (EXIT_INVARIANT, EXIT_NUMERICAL, EXIT_ARGS):
        if code in codes:
            return code
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, cross_check: bool = False) -> Tuple[int, io.RunReport]:
    if cross_check and cfg.model.L > CROSS_CHECK_MAX_L:
        raise ArgumentError(f"--cross-check supports L <= {CROSS_CHECK_MAX_L}")
    report = io.RunReport("spectrum")
    params = cfg.model
    cache = cfg.cache
    todo = []
    for k in cfg.sectors:
        path = io.spectrum_path(cache, params.L, k, cfg.symmetrized)
        if not cfg.force and path.exists() and io.cache_matches(io.read_record(path), params, k, cfg.symmetrized):
            report.cache_hits.append(path.name)
            report.add_file(path)
            continue
        todo.append((params, k, cfg.symmetrized, cfg.tol_unitarity, cfg.tol_residual))

    errors: List[BaseException] = []
    for k, record, err, dt in _fan_out(todo, cfg.workers):
        report.wall_times[f"k={k}"] = dt
        if err is not None:
            report.errors[f"k={k}"] = f"{type(err).__name__}: {err}"
            report.invariants[f"k={k} operator"] = not isinstance(err, InvariantError)
            errors.append(err)
            continue
        path = io.spectrum_path(cache, params.L, k, cfg.symmetrized)
        io.write_spectrum(path, record)
        report.add_file(path)
        d = record["diagnostics"]
        report.invariants[f"k={k} unitary"] = d["unitarity_error"] <= cfg.tol_unitarity
        if cfg.symmetrized:
            report.invariants[f"k={k} symmetric"] = d["symmetry_error"] <= cfg.tol_unitarity
        report.invariants[f"k={k} dimension"] = record["dim"] == sector_dimension(params.L, 2, k)
        report.summaries[f"k={k}"] = {"dim": record["dim"], **d}

    if cross_check and not errors:
        ok, dist = _cross_check(cfg)
        report.invariants["full-matrix cross-check"] = ok
        report.summaries["cross_check_max_phase_difference"] = dist

    cfg.out.mkdir(parents=True, exist_ok=True)
    report.write(cfg.out / f"spectrum_L{params.L}_report.json", cfg.out)
    code = _exit_code(errors)
    if code == EXIT_OK and not report.ok:
        code = EXIT_INVARIANT
    return code, report


def _cross_check(cfg: RunConfig) -> Tuple[bool, float]:
    L = cfg.model.L
    all_k = list(range(L))
    phases = []
    for k in all_k:
        path = io.spectrum_path(cfg.cache, L, k, cfg.symmetrized)
        if path.exists() and io.cache_matches(io.read_record(path), cfg.model, k, cfg.symmetrized):
            phases.append(io.load_spectrum(io.read_record(path)).phases)
        else:
            basis = build_sector_basis(L, k)
            phases.append(eigenphases(sector_floquet(cfg.model, basis, cfg.symmetrized, cfg.tol_unitarity),
                                      cfg.tol_residual).phases)
    full = full_floquet_matrix(cfg.model, cfg.symmetrized)
    dist = circular_distance(np.concatenate(phases), phases_from_eigenvalues(np.linalg.eigvals(full)))
    return dist <= 1e-8, dist


def load_cached_spectra(cfg: RunConfig):
    spectra = []
    for k in cfg.sectors:
        path = io.spectrum_path(cfg.cache, cfg.model.L, k, cfg.symmetrized)
        if not path.exists() or not io.cache_matches(io.read_record(path), cfg.model, k, cfg.symmetrized):
            raise CacheMissingError(
                f"no matching cache for L={cfg.model.L}, k={k} in {cfg.cache}; run "
                f"`kicstat spectrum --L {cfg.model.L} --J {cfg.model.J} --bx {cfg.model.b[0]} "
                f"--by {cfg.model.b[1]} --bz {cfg.model.b[2]} --k {k} --out {cfg.out}` first")
        spectra.append(io.load_spectrum(io.read_record(path)))
    return spectra


def _params_header(cfg: RunConfig) -> str:
    b = ";".join(repr(x) for x in cfg.model.b)
    return f"J={cfg.model.J!r}, b={b}, symmetrized={int(cfg.symmetrized)}"


def emit_bundle(bundle: StatsBundle, outdir: Path, head: str, member_tag: str, report: io.RunReport) -> None:
    """Write per-member and averaged curves plus summaries for one bundle."""
    names = {"spacing": "spacing_cdf", "form_factor": "form_factor", "number_variance": "number_variance"}
    keys = ";".join(str(k) for k in bundle.labels)
    for stat, block in bundle.blocks.items():
        base = names[stat]
        for label, curve in zip(bundle.labels, block.members):
            path = outdir / f"{base}_{member_tag}{label}.csv"
            io.write_curve(path, curve, f"{base} {member_tag}={label}, {head}")
            report.add_file(path)
        path = outdir / f"{base}_avg.csv"
        io.write_curve(path, block.average, f"{base} average, {member_tag}-list={keys}, {head}")
        report.add_file(path)
        avg = block.average
        dev = avg.values - avg.reference
        summary = {"max_abs_deviation": float(np.max(np.abs(dev)))}
        if stat == "spacing":
            band = avg.band
            inside = band > 0
            summary["max_deviation_in_sigma_w"] = float(np.max(np.abs(dev[inside]) / band[inside]))
        report.summaries[stat] = summary
    if bundle.saturation is not None or bundle.reference_saturation is not None:
        sat = {}
        for name, est in (("data", bundle.saturation), ("coe_reference", bundle.reference_saturation)):
            if est is not None:
                sat[name] = {"s_inf": est.s_inf, "s_inf_over_N": est.fraction,
                             "sigma2_inf": est.sigma2_inf, "phi_inf": est.phi_inf, "N": est.N}
        report.summaries["saturation"] = sat
    if bundle.k2_deviation:
        report.summaries["k2_deviation"] = {
            f"t={t}": {"n_sigma": v["n_sigma"], "k2": v["k2"], "N": v["N"]}
            for t, v in bundle.k2_deviation.items()}


def cmd_stats(cfg: RunConfig, baseline_samples: int = 0) -> Tuple[int, io.RunReport]:
    report = io.RunReport("stats")
    t0 = time.perf_counter()
    spectra = load_cached_spectra(cfg)
    bundle = run_statistics(spectra, cfg.pipeline)
    outdir = cfg.out / f"stats_L{cfg.model.L}"
    head = f"L={cfg.model.L}, {_params_header(cfg)}"
    emit_bundle(bundle, outdir, head, "k", report)
    report.wall_times["statistics"] = time.perf_counter() - t0
    if "spacing" in bundle.blocks:
        for c in bundle.blocks["spacing"].members + [bundle.blocks["spacing"].average]:
            report.invariants.setdefault("spacing CDF valid", True)
            report.invariants["spacing CDF valid"] &= bool(
                np.all(np.diff(c.values) >= 0) and 0 <= c.values[0] and c.values[-1] <= 1)
    if baseline_samples > 0:
        t1 = time.perf_counter()
        ens = EnsembleSpec("COE", int(round(bundle.mean_dim)), baseline_samples, cfg.seed)
        base = run_statistics(ensemble_spectra(ens, cfg.tol_residual), cfg.pipeline)
        sub = io.RunReport("baseline")
        emit_bundle(base, outdir / "baseline", _ensemble_header(ens), "m", sub)
        report.files.extend(sub.files)
        report.summaries["baseline"] = sub.summaries
        report.wall_times["baseline"] = time.perf_counter() - t1
    report.write(cfg.out / f"stats_L{cfg.model.L}_report.json", cfg.out)
    return (EXIT_OK if report.ok else EXIT_INVARIANT), report


def _ensemble_header(ens: EnsembleSpec) -> str:
    return f"ensemble={ens.ensemble}, dim={ens.dim}, samples={ens.samples}, seed={ens.seed}"


def cmd_baseline(ens: EnsembleSpec, cfg: RunConfig) -> Tuple[int, io.RunReport]:
    report = io.RunReport("baseline")
    t0 = time.perf_counter()
    tag = f"{ens.ensemble}_N{ens.dim}_seed{ens.seed}_n{ens.samples}"
    outdir = cfg.out / f"baseline_{tag}"
    spectra = ensemble_spectra(ens, cfg.tol_residual)
    for s in spectra:
        path = io.member_path(cfg.cache, ens, s.k)
        io.write_spectrum(path, io.member_record(s, ens))
        report.add_file(path)
    report.invariants["members unitary and symmetric"] = True
    bundle = run_statistics(spectra, cfg.pipeline)
    emit_bundle(bundle, outdir, _ensemble_header(ens), "m", report)
    report.wall_times["baseline"] = time.perf_counter() - t0
    report.write(cfg.out / f"baseline_{tag}_report.json", cfg.out)
    return EXIT_OK, report


def cmd_report(out: Path, stream=None) -> int:
    stream = stream or sys.stdout
    reports = sorted(Path(out).glob("*_report.json"))
    if not reports:
        raise ArgumentError(f"no reports found in {out}")
    code = EXIT_OK
    for path in reports:
        rec = io.read_record(path)
        bad = io.verify_manifest(path)
        failed = [k for k, v in rec.get("invariants", {}).items() if not v]
        status = "ok" if rec.get("ok") and not bad else "FAILED"
        print(f"{path.name}: {status} ({len(rec.get('manifest', {}))} files)", file=stream)
        for name in bad:
            print(f"  hash mismatch: {name}", file=stream)
        for name in failed:
            print(f"  invariant violated: {name}", file=stream)
        sat = rec.get("summaries", {}).get("saturation", {}).get("data")
        if sat:
            print(f"  s_inf/N = {sat['s_inf_over_N']:.4f}, Sigma2_inf = {sat['sigma2_inf']:.4f}", file=stream)
        dev = rec.get("summaries", {}).get("k2_deviation")
        if dev:
            print("  n_sigma: " + ", ".join(f"{t} {v['n_sigma']:+.2f}" for t, v in dev.items()), file=stream)
        if failed:
            code = EXIT_INVARIANT
        elif bad or not rec.get("ok"):
            code = code or EXIT_INVARIANT
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except ArgumentError as exc:
        print(f"kicstat: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "dims":
            if args.L is None:
                raise ArgumentError("--L is required")
            return cmd_dims(args.L, args.d)
        if args.command == "report":
            return cmd_report(args.out)
        if args.command == "baseline":
            dim = args.dim
            if dim is None:
                raise ArgumentError("--dim is required")
            if args.L is None:
                args.L = 2
            cfg = run_config(args)
            try:
                ens = EnsembleSpec(args.ensemble, dim, args.samples, args.seed)
            except ValueError as exc:
                raise ArgumentError(str(exc)) from exc
            code, report = cmd_baseline(ens, cfg)
        else:
            cfg = run_config(args)
            if args.command == "spectrum":
                code, report = cmd_spectrum(cfg, args.cross_check)
            else:
                code, report = cmd_stats(cfg, args.baseline_samples)
    except KicError as exc:
        print(f"kicstat: error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", EXIT_NUMERICAL)
    for name in report.cache_hits:
        print(f"cache hit: {name}")
    for name, msg in report.errors.items():
        print(f"{name}: {msg}", file=sys.stderr)
    failed = [k for k, v in report.invariants.items() if not v]
    for name in failed:
        print(f"invariant violated: {name}", file=sys.stderr)
    print(f"{report.command}: {'ok' if code == EXIT_OK else 'failed'}; {len(report.files)} files under {cfg.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
