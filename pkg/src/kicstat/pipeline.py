"""Per-member statistics and their equal-weight aggregation.

The same code path serves KIC momentum sectors and sampled ensemble members,
so the physical and reference curves are directly comparable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .diagonalize import QuasiEnergySpectrum, eigenphases
from .errors import EstimationError
from .rmt import EnsembleSpec, sample_member
from .spectral import (
    SaturationEstimate,
    StatCurve,
    average_curves,
    coe_k2_finite,
    coe_number_variance_finite,
    estimate_saturation,
    form_factor,
    k2_deviation_sigmas,
    log_s_grid,
    number_variance_empirical,
    resample,
    sigma_w,
    spacing_cdf,
    unfold,
    windowed_form_factor,
)

STATISTICS = ("spacing", "form_factor", "number_variance", "saturation", "k2_deviation")


@dataclass
class PipelineConfig:
    statistics: Tuple[str, ...] = STATISTICS
    spacing_grid: np.ndarray = field(default_factory=lambda: np.round(np.linspace(0.0, 3.0, 61), 12))
    tau_max: float = 2.0
    window_kicks: Optional[int] = None
    smax_frac: float = 0.5
    per_decade: int = 40
    offsets_per_level: int = 4
    deviation_kicks: Tuple[int, ...] = (1, 2, 3, 4)
    saturation_onset: float = 0.95
    saturation_plateau: Tuple[float, float] = (0.25, 0.45)

    def __post_init__(self):
        unknown = set(self.statistics) - set(STATISTICS)
        if unknown:
            raise ValueError(f"unknown statistics {sorted(unknown)}")
        if "saturation" in self.statistics and "number_variance" not in self.statistics:
            self.statistics = tuple(self.statistics) + ("number_variance",)


@dataclass
class StatBlock:
    members: List[StatCurve]
    average: StatCurve


@dataclass
class StatsBundle:
    dims: List[int]
    labels: List[int]
    blocks: Dict[str, StatBlock] = field(default_factory=dict)
    saturation: Optional[SaturationEstimate] = None
    reference_saturation: Optional[SaturationEstimate] = None
    k2_deviation: Dict[int, Dict[str, object]] = field(default_factory=dict)

    @property
    def total_levels(self) -> int:
        return int(sum(self.dims))

    @property
    def mean_dim(self) -> float:
        return float(np.mean(self.dims))


def k2_deviation(spectra: Sequence[QuasiEnergySpectrum], t: int) -> Dict[str, object]:
    k2 = [float(form_factor(s, t, t_min=t).k2_values[0]) for s in spectra]
    Ns = [s.dim for s in spectra]
    return {"t": t, "k2": k2, "N": Ns, "n_sigma": k2_deviation_sigmas(k2, Ns, t)}


def run_statistics(spectra: Sequence[QuasiEnergySpectrum], config: Optional[PipelineConfig] = None) -> StatsBundle:
    config = config or PipelineConfig()
    if not spectra:
        raise ValueError("no spectra to analyse")
    dims = [s.dim for s in spectra]
    bundle = StatsBundle(dims, [s.k for s in spectra])
    unfolded = [unfold(s) for s in spectra]
    stats = config.statistics

    if "spacing" in stats:
        members = [spacing_cdf(u, config.spacing_grid) for u in unfolded]
        avg = average_curves(members, "spacing_cdf")
        avg.band = sigma_w(avg.reference, bundle.total_levels)
        bundle.blocks["spacing"] = StatBlock(members, avg)

    if "form_factor" in stats:
        members = []
        for s in spectra:
            t_max = int(np.ceil(config.tau_max * s.dim)) + (config.window_kicks or round(s.dim / 25))
            members.append(windowed_form_factor(form_factor(s, t_max), config.window_kicks))
        ref_member = members[int(np.argmin(dims))]
        lo = max(c.abscissa[0] for c in members)
        hi = min(c.abscissa[-1] for c in members)
        grid = ref_member.abscissa[(ref_member.abscissa >= lo) & (ref_member.abscissa <= hi)]
        grid = grid[grid <= config.tau_max + 1e-12]
        avg = average_curves([resample(c, grid) for c in members], "form_factor")
        bundle.blocks["form_factor"] = StatBlock(members, avg)

    if "number_variance" in stats:
        members = []
        for u in unfolded:
            g = log_s_grid(u.N, config.per_decade, s_max=config.smax_frac * u.N)
            c = number_variance_empirical(u, g, config.offsets_per_level * u.N)
            c.reference = coe_number_variance_finite(g, u.N)
            members.append(c)
        grid = log_s_grid(min(dims), config.per_decade, s_max=config.smax_frac * min(dims))
        avg = average_curves([resample(c, grid) for c in members], "number_variance")
        bundle.blocks["number_variance"] = StatBlock(members, avg)

        if "saturation" in stats:
            N = int(round(bundle.mean_dim))
            kw = dict(onset=config.saturation_onset, plateau=config.saturation_plateau)
            try:
                bundle.saturation = estimate_saturation(avg, N, **kw)
            except EstimationError:
                bundle.saturation = None
            bundle.reference_saturation = estimate_saturation(
                StatCurve(grid, avg.reference), N, **kw)

    if "k2_deviation" in stats:
        for t in config.deviation_kicks:
            bundle.k2_deviation[t] = k2_deviation(spectra, t)
    return bundle


def ensemble_spectra(spec: EnsembleSpec, tol: float = 1e-10) -> List[QuasiEnergySpectrum]:
    """Eigenphases of every sampled member, labelled by member index."""
    return [eigenphases(sample_member(spec, i), tol, k=i) for i in range(spec.samples)]


def ensemble_statistics(spec: EnsembleSpec, config: Optional[PipelineConfig] = None, tol: float = 1e-10) -> StatsBundle:
    return run_statistics(ensemble_spectra(spec, tol), config)


def baseline_standard_error(bundle: StatsBundle, statistic: str, grid, group_size: int) -> np.ndarray:
    """Standard error of a ``group_size``-member mean curve, estimated on ``grid``.

    The spread is the sample standard deviation over the members of a
    reference bundle (typically a larger sampled-COE run), each member first
    interpolated onto ``grid``.
    """
    members = bundle.blocks[statistic].members
    if len(members) < 2:
        raise ValueError("need at least two reference members")
    if group_size < 1:
        raise ValueError("group_size must be >= 1")
    vals = np.array([resample(c, grid).values for c in members])
    return vals.std(axis=0, ddof=1) / np.sqrt(group_size)
