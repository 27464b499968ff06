"""Spectral statistics of Floquet spectra and their COE references.

Spectra live on the unit circle, so unfolding is the linear map
``s = N phi / 2pi`` and every gap statistic is circular (the wrap-around gap
is included).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from .diagonalize import QuasiEnergySpectrum
from .errors import EstimationError

EULER_GAMMA = 0.5772156649015329
TWO_PI = 2 * np.pi


@dataclass
class UnfoldedSpectrum:
    s_values: np.ndarray
    N: int
    source: Tuple[Any, Any] = (None, None)

    def gaps(self) -> np.ndarray:
        return circular_gaps(self)


@dataclass
class StatCurve:
    abscissa: np.ndarray
    values: np.ndarray
    reference: Optional[np.ndarray] = None
    band: Optional[np.ndarray] = None
    label: str = ""
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        n = self.abscissa.size
        for name in ("values", "reference", "band"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                setattr(self, name, arr)
                if arr.size != n:
                    raise ValueError(f"{name} has {arr.size} entries, abscissa has {n}")
        if n > 1 and np.any(np.diff(self.abscissa) <= 0):
            raise ValueError("abscissa must be strictly increasing")


@dataclass
class FormFactorSeries:
    t_values: np.ndarray
    k2_values: np.ndarray
    N: int
    windowed: bool = False

    @property
    def tau_H(self) -> int:
        return self.N

    @property
    def tau(self) -> np.ndarray:
        return self.t_values / self.N


@dataclass
class SaturationEstimate:
    s_inf: float
    sigma2_inf: float
    phi_inf: float
    N: int

    @property
    def fraction(self) -> float:
        return self.s_inf / self.N


# unfolding and nearest-neighbour spacings

def unfold(spec: QuasiEnergySpectrum) -> UnfoldedSpectrum:
    if spec.dim == 0:
        raise ValueError("cannot unfold an empty spectrum")
    N = spec.dim
    s = np.sort(spec.phases) * N / TWO_PI
    return UnfoldedSpectrum(s, N, (spec.params.L if spec.params else None, spec.k))


def circular_gaps(u: UnfoldedSpectrum) -> np.ndarray:
    s = u.s_values
    return np.diff(np.concatenate([s, [s[0] + u.N]]))


def wigner_cdf(s):
    return 1.0 - np.exp(-np.pi * np.asarray(s, dtype=float) ** 2 / 4)


def sigma_w(W, N):
    """Binomial standard deviation of an empirical CDF value from N spacings."""
    W = np.asarray(W, dtype=float)
    if np.any((W < 0) | (W > 1)) or np.any(np.asarray(N) < 1):
        raise ValueError("need 0 <= W <= 1 and N >= 1")
    out = np.sqrt(W * (1 - W) / N)
    return float(out) if out.ndim == 0 else out


def spacing_cdf(u: UnfoldedSpectrum, grid) -> StatCurve:
    """Fraction of circular gaps <= s on ``grid``, with the Wigner surmise as reference."""
    if u.N < 2:
        raise ValueError("need at least two levels")
    grid = np.asarray(grid, dtype=float)
    gaps = np.sort(circular_gaps(u))
    W = np.searchsorted(gaps, grid, side="right") / gaps.size
    ref = wigner_cdf(grid)
    return StatCurve(grid, W, ref, sigma_w(ref, u.N), "spacing_cdf", {"N": u.N})


# form factor

def form_factor(spec: QuasiEnergySpectrum, t_max: int, t_min: int = 1, chunk: int = 512) -> FormFactorSeries:
    """K2(t / tau_H) = |sum_n exp(-i phi_n t)|^2 / N for t = t_min .. t_max."""
    if t_max < 1 or not 0 <= t_min <= t_max:
        raise ValueError(f"need 0 <= t_min <= t_max and t_max >= 1, got {t_min}, {t_max}")
    t = np.arange(t_min, t_max + 1)
    N = spec.dim
    k2 = np.empty(t.size)
    for a in range(0, t.size, chunk):
        tt = t[a:a + chunk]
        tr = np.exp(-1j * np.outer(tt, spec.phases)).sum(axis=1)
        k2[a:a + chunk] = np.abs(tr) ** 2 / N
    return FormFactorSeries(t, k2, N)


def windowed_form_factor(series: FormFactorSeries, window: Optional[int] = None) -> StatCurve:
    """Average K2 over consecutive non-overlapping blocks of ``window`` kicks.

    Defaults to round(tau_H / 25).  The reference column is the finite-N COE
    form factor averaged over the same kicks.
    """
    if window is None:
        window = max(1, int(round(series.N / 25)))
    if window < 1:
        raise ValueError("window must be >= 1")
    n = series.t_values.size
    if window > n:
        raise ValueError(f"window of {window} kicks exceeds the {n}-kick series")
    nblocks = n // window
    use = slice(0, nblocks * window)
    t = series.t_values[use].reshape(nblocks, window).astype(float)
    k2 = series.k2_values[use].reshape(nblocks, window)
    tau = t.mean(axis=1) / series.N
    ref = coe_k2_finite(t / series.N, series.N).mean(axis=1)
    return StatCurve(tau, k2.mean(axis=1), ref, None, "form_factor",
                     {"N": series.N, "window": window})


def coe_k2(tau):
    """Form factor of the infinite-dimensional COE."""
    tau = np.abs(np.asarray(tau, dtype=float))
    out = np.empty_like(tau)
    lo = tau < 1
    tl = tau[lo]
    out[lo] = 2 * tl - tl * np.log1p(2 * tl)
    th = tau[~lo]
    out[~lo] = 2 - th * np.log((2 * th + 1) / (2 * th - 1))
    return float(out) if out.ndim == 0 else out


def coe_k2_finite(tau, N):
    """Leading finite-N correction (1 + 1/N) K2_COE(tau)."""
    return (1.0 + 1.0 / N) * coe_k2(tau)


def k2_deviation_sigmas(k2_at_t: Sequence[float], N_per_sector: Sequence[int], t: int = 1) -> float:
    """Deviation of the sector-mean K2(t/tau_H) from its COE value, in COE standard deviations.

    At t = 1 the COE mean and standard deviation are both 2/N per sector.  For
    t > 1 the finite-N COE form factor serves as both, consistent with an
    exponential distribution of K2.  The spread of the mean over n sectors is
    sqrt(sum std_i^2) / n.  Negative values mean the data undershoot.
    """
    k2 = np.asarray(k2_at_t, dtype=float)
    N = np.asarray(N_per_sector, dtype=float)
    if k2.size == 0:
        raise ValueError("need at least one sector")
    if N.size != k2.size:
        raise ValueError("one dimension per sector is required")
    expected = 2.0 / N if t == 1 else coe_k2_finite(t / N, N)
    spread = np.sqrt(np.sum(expected**2)) / k2.size
    return float((k2.mean() - expected.mean()) / spread)


# number variance

def coe_sigma2_asymptotic(s):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("s must be positive")
    out = (2 / np.pi**2) * (np.log(TWO_PI * s) + 1 + EULER_GAMMA - np.pi**2 / 8)
    return float(out) if out.ndim == 0 else out


def coe_number_variance_finite(
    s,
    N: int,
    m_max: Optional[int] = None,
    tail_tol: float = 1e-8,
    closed_tail: bool = True,
    block: int = 4096,
):
    """Finite-N COE number variance from the form-factor sum.

        Sigma2(s, N) = (2N/pi^2) sum_m sin^2(m pi s / N) K2(m / N) / m^2

    with K2 the finite-N COE form factor, whose large-m value is
    K_inf = 1 + 1/N.  With ``closed_tail`` the K_inf part is summed exactly,

        sum_{m>=1} sin^2(m pi x) / m^2 = (pi^2 / 2) x (1 - x),   0 <= x <= 1,

    and only the decaying remainder K2 - K_inf (~ N^2 / 12 m^2) is summed term
    by term.  The explicit sum runs to at least ``m_max`` (default 10 N) and
    continues until the remainder's tail bound 2 N^3 / (36 pi^2 m^3) drops
    below ``tail_tol``.  With ``closed_tail=False`` the raw series is cut at
    ``m_max``, leaving a tail of about N / (pi^2 m_max).
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if m_max is None:
        m_max = 10 * N
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    pref = 2 * N / np.pi**2
    k_inf = 1.0 + 1.0 / N
    x = s / N
    if closed_tail:
        if np.any((x < 0) | (x > 1)):
            raise ValueError("closed-form tail needs 0 <= s <= N")
        total = k_inf * (np.pi**2 / 2) * x * (1 - x)
        m_stop = max(m_max, int(np.ceil(N * (2 / (36 * np.pi**2 * tail_tol)) ** (1 / 3))))
    else:
        total = np.zeros_like(s)
        m_stop = m_max
    for a in range(1, m_stop + 1, block):
        m = np.arange(a, min(a + block, m_stop + 1), dtype=float)
        k2 = coe_k2_finite(m / N, N)
        w = (k2 - k_inf if closed_tail else k2) / m**2
        total += (np.sin(np.outer(x, m) * np.pi) ** 2) @ w
    out = np.maximum(pref * total, 0.0)
    return float(out[0]) if out.size == 1 else out


def log_s_grid(N: int, per_decade: int = 40, s_min: float = 0.1, s_max: Optional[float] = None) -> np.ndarray:
    if s_max is None:
        s_max = N / 2
    n = int(np.floor(per_decade * np.log10(s_max / s_min) + 1e-9)) + 1
    grid = s_min * 10 ** (np.arange(n) / per_decade)
    if grid[-1] < s_max * (1 - 1e-12):
        grid = np.append(grid, s_max)
    return grid


def level_counts(u: UnfoldedSpectrum, s_grid, M: Optional[int] = None) -> np.ndarray:
    """Level counts in windows [x_j, x_j + s) on the unfolded circle.

    Offsets are x_j = j N / M; returns an array of shape (len(s_grid), M).
    """
    N = u.N
    M = 4 * N if M is None else M
    if M < 1:
        raise ValueError("M must be >= 1")
    s_grid = np.asarray(s_grid, dtype=float)
    ext = np.concatenate([u.s_values, u.s_values + N, [np.inf]])
    x = np.arange(M) * (N / M)
    start = np.searchsorted(ext, x, side="left")
    end = np.searchsorted(ext, x[None, :] + s_grid[:, None], side="left")
    return end - start[None, :]


def number_variance_empirical(u: UnfoldedSpectrum, s_grid, M: Optional[int] = None) -> StatCurve:
    """Population variance over M equally spaced window offsets (default M = 4N)."""
    counts = level_counts(u, s_grid, M)
    s_grid = np.asarray(s_grid, dtype=float)
    return StatCurve(s_grid, counts.var(axis=1), None, None, "number_variance",
                     {"N": u.N, "M": counts.shape[1]})


def moving_average(values, width: int = 5) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically-truncated at the ends."""
    values = np.asarray(values, dtype=float)
    half = width // 2
    csum = np.concatenate([[0.0], np.cumsum(values)])
    idx = np.arange(values.size)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, values.size)
    return (csum[hi] - csum[lo]) / (hi - lo)


def estimate_saturation(
    curve: StatCurve,
    N: int,
    onset: float = 0.95,
    plateau: Tuple[float, float] = (0.25, 0.45),
    smooth: int = 5,
) -> SaturationEstimate:
    """Plateau level and onset of a number-variance curve.

    The plateau value is the mean of the smoothed curve for s in
    ``plateau`` * N; the onset s_inf is the first grid point where the smoothed
    curve reaches ``onset`` times that value.
    """
    s = curve.abscissa
    sm = moving_average(curve.values, smooth)
    inside = (s >= plateau[0] * N) & (s <= plateau[1] * N)
    if not np.any(inside):
        raise EstimationError("curve has no points inside the plateau window")
    level = float(sm[inside].mean())
    if level <= 0:
        raise EstimationError("plateau level is not positive")
    reached = np.flatnonzero(sm >= onset * level)
    if reached.size == 0:
        raise EstimationError(f"curve never reaches {onset} of its plateau level")
    s_inf = float(s[reached[0]])
    return SaturationEstimate(s_inf, level, TWO_PI * s_inf / N, N)


# aggregation

def average_curves(curves: Sequence[StatCurve], label: Optional[str] = None) -> StatCurve:
    """Equal-weight mean of curves sharing an abscissa; band = std over members."""
    if not curves:
        raise ValueError("no curves to average")
    x = curves[0].abscissa
    for c in curves[1:]:
        if c.abscissa.shape != x.shape or not np.allclose(c.abscissa, x, rtol=0, atol=0):
            raise ValueError("curves must share their abscissa")
    vals = np.array([c.values for c in curves])
    ref = None
    if all(c.reference is not None for c in curves):
        ref = np.mean([c.reference for c in curves], axis=0)
    band = vals.std(axis=0) if len(curves) > 1 else np.zeros(x.size)
    return StatCurve(x, vals.mean(axis=0), ref, band, label or curves[0].label,
                     {"members": len(curves)})


def resample(curve: StatCurve, grid) -> StatCurve:
    """Linear interpolation of a curve (and its reference) onto ``grid``."""
    grid = np.asarray(grid, dtype=float)
    ref = None if curve.reference is None else np.interp(grid, curve.abscissa, curve.reference)
    return StatCurve(grid, np.interp(grid, curve.abscissa, curve.values), ref, None,
                     curve.label, dict(curve.meta))
