"""Quasi-energies of sector operators."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
import scipy.linalg

from .errors import NumericalError
from .floquet import ModelParams, SectorOperator

TWO_PI = 2 * np.pi
UNIMODULAR_TOL = 1e-8


@dataclass
class QuasiEnergySpectrum:
    """Ascending eigenphases phi_n in [0, 2pi), eigenvalues exp(-i phi_n)."""

    k: int
    phases: np.ndarray
    params: Optional[ModelParams] = None
    residual: float = 0.0
    symmetrized: bool = True
    special: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)

    @property
    def dim(self) -> int:
        return int(self.phases.size)

    N = dim


def phases_from_eigenvalues(lam: np.ndarray) -> np.ndarray:
    """phi = -arg(lambda) folded into [0, 2pi), sorted ascending."""
    phi = -np.angle(lam)
    phi = np.where(phi < 0, phi + TWO_PI, phi)
    # -arg can land exactly on 2pi after the shift; fold it to 0
    phi = np.where(phi >= TWO_PI, phi - TWO_PI, phi)
    return np.sort(phi)


def eigenphases(op, tol: float = 1e-10, k: Optional[int] = None) -> QuasiEnergySpectrum:
    """Full eigendecomposition of a sector operator (LAPACK geev, Schur based).

    ``op`` is a :class:`SectorOperator` or a bare square matrix.  Every
    eigenvalue must be unimodular within 1e-8 and every eigenpair must satisfy
    ``|U v - lambda v| <= tol``.
    """
    if isinstance(op, SectorOperator):
        U, params, sym, special, k = op.matrix, op.params, op.symmetrized, op.special, op.k
    else:
        U, params, sym, special = np.asarray(op, dtype=complex), None, True, False
        k = 0 if k is None else k
    n = U.shape[0]
    if n == 0:
        return QuasiEnergySpectrum(k, np.zeros(0), params, 0.0, sym, special)

    lam, vecs = scipy.linalg.eig(U, check_finite=False)
    vecs /= np.linalg.norm(vecs, axis=0)

    modulus_err = float(np.max(np.abs(np.abs(lam) - 1.0)))
    if modulus_err > UNIMODULAR_TOL:
        raise NumericalError(f"eigenvalue off the unit circle by {modulus_err:.3e}", worst=modulus_err)
    residual = float(np.max(np.linalg.norm(U @ vecs - vecs * lam, axis=0)))
    if residual > tol:
        raise NumericalError(f"eigen-residual {residual:.3e} exceeds {tol:.1e}", worst=residual)
    return QuasiEnergySpectrum(k, phases_from_eigenvalues(lam), params, residual, sym, special)


def trace_power(spec: QuasiEnergySpectrum, t: int) -> complex:
    """sum_n exp(-i phi_n t), i.e. Tr U^t."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return complex(np.sum(np.exp(-1j * spec.phases * t)))


def circular_distance(a, b) -> float:
    """Largest pointwise gap between two phase multisets living on the circle.

    Both sets are cut at the midpoint of the widest gap of ``a`` so the
    comparison is insensitive to levels straddling 0 = 2pi.
    """
    a = np.sort(np.mod(np.asarray(a, dtype=float), TWO_PI))
    b = np.sort(np.mod(np.asarray(b, dtype=float), TWO_PI))
    if a.size != b.size:
        return float("inf")
    if a.size == 0:
        return 0.0
    gaps = np.diff(np.concatenate([a, [a[0] + TWO_PI]]))
    i = int(np.argmax(gaps))
    cut = a[i] + gaps[i] / 2
    a2 = np.sort(np.mod(a - cut, TWO_PI))
    b2 = np.sort(np.mod(b - cut, TWO_PI))
    return float(np.max(np.abs(a2 - b2)))
