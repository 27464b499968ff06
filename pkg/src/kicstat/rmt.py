"""Circular-ensemble samples used as finite-size reference spectra."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .floquet import check_unitary_symmetric

ENSEMBLES = ("COE", "CUE")


@dataclass(frozen=True)
class EnsembleSpec:
    ensemble: str
    dim: int
    samples: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ensemble", self.ensemble.upper())
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}; choose from {ENSEMBLES}")
        if self.dim < 2:
            raise ValueError("ensemble dimension must be >= 2")
        if self.samples < 1:
            raise ValueError("need at least one sample")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


def member_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream for ensemble member ``index``.

    Streams depend only on (seed, index), never on evaluation order.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def sample_haar_unitary(N: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix.

    The columns are rephased so that R has a positive real diagonal, which
    removes the gauge bias of the raw QR output (Mezzadri's recipe).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample_coe(N: int, rng: Optional[np.random.Generator] = None, tol: float = 1e-10) -> np.ndarray:
    """Symmetric unitary S = U^T U with U Haar distributed."""
    if N < 2:
        raise ValueError("COE members need N >= 2")
    u = sample_haar_unitary(N, rng)
    s = u.T @ u
    check_unitary_symmetric(s, tol, label="COE member")
    return s


def sample_member(spec: EnsembleSpec, index: int) -> np.ndarray:
    rng = member_rng(spec.seed, index)
    if spec.ensemble == "COE":
        return sample_coe(spec.dim, rng)
    return sample_haar_unitary(spec.dim, rng)
