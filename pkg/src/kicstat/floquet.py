"""Kicked Ising Floquet operator and its momentum-sector matrices.

One period is ``U = U_ising(J) U_kick(b)`` with

    U_ising = exp(-i J sum_j sz_j sz_{j+1}),   U_kick = exp(-i sum_j b . sigma_j)

on a periodic ring of qubits.  The symmetrized period
``U_kick(b/2) U_ising(J) U_kick(b/2)`` is unitarily equivalent and, in a basis
invariant under the anti-unitary ``K = conj o R``, is a complex symmetric
matrix.  Only the qubit case (d = 2) is supported here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .combinatorics import (
    BasisState,
    is_special_sector,
    orbit_arrays,
    reflect_indices,
    sector_dimension,
    translate_indices,
)
from .errors import ConsistencyError, InvariantError, NumericalError

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

CANONICAL_J = 0.7
CANONICAL_B = (0.9, 0.0, 0.9)

BRANCH_TOL = 1e-10
DROP_TOL = 1e-8


@dataclass(frozen=True)
class ModelParams:
    J: float
    b: Tuple[float, float, float]
    L: int

    def __post_init__(self):
        object.__setattr__(self, "J", float(self.J))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if len(self.b) != 3:
            raise ValueError("field b must have three components")
        if self.L < 2:
            raise ValueError(f"need at least 2 sites, got L={self.L}")
        if not np.all(np.isfinite([self.J, *self.b])):
            raise ValueError("couplings must be finite")

    @classmethod
    def canonical(cls, L: int) -> "ModelParams":
        return cls(CANONICAL_J, CANONICAL_B, L)

    def in_xz_plane(self) -> Tuple["ModelParams", float]:
        """Equivalent parameters with b_y = 0 and the z-rotation angle used.

        Rotating every spin by ``theta`` about z commutes with the Ising layer,
        with T and with R, so sector spectra are unchanged.
        """
        bx, by, bz = self.b
        if by == 0.0 and bx >= 0.0:
            return self, 0.0
        theta = float(np.arctan2(by, bx))
        return ModelParams(self.J, (float(np.hypot(bx, by)), 0.0, bz), self.L), theta


def single_kick_matrix(b) -> np.ndarray:
    """exp(-i b . sigma) for a single qubit."""
    b = np.asarray(b, dtype=float)
    norm = float(np.linalg.norm(b))
    if norm == 0.0:
        return np.eye(2, dtype=complex)
    n = b / norm
    n_sigma = n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z
    return np.cos(norm) * np.eye(2) - 1j * np.sin(norm) * n_sigma


def ising_phase(state: BasisState, J: float, L: Optional[int] = None) -> float:
    """J * sum_j z_j z_{j+1} on the ring, with z = +1 for digit 0 and -1 for 1."""
    if state.d != 2:
        raise ValueError("the Ising layer is defined for qubits only")
    L = state.L if L is None else L
    if L != state.L:
        raise ValueError("state length does not match L")
    z = [1 - 2 * m for m in state.digits]
    return J * sum(z[j] * z[(j + 1) % L] for j in range(L))


def ising_phases(L: int, J: float) -> np.ndarray:
    """Ising phase of every encoded basis state (length 2**L)."""
    idx = np.arange(2**L, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(L - 1, -1, -1)) & 1
    z = 1 - 2 * bits
    return J * np.sum(z * np.roll(z, -1, axis=1), axis=1).astype(float)


def apply_kick(psi: np.ndarray, u2: np.ndarray, L: int) -> np.ndarray:
    """Apply ``u2`` to every site of the column block ``psi`` (shape (2**L, c))."""
    c = psi.shape[1]
    out = psi
    for site in range(L):
        out = np.matmul(u2, out.reshape(2**site, 2, -1))
    return out.reshape(2**L, c)


class FloquetLayers:
    """Precomputed single-period factors for one parameter set."""

    def __init__(self, params: ModelParams):
        self.params, self.rotation = params.in_xz_plane()
        p = self.params
        self.L = p.L
        self.ising = np.exp(-1j * ising_phases(p.L, p.J))
        self.kick = single_kick_matrix(p.b)
        self.half_kick = single_kick_matrix(np.asarray(p.b) / 2)

    def apply(self, psi: np.ndarray, symmetrized: bool = True) -> np.ndarray:
        squeeze = psi.ndim == 1
        if squeeze:
            psi = psi[:, None]
        if symmetrized:
            out = apply_kick(psi, self.half_kick, self.L)
            out = self.ising[:, None] * out
            out = apply_kick(out, self.half_kick, self.L)
        else:
            out = self.ising[:, None] * apply_kick(psi, self.kick, self.L)
        return out[:, 0] if squeeze else out


def full_floquet_matrix(params: ModelParams, symmetrized: bool = False) -> np.ndarray:
    """Dense 2**L x 2**L period operator built from Kronecker products.

    Uses the field exactly as given (no rotation); intended as a reference for
    small L only.
    """
    L = params.L
    kick_of = lambda b: _kron_all(single_kick_matrix(b), L)
    ising = np.diag(np.exp(-1j * ising_phases(L, params.J)))
    if symmetrized:
        half = kick_of(np.asarray(params.b) / 2)
        return half @ ising @ half
    return ising @ kick_of(params.b)


def _kron_all(u2: np.ndarray, L: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(L):
        out = np.kron(out, u2)
    return out


def translation_matrix(L: int) -> sp.csr_matrix:
    idx = np.arange(2**L, dtype=np.int64)
    rows = translate_indices(idx, L)
    return sp.csr_matrix((np.ones(idx.size), (rows, idx)), shape=(2**L, 2**L))


def reflection_matrix(L: int) -> sp.csr_matrix:
    idx = np.arange(2**L, dtype=np.int64)
    rows = reflect_indices(idx, L)
    return sp.csr_matrix((np.ones(idx.size), (rows, idx)), shape=(2**L, 2**L))


def apply_K(psi: np.ndarray, L: int) -> np.ndarray:
    """Anti-unitary K = complex conjugation after site reflection."""
    out = np.empty_like(psi)
    out[reflect_indices(np.arange(2**L, dtype=np.int64), L)] = psi
    return out.conj()


@dataclass
class SectorBasis:
    """Orthonormal K-invariant basis of one momentum sector.

    ``matrix`` is a sparse (2**L, dim) array whose columns are the basis
    vectors; ``groups[i]`` is the orbit representative each column came from.
    """

    L: int
    k: int
    matrix: sp.csc_matrix
    groups: np.ndarray
    special: bool

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def vector(self, i: int) -> np.ndarray:
        return self.matrix[:, i].toarray().ravel()

    @property
    def vectors(self) -> List[np.ndarray]:
        return [self.vector(i) for i in range(self.dim)]


def _fix_sign(v: np.ndarray) -> np.ndarray:
    # A K-invariant vector stays invariant only under a real rescaling, so the
    # phase freedom left is a sign: make the first amplitude point into Re > 0
    # (or along +i when purely imaginary).
    a = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
    if a.real < -1e-12 or (abs(a.real) <= 1e-12 and a.imag < 0):
        return -v
    return v


def _orthonormalize(cands: List[np.ndarray], drop_tol: float = DROP_TOL) -> List[np.ndarray]:
    cands = sorted(cands, key=lambda c: -np.linalg.norm(c))
    out: List[np.ndarray] = []
    for c in cands:
        w = c.copy()
        for q in out:
            w -= np.vdot(q, w) * q
        norm = np.linalg.norm(w)
        if norm >= drop_tol:
            out.append(w / norm)
    return out


def build_sector_basis(L: int, k: int) -> SectorBasis:
    """K-invariant orthonormal basis of the momentum-k sector.

    Each surviving orbit representative |n> gives v = P_k|n> (normalized) and
    its image K v, supported on the reflected orbit.  If the reflected orbit
    is a different orbit (<n|R P_k|n> = 0) the pair yields the two invariant
    combinations v + Kv and i(v - Kv); otherwise Kv is a phase times v and a
    single invariant vector results.
    """
    if not 0 <= k < L:
        raise ValueError(f"momentum k={k} outside [0, {L})")
    rep, period = orbit_arrays(L, 2)
    reps = np.flatnonzero(rep == np.arange(rep.size))
    reps = reps[(k * period[reps]) % L == 0]
    mirror_rep = rep[reflect_indices(reps, L)]
    omega = np.exp(-2j * np.pi * k / L)

    rows: List[np.ndarray] = []
    vals: List[np.ndarray] = []
    groups: List[int] = []
    done = set()
    for r, r_mirror in zip(reps.tolist(), mirror_rep.tolist()):
        if r in done:
            continue
        J = int(period[r])
        members = np.empty(J, dtype=np.int64)
        members[0] = r
        for j in range(1, J):
            members[j] = translate_indices(members[j - 1], L)
        amps = omega ** np.arange(J) / np.sqrt(J)
        mirrored = reflect_indices(members, L)

        support = np.union1d(members, mirrored)
        pos = np.searchsorted(support, members)
        pos_m = np.searchsorted(support, mirrored)
        v = np.zeros(support.size, dtype=complex)
        v[pos] = amps
        kv = np.zeros(support.size, dtype=complex)
        kv[pos_m] = amps.conj()

        overlap = kv[np.searchsorted(support, r)] if r in set(mirrored.tolist()) else 0.0
        pair = abs(overlap) < BRANCH_TOL
        vecs = _orthonormalize([v + kv, 1j * (v - kv)])
        expected = 2 if pair else 1
        if len(vecs) != expected:
            raise ConsistencyError(
                f"orbit {r} (k={k}, L={L}) gave {len(vecs)} basis vectors, expected {expected}")
        for w in vecs:
            rows.append(support)
            vals.append(_fix_sign(w))
            groups.append(r)
        done.add(r)
        done.add(r_mirror)

    dim = len(groups)
    if dim != sector_dimension(L, 2, k):
        raise ConsistencyError(
            f"sector k={k}, L={L}: built {dim} vectors, counting gives {sector_dimension(L, 2, k)}")
    cols = np.repeat(np.arange(dim), [r.size for r in rows])
    mat = sp.csc_matrix(
        (np.concatenate(vals) if vals else np.zeros(0, complex),
         (np.concatenate(rows) if rows else np.zeros(0, np.int64), cols)),
        shape=(2**L, dim),
    )
    return SectorBasis(L, k, mat, np.asarray(groups, dtype=np.int64), is_special_sector(L, k))


@dataclass
class SectorOperator:
    k: int
    matrix: np.ndarray
    params: ModelParams
    symmetrized: bool
    special: bool = False
    unitarity_error: float = 0.0
    symmetry_error: float = 0.0
    metadata: Dict[str, float] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def unitarity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))) if m.size else 0.0


def symmetry_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.T))) if m.size else 0.0


def sector_floquet(
    params: ModelParams,
    basis: SectorBasis,
    symmetrized: bool = True,
    tol: float = 1e-10,
    chunk: int = 128,
) -> SectorOperator:
    """Dense matrix <u_i|U|u_j> of the period operator in one sector.

    Columns are produced by applying the period to blocks of basis vectors on
    the full 2**L register, so memory stays at O(2**L * chunk).
    """
    if basis.L != params.L:
        raise ValueError(f"basis built for L={basis.L}, params have L={params.L}")
    layers = FloquetLayers(params)
    B = basis.matrix
    BH = B.conj().T.tocsr()
    dim = basis.dim
    M = np.empty((dim, dim), dtype=complex)
    for start in range(0, dim, chunk):
        stop = min(start + chunk, dim)
        X = B[:, start:stop].toarray()
        M[:, start:stop] = BH @ layers.apply(X, symmetrized)

    op = SectorOperator(
        k=basis.k,
        matrix=M,
        params=params,
        symmetrized=symmetrized,
        special=basis.special,
        unitarity_error=unitarity_error(M),
        symmetry_error=symmetry_error(M),
        metadata={"z_rotation": layers.rotation},
    )
    if op.unitarity_error > tol:
        raise NumericalError(
            f"sector k={basis.k} operator deviates from unitarity by {op.unitarity_error:.3e}",
            worst=op.unitarity_error)
    return op


def check_unitary_symmetric(m: np.ndarray, tol: float = 1e-10, symmetric: bool = True, label: str = "matrix") -> None:
    """Shared structural check for sector operators and ensemble members."""
    u_err = unitarity_error(m)
    if u_err > tol:
        raise InvariantError(f"{label}: unitarity error {u_err:.3e}")
    if symmetric:
        s_err = symmetry_error(m)
        if s_err > tol:
            raise InvariantError(f"{label}: symmetry error {s_err:.3e}")


def check_sector_operator(op: SectorOperator, tol: float = 1e-10) -> None:
    """Raise InvariantError if a symmetrized sector matrix is not unitary and complex symmetric."""
    check_unitary_symmetric(op.matrix, tol, op.symmetrized, label=f"sector k={op.k}")
