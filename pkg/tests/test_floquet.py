import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kicstat.combinatorics import BasisState, orbit_arrays, reflect_indices, sector_dimension
from kicstat.diagonalize import circular_distance, eigenphases, phases_from_eigenvalues
from kicstat.errors import InvariantError, NumericalError
from kicstat.floquet import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    FloquetLayers,
    ModelParams,
    SectorOperator,
    apply_K,
    apply_kick,
    build_sector_basis,
    check_sector_operator,
    full_floquet_matrix,
    ising_phase,
    ising_phases,
    sector_floquet,
    single_kick_matrix,
    translation_matrix,
)

finite = st.floats(-3, 3, allow_nan=False)


def taylor_expm(a, squarings=10, terms=30):
    """Matrix exponential by scaling and squaring a truncated Taylor series."""
    a = a / 2**squarings
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for n in range(1, terms):
        term = term @ a / n
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def b_dot_sigma(b):
    return b[0] * PAULI_X + b[1] * PAULI_Y + b[2] * PAULI_Z


class TestModelParams:
    def test_rejects_short_chain(self):
        with pytest.raises(ValueError):
            ModelParams(0.7, (0.9, 0, 0.9), 1)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            ModelParams(float("nan"), (0.9, 0, 0.9), 4)

    def test_xz_rotation_keeps_field_length(self):
        p, theta = ModelParams(0.7, (0.3, 0.4, 0.9), 4).in_xz_plane()
        assert p.b == pytest.approx((0.5, 0.0, 0.9))
        assert theta == pytest.approx(np.arctan2(0.4, 0.3))


class TestSingleKick:
    def test_zero_field(self):
        assert np.array_equal(single_kick_matrix((0, 0, 0)), np.eye(2))

    def test_quarter_turn(self):
        np.testing.assert_allclose(single_kick_matrix((np.pi / 2, 0, 0)), -1j * PAULI_X, atol=1e-15)

    def test_canonical_field_values(self):
        u = single_kick_matrix((0.9, 0, 0.9))
        c, s = np.cos(0.9 * np.sqrt(2)), np.sin(0.9 * np.sqrt(2)) / np.sqrt(2)
        assert u[0, 0] == pytest.approx(c - 1j * s)
        assert u[1, 1] == pytest.approx(c + 1j * s)
        assert u[0, 1] == pytest.approx(-1j * s) and u[1, 0] == pytest.approx(-1j * s)
        assert round(c, 4) == 0.2936 and round(s, 4) == 0.6759

    @given(finite, finite, finite)
    def test_matches_taylor_exponential(self, bx, by, bz):
        b = np.array([bx, by, bz])
        np.testing.assert_allclose(single_kick_matrix(b), taylor_expm(-1j * b_dot_sigma(b)), atol=1e-12)

    @given(finite, finite, finite)
    def test_unitary_with_unit_determinant(self, bx, by, bz):
        u = single_kick_matrix((bx, by, bz))
        np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-14)
        assert np.linalg.det(u) == pytest.approx(1.0, abs=1e-14)


class TestIsing:
    @pytest.mark.parametrize("s, phase", [("0000", 2.8), ("0101", -2.8), ("0011", 0.0)])
    def test_examples(self, s, phase):
        assert ising_phase(BasisState.from_string(s), 0.7, 4) == pytest.approx(phase)

    def test_vectorized_matches_scalar(self):
        L = 7
        ph = ising_phases(L, 0.37)
        for n in range(2**L):
            assert ph[n] == pytest.approx(ising_phase(BasisState.from_index(n, L), 0.37))


@given(arrays(complex, (32, 2), elements=st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)),
       finite, finite, finite)
@settings(max_examples=50)
def test_kick_layer_preserves_norm(psi, bx, by, bz):
    out = apply_kick(psi, single_kick_matrix((bx, by, bz)), 5)
    np.testing.assert_allclose(np.linalg.norm(out, axis=0), np.linalg.norm(psi, axis=0), atol=1e-12)


def test_kick_layer_matches_kronecker_product():
    L = 5
    u2 = single_kick_matrix((0.3, -0.2, 0.8))
    full = u2
    for _ in range(L - 1):
        full = np.kron(full, u2)
    psi = np.random.default_rng(1).standard_normal((2**L, 3)) + 0j
    np.testing.assert_allclose(apply_kick(psi, u2, L), full @ psi, atol=1e-13)


def test_full_matrix_from_matrix_exponentials():
    L, J, b = 4, 0.7, np.array([0.9, 0.0, 0.9])
    # independent construction: sum of local operators, then exponentiate
    def site_op(op, j):
        out = np.eye(1)
        for s in range(L):
            out = np.kron(out, op if s == j else np.eye(2))
        return out
    H_kick = sum(site_op(b_dot_sigma(b), j) for j in range(L))
    H_ising = sum(site_op(PAULI_Z, j) @ site_op(PAULI_Z, (j + 1) % L) for j in range(L))
    plain = taylor_expm(-1j * J * H_ising) @ taylor_expm(-1j * H_kick)
    np.testing.assert_allclose(full_floquet_matrix(ModelParams(J, b, L)), plain, atol=1e-12)


class TestSectorBasis:
    @pytest.mark.parametrize("L", [2, 3, 4, 5, 6, 7, 8])
    def test_orthonormal_complete_and_invariant(self, L):
        T = translation_matrix(L)
        total = 0
        for k in range(L):
            basis = build_sector_basis(L, k)
            B = basis.matrix.toarray()
            assert basis.dim == sector_dimension(L, 2, k)
            np.testing.assert_allclose(B.conj().T @ B, np.eye(basis.dim), atol=1e-12)
            # momentum eigenvectors of T
            np.testing.assert_allclose(T @ B, np.exp(2j * np.pi * k / L) * B, atol=1e-12)
            # invariant under the anti-unitary K
            np.testing.assert_allclose(apply_K(B, L), B, atol=1e-12)
            total += basis.dim
        assert total == 2**L

    def test_L4_examples(self):
        assert build_sector_basis(4, 1).dim == 3
        b0 = build_sector_basis(4, 0)
        assert b0.dim == 6 and b0.special
        G = b0.matrix.toarray().conj().T @ b0.matrix.toarray()
        assert np.max(np.abs(G - np.eye(6))) < 1e-12

    @pytest.mark.parametrize("L, k", [(6, 1), (7, 2), (8, 3)])
    def test_support_is_orbit_and_its_mirror(self, L, k):
        rep, _ = orbit_arrays(L)
        basis = build_sector_basis(L, k)
        B = basis.matrix.tocsc()
        for i in range(basis.dim):
            support = B.indices[B.indptr[i]:B.indptr[i + 1]]
            r = basis.groups[i]
            allowed = {r, int(rep[reflect_indices(np.int64(r), L)])}
            assert set(rep[support].tolist()) <= allowed

    @pytest.mark.parametrize("L, k", [(6, 1), (8, 2)])
    def test_sign_convention(self, L, k):
        for v in build_sector_basis(L, k).vectors:
            a = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
            assert a.real > 1e-12 or (abs(a.real) <= 1e-12 and a.imag > 0)

    def test_rejects_bad_momentum(self):
        with pytest.raises(ValueError):
            build_sector_basis(4, 4)


class TestSectorFloquet:
    def test_trivial_parameters_give_identity(self):
        p = ModelParams(0.0, (0, 0, 0), 6)
        for k in range(6):
            op = sector_floquet(p, build_sector_basis(6, k))
            np.testing.assert_allclose(op.matrix, np.eye(op.dim), atol=1e-14)

    @pytest.mark.parametrize("symmetrized", [True, False])
    def test_traces_add_up_to_full_trace(self, symmetrized):
        p = ModelParams.canonical(6)
        total = sum(np.trace(sector_floquet(p, build_sector_basis(6, k), symmetrized).matrix) for k in range(6))
        assert total == pytest.approx(np.trace(full_floquet_matrix(p, symmetrized)), abs=1e-12)

    def test_symmetric_at_L10(self):
        op = sector_floquet(ModelParams.canonical(10), build_sector_basis(10, 1))
        assert op.symmetry_error < 1e-10 and op.unitarity_error < 1e-10
        check_sector_operator(op)

    def test_plain_operator_is_not_symmetric(self):
        op = sector_floquet(ModelParams.canonical(8), build_sector_basis(8, 1), symmetrized=False)
        assert op.symmetry_error > 1e-3

    def test_sectors_do_not_mix(self):
        L = 7
        p = ModelParams(0.45, (0.3, 0.0, 1.1), L)
        layers = FloquetLayers(p)
        for k in range(L):
            B = build_sector_basis(L, k).matrix.toarray()
            UB = layers.apply(B)
            np.testing.assert_allclose(B @ (B.conj().T @ UB), UB, atol=1e-12)

    @pytest.mark.parametrize("L", [6, 8])
    def test_union_of_sectors_matches_full_spectrum(self, L):
        p = ModelParams.canonical(L)
        for symmetrized in (True, False):
            phases = np.concatenate([
                eigenphases(sector_floquet(p, build_sector_basis(L, k), symmetrized)).phases
                for k in range(L)])
            full = phases_from_eigenvalues(np.linalg.eigvals(full_floquet_matrix(p, symmetrized)))
            assert circular_distance(phases, full) < 1e-8

    def test_y_field_is_rotated_away(self):
        L = 6
        p = ModelParams(0.7, (0.5, -0.6, 0.8), L)
        phases, rotations = [], set()
        for k in range(L):
            op = sector_floquet(p, build_sector_basis(L, k))
            assert op.symmetry_error < 1e-10
            rotations.add(op.metadata["z_rotation"])
            phases.append(eigenphases(op).phases)
        assert len(rotations) == 1 and rotations.pop() == pytest.approx(np.arctan2(-0.6, 0.5))
        full = phases_from_eigenvalues(np.linalg.eigvals(full_floquet_matrix(p, True)))
        assert circular_distance(np.concatenate(phases), full) < 1e-8

    def test_basis_for_other_chain_rejected(self):
        with pytest.raises(ValueError):
            sector_floquet(ModelParams.canonical(6), build_sector_basis(4, 1))

    def test_tolerance_violation_raises(self):
        with pytest.raises(NumericalError):
            sector_floquet(ModelParams.canonical(6), build_sector_basis(6, 1), tol=-1.0)

    def test_invariant_check_flags_asymmetry(self):
        m = np.diag(np.exp(1j * np.arange(3.0)))
        m = m @ np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
        op = SectorOperator(1, m, ModelParams.canonical(4), True)
        with pytest.raises(InvariantError):
            check_sector_operator(op)
