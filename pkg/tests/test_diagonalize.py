import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kicstat.combinatorics import sector_dimension
from kicstat.diagonalize import (
    QuasiEnergySpectrum,
    circular_distance,
    eigenphases,
    phases_from_eigenvalues,
    trace_power,
)
from kicstat.errors import NumericalError
from kicstat.floquet import ModelParams, build_sector_basis, sector_floquet
from kicstat.rmt import member_rng, sample_haar_unitary

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def l8_k1():
    return sector_floquet(ModelParams.canonical(8), build_sector_basis(8, 1))


def test_identity_has_zero_phases():
    spec = eigenphases(np.eye(5))
    assert np.array_equal(spec.phases, np.zeros(5))


def test_diagonal_matrix():
    spec = eigenphases(np.diag(np.exp(-1j * np.array([1.7, 0.3]))))
    np.testing.assert_allclose(spec.phases, [0.3, 1.7], atol=1e-14)


def test_sector_spectrum_at_L10():
    op = sector_floquet(ModelParams.canonical(10), build_sector_basis(10, 1))
    spec = eigenphases(op)
    assert spec.dim == sector_dimension(10, 2, 1)
    assert spec.residual < 1e-10
    assert np.all(np.diff(spec.phases) >= 0)
    assert spec.phases.min() >= 0 and spec.phases.max() < TWO_PI
    # residual recomputed from an independent eigen-solver
    lam, vecs = np.linalg.eig(op.matrix)
    res = np.linalg.norm(op.matrix @ vecs - vecs * lam, axis=0).max()
    assert res < 1e-10
    assert circular_distance(spec.phases, phases_from_eigenvalues(lam)) < 1e-10


def test_determinant_matches_phase_sum(l8_k1):
    spec = eigenphases(l8_k1)
    assert np.exp(-1j * spec.phases.sum()) == pytest.approx(np.linalg.det(l8_k1.matrix), abs=1e-8)


@pytest.mark.parametrize("L", [6, 8, 10])
def test_plain_and_symmetrized_agree(L):
    p = ModelParams.canonical(L)
    for k in range(L):
        basis = build_sector_basis(L, k)
        a = eigenphases(sector_floquet(p, basis, True)).phases
        b = eigenphases(sector_floquet(p, basis, False)).phases
        assert circular_distance(a, b) < 1e-8


def test_non_unimodular_rejected():
    with pytest.raises(NumericalError):
        eigenphases(np.diag([1.0, 0.5]))


def test_residual_tolerance_enforced():
    m = sample_haar_unitary(40, member_rng(0, 0))
    with pytest.raises(NumericalError) as exc:
        eigenphases(m, tol=0.0)
    assert exc.value.worst > 0


def test_branch_convention():
    lam = np.exp(-1j * np.array([0.0, np.pi, -0.1, TWO_PI - 1e-17]))
    phi = phases_from_eigenvalues(lam)
    assert np.all((phi >= 0) & (phi < TWO_PI))
    assert phi[0] == 0.0


class TestTracePower:
    def test_t0_is_dimension(self):
        assert trace_power(QuasiEnergySpectrum(0, np.linspace(0, 6, 7)), 0) == 7 + 0j

    def test_single_level(self):
        assert trace_power(QuasiEnergySpectrum(0, [0.4]), 3) == pytest.approx(np.exp(-1.2j))

    def test_negative_t_rejected(self):
        with pytest.raises(ValueError):
            trace_power(QuasiEnergySpectrum(0, [0.4]), -1)

    def test_matches_matrix_powers(self, l8_k1):
        spec = eigenphases(l8_k1)
        m = l8_k1.matrix
        power = np.eye(m.shape[0], dtype=complex)
        for t in range(1, 5):
            power = power @ m
            tr = np.trace(power)
            assert abs(trace_power(spec, t) - tr) <= 1e-8 * max(1.0, abs(tr))

    @given(st.integers(2, 60), st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_random_unitaries(self, n, seed):
        m = sample_haar_unitary(n, member_rng(seed, 0))
        spec = eigenphases(m)
        power = np.eye(n, dtype=complex)
        for t in range(1, 5):
            power = power @ m
            tr = np.trace(power)
            assert abs(trace_power(spec, t) - tr) <= 1e-8 * max(1.0, abs(tr))


@given(st.lists(st.floats(0, TWO_PI, exclude_max=True), min_size=1, max_size=30), st.floats(-10, 10))
def test_circular_distance_is_rotation_invariant(phases, shift):
    a = np.array(phases)
    assert circular_distance(a, np.mod(a + 1e-12, TWO_PI)) < 1e-9
    assert circular_distance(np.mod(a + shift, TWO_PI), np.mod(a[::-1] + shift, TWO_PI)) < 1e-9
