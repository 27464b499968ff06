import numpy as np
import pytest
from scipy import stats

from kicstat.diagonalize import eigenphases
from kicstat.errors import InvariantError
from kicstat.pipeline import PipelineConfig, ensemble_statistics
from kicstat.rmt import EnsembleSpec, member_rng, sample_coe, sample_haar_unitary, sample_member
from kicstat.spectral import circular_gaps, resample, sigma_w, unfold


class TestEnsembleSpec:
    @pytest.mark.parametrize("kwargs", [
        dict(ensemble="GOE", dim=10, samples=1),
        dict(ensemble="COE", dim=1, samples=1),
        dict(ensemble="COE", dim=10, samples=0),
        dict(ensemble="COE", dim=10, samples=1, seed=-1),
        dict(ensemble="COE", dim=10, samples=1, seed=2**64),
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            EnsembleSpec(**kwargs)

    def test_normalizes_case(self):
        assert EnsembleSpec("coe", 4, 1).ensemble == "COE"


class TestHaar:
    def test_one_by_one(self):
        u = sample_haar_unitary(1, member_rng(0, 0))
        assert u.shape == (1, 1) and abs(abs(u[0, 0]) - 1) < 1e-15

    @pytest.mark.parametrize("N", [2, 17, 100])
    def test_unitary(self, N):
        u = sample_haar_unitary(N, member_rng(3, N))
        assert np.max(np.abs(u.conj().T @ u - np.eye(N))) < 1e-10

    def test_deterministic(self):
        a = sample_haar_unitary(30, member_rng(42, 7))
        b = sample_haar_unitary(30, member_rng(42, 7))
        assert a.tobytes() == b.tobytes()

    def test_streams_differ(self):
        a = sample_haar_unitary(5, member_rng(42, 0))
        b = sample_haar_unitary(5, member_rng(42, 1))
        assert not np.allclose(a, b)

    def test_second_moment(self):
        N, n = 50, 2000
        x = np.array([abs(sample_haar_unitary(N, member_rng(11, i))[0, 0]) ** 2 for i in range(n)])
        assert abs(x.mean() - 1 / N) < 3 * x.std(ddof=1) / np.sqrt(n)

    def test_phase_of_diagonal_is_uniform(self):
        # the raw QR output has a biased diagonal; the corrected one is uniform on the circle
        ph = np.array([np.angle(sample_haar_unitary(4, member_rng(5, i))[0, 0]) for i in range(1000)])
        assert stats.kstest(ph, stats.uniform(-np.pi, 2 * np.pi).cdf).pvalue > 0.01

    def test_left_invariance_of_spacings(self):
        N, n = 100, 50
        V = sample_haar_unitary(N, member_rng(99, 0))
        a, b = [], []
        for i in range(n):
            U = sample_haar_unitary(N, member_rng(1, i))
            a.append(circular_gaps(unfold(eigenphases(U))))
            b.append(circular_gaps(unfold(eigenphases(V @ sample_haar_unitary(N, member_rng(2, i))))))
        res = stats.ks_2samp(np.concatenate(a), np.concatenate(b))
        assert res.pvalue > 0.01


class TestCoe:
    @pytest.mark.parametrize("N", [2, 10, 120])
    def test_symmetric_unitary(self, N):
        s = sample_coe(N, member_rng(0, N))
        assert np.max(np.abs(s - s.T)) < 1e-10
        assert np.max(np.abs(s.conj().T @ s - np.eye(N))) < 1e-10

    def test_rejects_scalar(self):
        with pytest.raises(ValueError):
            sample_coe(1)

    def test_shares_sector_invariant_check(self):
        with pytest.raises(InvariantError):
            sample_coe(4, member_rng(0, 0), tol=-1.0)

    def test_level_repulsion_is_linear(self):
        # COE small-gap fraction ~ (pi^2/12) s^2 vs CUE ~ s^3 behaviour
        gaps_coe, gaps_cue = [], []
        for i in range(20):
            gaps_coe.append(circular_gaps(unfold(eigenphases(sample_member(EnsembleSpec("COE", 100, 20), i)))))
            gaps_cue.append(circular_gaps(unfold(eigenphases(sample_member(EnsembleSpec("CUE", 100, 20), i)))))
        f_coe = np.mean(np.concatenate(gaps_coe) < 0.3)
        f_cue = np.mean(np.concatenate(gaps_cue) < 0.3)
        assert f_coe > 2 * f_cue


class TestEnsembleStatistics:
    def test_single_member_average_equals_member(self):
        b = ensemble_statistics(EnsembleSpec("COE", 20, 1, seed=3))
        for block in b.blocks.values():
            # averages live on a common grid, the form factor's is cut at tau_max
            member = resample(block.members[0], block.average.abscissa)
            np.testing.assert_allclose(block.average.values, member.values, rtol=1e-14)

    def test_reproducible(self):
        spec = EnsembleSpec("COE", 30, 3, seed=8)
        a = ensemble_statistics(spec)
        b = ensemble_statistics(spec)
        for name in a.blocks:
            for ca, cb in zip(a.blocks[name].members, b.blocks[name].members):
                assert ca.values.tobytes() == cb.values.tobytes()
        assert a.k2_deviation[1]["k2"] == b.k2_deviation[1]["k2"]

    def test_spacing_average_and_band(self):
        b = ensemble_statistics(EnsembleSpec("CUE", 40, 4, seed=0), PipelineConfig(statistics=("spacing",)))
        block = b.blocks["spacing"]
        vals = np.array([c.values for c in block.members])
        np.testing.assert_allclose(block.average.values, vals.mean(axis=0))
        np.testing.assert_allclose(block.average.band, sigma_w(block.average.reference, 160))
