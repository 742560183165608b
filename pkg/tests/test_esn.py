import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from rngrc.esn import EsnParams, EsnReservoir, esn_activate, esn_init, esn_run, spectral_radius


class TestSpectralRadius:
    def test_examples(self):
        assert math.isclose(spectral_radius(np.eye(3)), 1.0, rel_tol=1e-12)
        assert math.isclose(spectral_radius(np.diag([2.0, -3.0, 0.5])), 3.0, rel_tol=1e-12)
        assert spectral_radius(np.zeros((4, 4))) == 0.0

    def test_charpoly_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            M = rng.uniform(-1, 1, (4, 4))
            assert math.isclose(spectral_radius(M), oracles.charpoly_radius(M), rel_tol=1e-6)
        M = rng.uniform(-0.5, 0.5, (50, 50))
        for i in range(0, 48, 4):
            sub = M[i:i + 4, i:i + 4]
            assert math.isclose(spectral_radius(sub), oracles.charpoly_radius(sub), rel_tol=1e-6)

    def test_power_iteration_cross_check(self):
        rng = np.random.default_rng(1)
        # positive matrices have a simple dominant real eigenvalue (Perron)
        for _ in range(5):
            M = rng.uniform(0, 1, (40, 40))
            assert math.isclose(spectral_radius(M, "power"), spectral_radius(M), rel_tol=1e-6)
        R = np.array([[0.0, -2.0], [2.0, 0.0]])  # complex pair of modulus 2
        assert math.isclose(spectral_radius(R, "power"), 2.0, rel_tol=1e-9)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            spectral_radius(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            spectral_radius(np.eye(2), "qr")


class TestInit:
    def test_radius_contract(self):
        for seed in range(10):
            r = esn_init(EsnParams(n=100, radius=0.9), seed)
            assert abs(spectral_radius(r.w_rec) - 0.9) <= 1e-6 * 0.9

    def test_sparsity_fraction(self):
        r = esn_init(EsnParams(n=100, sparsity=0.5), 3)
        zeros = np.mean(r.w_rec == 0)
        assert abs(zeros - 0.5) <= 5 * math.sqrt(0.25 / 10000)
        assert r.meta["radius_sparse"] != r.meta["radius_scaled"]

    def test_deterministic_and_scaled(self):
        a = esn_init(EsnParams(n=20, input_scaling=0.5), 4)
        b = esn_init(EsnParams(n=20, input_scaling=0.5), 4)
        np.testing.assert_array_equal(a.w_rec, b.w_rec)
        assert np.abs(a.w_in).max() <= 0.25
        assert not a.bias.any()

    def test_input_bias_does_not_shift_other_weights(self):
        a = esn_init(EsnParams(n=20), 4)
        b = esn_init(EsnParams(n=20, input_bias=1.0), 4)
        np.testing.assert_array_equal(a.w_rec, b.w_rec)
        np.testing.assert_array_equal(a.w_in, b.w_in)
        assert b.bias.any() and np.abs(b.bias).max() <= 0.5

    @pytest.mark.parametrize("kw", [dict(radius=0), dict(sparsity=1.0), dict(gamma=0),
                                    dict(input_scaling=0), dict(input_bias=-1), dict(n=0)])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            esn_init(EsnParams(**kw), 0)


def _tiny(w_in, w_rec, gamma=1.0):
    w_in, w_rec = np.atleast_2d(w_in).astype(float), np.atleast_2d(w_rec).astype(float)
    p = EsnParams(n=w_rec.shape[0], d=w_in.shape[1], gamma=gamma)
    return EsnReservoir(w_in, w_rec, p, np.zeros(w_rec.shape[0]))


class TestActivation:
    def test_examples(self):
        r = esn_init(EsnParams(n=5), 0)
        assert not esn_activate(r, [0.0]).any()
        r = _tiny([[1.0]], [[0.0]])
        assert math.isclose(esn_activate(r, [1.0])[0], math.tanh(1.0), rel_tol=1e-15)
        r = _tiny([[0.0]], [[0.0]], gamma=0.5)
        r.state = np.array([0.4])
        assert esn_activate(r, [1.0])[0] == 0.2

    @given(st.integers(0, 500), st.floats(0.05, 1.0))
    def test_states_bounded(self, seed, gamma):
        r = esn_init(EsnParams(n=15, radius=1.1, gamma=gamma, input_scaling=1.0), seed)
        x = np.random.default_rng(seed).uniform(-5, 5, 100)
        V = esn_run(r, x)
        assert np.all(np.abs(V) < 1)

    def test_memoryless_without_recurrence(self):
        r = esn_init(EsnParams(n=8), 2)
        r.w_rec[:] = 0
        x = np.random.default_rng(0).uniform(-1, 1, 30)
        perm = np.random.default_rng(1).permutation(30)
        np.testing.assert_array_equal(esn_run(r, x)[perm], esn_run(r, x[perm]))

    def test_run_matches_activate_and_is_deterministic(self):
        r = esn_init(EsnParams(n=12, gamma=0.3, input_bias=0.5), 5)
        x = np.linspace(-1, 1, 25)
        V = esn_run(r, x)
        r.reset()
        ref = np.array([esn_activate(r, xi).copy() for xi in x])
        np.testing.assert_allclose(V, ref, rtol=1e-14, atol=1e-16)
        assert esn_run(r, x).tobytes() == V.tobytes()
