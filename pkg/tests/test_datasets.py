import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import oracles
from rngrc import kernels
from rngrc.datasets import (LabeledSequence, LorenzParams, MackeyGlassParams, NarmaParams,
                            gen_lorenz, gen_mackey_glass, gen_narma, inverse_rescale,
                            load_task, lorenz_trajectory, make_params, rescale_sequences, split)


class TestNarma:
    def test_matches_loop_oracle(self):
        s = gen_narma(NarmaParams(seed=3), 2000)
        want = oracles.narma_loop(s.X[:, 0].tolist(), 10, 0.3, 0.05, 1.5, 0.1)
        np.testing.assert_allclose(s.y, want, rtol=1e-13, atol=1e-15)
        assert not s.y[:10].any()

    def test_zero_input_fixed_point(self):
        s = gen_narma(NarmaParams(), 3000, inputs=np.zeros(3000))
        # full recurrence: y = a y + 10 b y^2 + d, smaller root
        fixed = (0.7 - math.sqrt(0.49 - 4 * 0.5 * 0.1)) / (2 * 0.5)
        assert math.isclose(s.y[-1], fixed, rel_tol=1e-10)
        lin = gen_narma(NarmaParams(beta=0.0), 3000, inputs=np.zeros(3000))
        assert math.isclose(lin.y[-1], 0.1 / 0.7, rel_tol=1e-10)

    def test_deterministic_and_input_statistics(self):
        a, b = gen_narma(NarmaParams(seed=5), 10000), gen_narma(NarmaParams(seed=5), 10000)
        assert a.y.tobytes() == b.y.tobytes()
        assert abs(a.X.mean() - 0.25) < 0.01
        assert a.X.min() >= 0 and a.X.max() <= 0.5
        assert a.meta["delta"] == 0.1 and a.meta["regenerations"] == 0

    def test_bounded_over_seeds(self):
        # the standard NARMA-10 recurrence occasionally blows up (about 1 in 20
        # draws of 12000 steps); such draws are replaced, and what is returned
        # is always bounded
        events = 0
        for seed in range(50):
            s = gen_narma(NarmaParams(seed=seed), 12000)
            events += s.meta["regenerations"]
            assert np.abs(s.y).max() < 10.0
        assert events <= 5

    def test_divergence_regenerates(self, caplog):
        s = gen_narma(NarmaParams(beta=0.055, seed=0), 5000)
        assert s.meta["regenerations"] == 3 and s.meta["seed_used"] == 3
        assert "diverged" in caplog.text
        np.testing.assert_array_equal(s.y, gen_narma(NarmaParams(beta=0.055, seed=3), 5000).y)
        with pytest.raises(RuntimeError):
            gen_narma(NarmaParams(beta=0.06), 5000)
        with pytest.raises(ValueError):
            gen_narma(NarmaParams(gamma=30.0), 500, inputs=np.full(500, 0.5))

    def test_length_check(self):
        with pytest.raises(ValueError):
            gen_narma(NarmaParams(), 10)


class TestMackeyGlass:
    def test_against_method_of_steps(self):
        t = np.arange(0, 400.0, 1.0)
        ref = oracles.mackey_glass_steps(0.2, 0.1, 17.0, 10.0, 1.2, 400.0, t)
        ours = kernels.mackey_glass(0.2, 0.1, 17.0, 10.0, 0.1, 1.2, 400, 0, 10)
        assert np.max(np.abs(ours - ref)) < 1e-6

    def test_bounded_and_aperiodic(self):
        s = gen_mackey_glass(MackeyGlassParams(t_h=0), 3000)
        x = s.X[:, 0]
        assert 0.2 < x.min() and x.max() < 1.4
        assert s.meta["chaotic"]
        ac = [np.corrcoef(x[:-lag], x[lag:])[0, 1] for lag in range(40, 400)]
        assert max(ac) < 0.99

    def test_horizon(self):
        s0 = gen_mackey_glass(MackeyGlassParams(t_h=0), 200)
        np.testing.assert_array_equal(s0.y, s0.X[:, 0])
        s = gen_mackey_glass(MackeyGlassParams(t_h=20), 200)
        np.testing.assert_array_equal(s.y[:180], s.X[20:, 0])

    def test_step_halving(self):
        fine = MackeyGlassParams(dt=0.05)
        a = gen_mackey_glass(MackeyGlassParams(t_h=0), 1000).y
        b = gen_mackey_glass(MackeyGlassParams(t_h=0, dt=0.05), 1000).y
        assert np.max(np.abs(a - b)) / np.max(np.abs(b)) < 1e-4
        assert fine.chaotic and not MackeyGlassParams(tau=10).chaotic

    @pytest.mark.parametrize("kw", [dict(tau=0), dict(tau=-1), dict(dt=0), dict(t_h=-1),
                                    dict(stride=0.15), dict(tau=17.05)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            gen_mackey_glass(MackeyGlassParams(**kw), 100)


class TestLorenz:
    def test_against_reference_integrator(self):
        p = LorenzParams(warmup=0.0)
        t = np.arange(500) * 0.02
        ref = oracles.lorenz_reference(10, 28, 8 / 3, (1, 1, 1), t)
        ours = lorenz_trajectory(p, 500)
        assert np.max(np.abs(ours - ref)) / np.max(np.abs(ref)) < 1e-4

    def test_bounded_and_target(self):
        s = gen_lorenz(LorenzParams(t_h=0), 12000)
        assert np.abs(s.X).max() < 100
        np.testing.assert_allclose(s.y, 10 * (s.X[:, 1] - s.X[:, 0]), rtol=0, atol=0)
        s2 = gen_lorenz(LorenzParams(t_h=2), 100)
        np.testing.assert_array_equal(s2.y[:98], 10 * (s2.X[2:, 1] - s2.X[2:, 0]))

    def test_equal_coordinates_zero_derivative(self):
        s = gen_lorenz(LorenzParams(t_h=0, warmup=0.0, x0=(2.0, 2.0, 5.0)), 1)
        assert s.y[0] == 0.0


class TestRescale:
    def test_examples(self):
        a = LabeledSequence(np.array([[-1.0], [0.3]]), [0.0, 0.5])
        b = LabeledSequence(np.array([[1.0], [0.0]]), [0.25, 0.1])
        ra, rb = rescale_sequences(a, b)
        np.testing.assert_allclose(ra.X[:, 0], [-1.0, 0.3], rtol=1e-15)
        np.testing.assert_allclose(np.concatenate([ra.y, rb.y]), [-1, 1, 0, -0.6], rtol=1e-14)

    @given(hnp.arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 3)),
                      elements=st.floats(-1e3, 1e3, allow_subnormal=False)))
    def test_range_and_inverse(self, X):
        k = X.shape[0] // 2 or 1
        seq = LabeledSequence(X, X[:, 0] * 2 + 1)
        tr, te = split(seq, k, X.shape[0] - k)
        rtr, rte = rescale_sequences(tr, te)
        both = np.vstack([rtr.X, rte.X])
        for j in range(X.shape[1]):
            col = X[:, j]
            if col.min() == col.max():
                assert not both[:, j].any()
                continue
            assert both[:, j].min() == -1.0 and both[:, j].max() == 1.0
            back = inverse_rescale(rtr).X[:, j]
            np.testing.assert_allclose(back, tr.X[:, j], rtol=1e-12, atol=1e-12 * np.abs(col).max())

    def test_constant_warns(self, caplog):
        a = LabeledSequence(np.ones((3, 1)), [1.0, 2.0, 3.0])
        ra, _ = rescale_sequences(a, LabeledSequence(np.ones((1, 1)), [0.0]))
        assert not ra.X.any() and "constant" in caplog.text


class TestSplitAndTask:
    def test_split(self):
        s = gen_narma(NarmaParams(), 12000)
        tr, te = split(s)
        assert len(tr) == 10000 and len(te) == 2000
        np.testing.assert_array_equal(te.y, s.y[10000:])
        with pytest.raises(ValueError):
            split(s, 11000, 2000)

    def test_load_task_rescaled(self):
        tr, te = load_task("mackey_glass", 500, 100, t_h=5)
        assert len(tr) == 500 and tr.meta["t_h"] == 5 and "rescale" in te.meta
        assert min(tr.X.min(), te.X.min()) == -1.0

    def test_make_params(self):
        assert make_params("lorenz", t_h=3, order=2).t_h == 3
        with pytest.raises(ValueError):
            make_params("sine")
