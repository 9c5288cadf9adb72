"""Reverse-mode tape, optimizer, and checkpoint format.

The central oracle is the finite-difference check: for random small
compositions of every tape operation, analytic gradients must match
central differences to high relative accuracy.
"""

from __future__ import annotations

import numpy as np
import pytest

from mvreserve import numgrad as ng
from mvreserve.numgrad import (
    GradientNaNError,
    NonFiniteGradientError,
    ParameterStore,
    Tape,
    amsgrad_step,
    he_init,
    load_checkpoint,
    save_checkpoint,
)


def central_difference(func, params, name, h=1e-6):
    """d func / d params[name] by central differences, elementwise."""
    base = {k: v.copy() for k, v in params.items()}
    grad = np.zeros_like(base[name])
    it = np.nditer(base[name], flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        step = h * max(1.0, abs(base[name][idx]))
        plus = {k: v.copy() for k, v in base.items()}
        plus[name][idx] += step
        minus = {k: v.copy() for k, v in base.items()}
        minus[name][idx] -= step
        grad[idx] = (func(plus) - func(minus)) / (2.0 * step)
    return grad


def compare_gradients(build_loss, params, rel_tol=1e-6):
    """Analytic tape gradients vs central differences for every parameter."""
    tape = Tape()
    tensors = {k: tape.parameter(k, v) for k, v in params.items()}
    loss = build_loss(tape, tensors)
    analytic = tape.backward(loss)

    def value_of(vals):
        t = Tape()
        ts = {k: t.parameter(k, v) for k, v in vals.items()}
        return float(build_loss(t, ts).value)

    for name in params:
        numeric = central_difference(value_of, params, name)
        scale = max(np.abs(numeric).max(), np.abs(analytic[name]).max(), 1e-8)
        assert np.abs(analytic[name] - numeric).max() / scale < rel_tol, name


class TestTapeOperations:
    def test_every_op_composite(self):
        """One expression touching every primitive, checked against FD."""
        rng = np.random.default_rng(0)
        params = {
            "W": rng.normal(size=(3, 4)) * 0.5,
            "b": rng.normal(size=(4,)) * 0.5,
            "V": rng.normal(size=(4, 2)) * 0.5,
            "emb": rng.normal(size=(5, 3)) * 0.5,
        }
        x = rng.normal(size=(6, 3))
        idx = np.array([0, 2, 4, 1, 3, 0])
        mask_rows = np.array([True, False, True, True, False, True])

        def build(tape, t):
            inp = tape.constant(x)
            taken = ng.take_rows(t["emb"], idx)
            mixed = ng.add(inp, taken)
            hidden = ng.tanh(ng.add(ng.matmul(mixed, t["W"]), t["b"]))
            gates = ng.sigmoid(hidden)
            act = ng.relu(ng.sub(hidden, gates))
            carried = ng.masked_carry(act, gates, mask_rows)
            out = ng.matmul(carried, t["V"])
            both = ng.concat([out, ng.scale(out, -0.5)], axis=1)
            shifted = ng.shift(ng.mul(both, both), 0.25)
            sq = ng.square(shifted)
            m = np.zeros(sq.value.shape, dtype=bool)
            m[::2] = True
            return ng.add(ng.masked_mean(sq, m), ng.masked_sum(sq, ~m))

        compare_gradients(build, params)

    @pytest.mark.parametrize("seed", range(12))
    def test_random_gru_like_compositions(self, seed):
        """Random two-layer recurrent compositions, FD-checked."""
        rng = np.random.default_rng(seed)
        h_dim = int(rng.integers(2, 5))
        in_dim = int(rng.integers(1, 4))
        params = {
            "W_z": rng.normal(size=(h_dim + in_dim, h_dim)) * 0.6,
            "W_h": rng.normal(size=(h_dim + in_dim, h_dim)) * 0.6,
            "b_z": rng.normal(size=(h_dim,)) * 0.1,
            "b_h": rng.normal(size=(h_dim,)) * 0.1,
        }
        steps = [rng.normal(size=(3, in_dim)) for _ in range(3)]

        def build(tape, t):
            h = tape.constant(np.zeros((3, h_dim)))
            for x in steps:
                hq = ng.concat([h, tape.constant(x)], axis=1)
                z = ng.sigmoid(ng.add(ng.matmul(hq, t["W_z"]), t["b_z"]))
                cand = ng.tanh(ng.add(ng.matmul(hq, t["W_h"]), t["b_h"]))
                one_minus = ng.shift(ng.scale(z, -1.0), 1.0)
                h = ng.add(ng.mul(z, cand), ng.mul(one_minus, h))
            return ng.total_sum(ng.square(h))

        compare_gradients(build, params)

    def test_broadcast_bias_gradient(self):
        """Bias broadcast over the batch sums gradients back correctly."""
        rng = np.random.default_rng(1)
        params = {"b": rng.normal(size=(4,))}
        x = rng.normal(size=(7, 4))

        def build(tape, t):
            return ng.total_sum(ng.square(ng.add(tape.constant(x), t["b"])))

        compare_gradients(build, params)

    def test_unreachable_parameter_gets_zero_gradient(self):
        tape = Tape()
        used = tape.parameter("used", np.array([2.0]))
        unused = tape.parameter("unused", np.array([5.0]))
        loss = ng.total_sum(ng.square(used))
        grads = tape.backward(loss)
        assert grads["used"] == pytest.approx([4.0])
        assert grads["unused"] == pytest.approx([0.0])
        assert unused.grad is None

    def test_backward_requires_scalar(self):
        tape = Tape()
        p = tape.parameter("p", np.ones(3))
        with pytest.raises(ValueError, match="scalar"):
            tape.backward(ng.square(p))

    def test_backward_rejects_foreign_tensor(self):
        tape1, tape2 = Tape(), Tape()
        p = tape1.parameter("p", np.ones(()))
        tape1_loss = ng.square(p)
        with pytest.raises(ValueError, match="belong"):
            tape2.backward(tape1_loss)

    def test_duplicate_parameter_name_rejected(self):
        tape = Tape()
        tape.parameter("p", np.ones(2))
        with pytest.raises(ValueError, match="duplicate"):
            tape.parameter("p", np.ones(2))

    def test_nan_guard(self):
        tape = Tape()
        p = tape.parameter("p", np.array(np.inf))
        with np.errstate(invalid="ignore"):
            loss = ng.mul(p, tape.constant(np.array(0.0)))  # inf * 0 = nan
        with pytest.raises(GradientNaNError):
            tape.backward(loss)

    def test_masked_carry_blocks_gradient(self):
        """Masked-off rows route gradient to prev, not to new."""
        tape = Tape()
        new = tape.parameter("new", np.ones((2, 3)))
        prev = tape.parameter("prev", np.full((2, 3), 2.0))
        mask = np.array([True, False])
        out = ng.masked_carry(new, prev, mask)
        assert out.value[0] == pytest.approx(np.ones(3))
        assert out.value[1] == pytest.approx(np.full(3, 2.0))
        grads = tape.backward(ng.total_sum(out))
        assert grads["new"][0] == pytest.approx(np.ones(3))
        assert grads["new"][1] == pytest.approx(np.zeros(3))
        assert grads["prev"][0] == pytest.approx(np.zeros(3))
        assert grads["prev"][1] == pytest.approx(np.ones(3))


class TestHeInit:
    def test_moments(self):
        rng = np.random.default_rng(0)
        sample = he_init((200, 300), rng)
        assert abs(float(sample.mean())) < 5e-3
        assert float(sample.std()) == pytest.approx(np.sqrt(2.0 / 200), rel=0.02)

    def test_explicit_fan_in(self):
        rng = np.random.default_rng(0)
        sample = he_init((50000,), rng, fan_in=8)
        assert float(sample.std()) == pytest.approx(0.5, rel=0.02)


class TestAmsgrad:
    def test_converges_on_quadratic(self):
        """min (p - 3)^2 reaches the optimum."""
        store = ParameterStore()
        store.add("p", np.array([0.0]))
        for _ in range(4000):
            grad = {"p": 2.0 * (store.params["p"] - 3.0)}
            amsgrad_step(store, grad, lr=0.01)
        assert store.params["p"][0] == pytest.approx(3.0, abs=1e-3)

    def test_first_step_is_learning_rate_sized(self):
        """With bias correction, |first step| ~= lr regardless of grad scale."""
        for g in (1e-4, 1.0, 1e4):
            store = ParameterStore()
            store.add("p", np.array([0.0]))
            amsgrad_step(store, {"p": np.array([g])}, lr=0.05)
            assert abs(store.params["p"][0]) == pytest.approx(0.05, rel=1e-3)

    def test_max_second_moment_is_monotone(self):
        """vhat never decreases even when gradients shrink."""
        store = ParameterStore()
        store.add("p", np.array([0.0]))
        amsgrad_step(store, {"p": np.array([10.0])}, lr=0.01)
        vhat_after_big = store.max_second_moment["p"].copy()
        for _ in range(50):
            amsgrad_step(store, {"p": np.array([1e-8])}, lr=0.01)
            assert np.all(store.max_second_moment["p"] >= vhat_after_big * 0.999**50)
        # strictly: vhat still reflects the big first gradient
        assert store.max_second_moment["p"][0] >= 0.09 * vhat_after_big[0]

    def test_rejects_nonfinite_gradient(self):
        store = ParameterStore()
        store.add("p", np.zeros(2))
        with pytest.raises(NonFiniteGradientError):
            amsgrad_step(store, {"p": np.array([1.0, np.nan])}, lr=0.01)

    def test_rejects_unknown_parameter(self):
        store = ParameterStore()
        store.add("p", np.zeros(2))
        with pytest.raises(KeyError):
            amsgrad_step(store, {"q": np.zeros(2)}, lr=0.01)

    def test_rejects_shape_mismatch(self):
        store = ParameterStore()
        store.add("p", np.zeros(2))
        with pytest.raises(ValueError, match="shape"):
            amsgrad_step(store, {"p": np.zeros(3)}, lr=0.01)

    def test_reset_optimizer_state(self):
        store = ParameterStore()
        store.add("p", np.array([0.0]))
        amsgrad_step(store, {"p": np.array([1.0])}, lr=0.01)
        store.reset_optimizer_state()
        assert store.step_count == 0
        assert not store.first_moment


class TestCheckpoint:
    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        params = {
            "W": rng.normal(size=(5, 7)),
            "b": rng.normal(size=(7,)),
            "scalarish": np.array(3.25),
        }
        meta = {"hidden": 7, "note": "x"}
        path = str(tmp_path / "model.json")
        save_checkpoint(path, params, meta)
        loaded, loaded_meta = load_checkpoint(path)
        assert set(loaded) == set(params)
        for name in params:
            assert loaded[name].dtype == np.float64
            assert loaded[name].shape == params[name].shape
            assert np.array_equal(loaded[name], params[name])  # exact, not approx
        assert loaded_meta["hidden"] == 7

    def test_corrupt_file_raises(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\"not\": \"a checkpoint\"}")
        from mvreserve.numgrad import CheckpointError

        with pytest.raises(CheckpointError):
            load_checkpoint(str(path))
