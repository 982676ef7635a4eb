import numpy as np
import pytest

from gradcheck import finite_difference, max_relative_error
from triad_drop.errors import UnknownVariant, WidthMismatch
from triad_drop.fusion import (
    ABLATION_VARIANTS,
    TriadConfig,
    ablation_variant,
    class_balanced_alpha,
    focal_loss,
    forward,
    init_triad,
    train_triad,
    triad_loss_grad,
)
from triad_drop.models import cross_entropy


def small_config(**overrides):
    defaults = dict(d_model=8, heads=2, head_hidden=5, epochs=10, batch_size=8,
                    early_stopping=False)
    defaults.update(overrides)
    return TriadConfig(**defaults)


@pytest.fixture()
def small_model():
    return init_triad(d_tab=7, d_txt=9, cfg=small_config(), seed=11)


class TestForward:
    def test_output_distributions(self, small_model):
        rng = np.random.default_rng(0)
        probs, _ = forward(small_model, rng.normal(size=(1000, 7)), rng.normal(size=(1000, 9)))
        assert np.max(np.abs(probs.sum(axis=1) - 1.0)) < 1e-9
        assert np.all(probs >= 0)

    def test_width_mismatch(self, small_model):
        with pytest.raises(WidthMismatch):
            forward(small_model, np.zeros((2, 5)), np.zeros((2, 9)))

    def test_silent_student_still_valid(self, small_model):
        """Zero text vector (and even a zeroed text projector) keeps the
        output a valid distribution."""
        small_model.params["p_txt_w"][...] = 0.0
        probs, traces = forward(small_model, np.ones((1, 7)), np.zeros((1, 9)), want_trace=True)
        assert abs(probs.sum() - 1.0) < 1e-9
        assert traces[0].gate is not None

    def test_single_token_attention_weight_is_one(self, small_model):
        probs, traces = forward(small_model, np.ones((1, 7)), np.ones((1, 9)), want_trace=True)
        trace = traces[0]
        assert np.allclose(trace.attention_tab_over_text.sum(axis=1), 1.0)
        assert np.allclose(trace.attention_text_over_tab.sum(axis=1), 1.0)
        assert np.allclose(trace.attention_tab_over_text, 1.0)

    def test_gate_in_open_interval(self, small_model):
        rng = np.random.default_rng(1)
        _, traces = forward(small_model, rng.normal(size=(20, 7)),
                            rng.normal(size=(20, 9)), want_trace=True)
        for t in traces:
            assert 0.0 < t.gate < 1.0

    def test_gate_monotone_in_preactivation(self, small_model):
        """Raising the gate bias strictly raises g (sigma is monotone)."""
        rng = np.random.default_rng(2)
        x_tab, x_txt = rng.normal(size=(5, 7)), rng.normal(size=(5, 9))
        _, traces_lo = forward(small_model, x_tab, x_txt, want_trace=True)
        small_model.params["gate_b"][0] += 1.0
        _, traces_hi = forward(small_model, x_tab, x_txt, want_trace=True)
        small_model.params["gate_b"][0] -= 1.0
        for lo, hi in zip(traces_lo, traces_hi):
            assert hi.gate > lo.gate

    def test_no_gate_trace_reports_absent(self):
        model = init_triad(7, 9, small_config(use_gate=False), seed=3)
        _, traces = forward(model, np.ones((1, 7)), np.ones((1, 9)), want_trace=True)
        assert traces[0].gate is None
        assert traces[0].fused.shape == (16,)


class TestFocalLoss:
    def test_gamma_zero_equals_cross_entropy(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            probs = rng.dirichlet(np.ones(3), size=16)
            y = rng.integers(0, 3, size=16)
            assert abs(focal_loss(probs, y, gamma=0.0, alpha=1.0) -
                       cross_entropy(probs, y)) < 1e-9

    def test_perfect_prediction_zero_loss(self):
        probs = np.array([[1.0, 0.0, 0.0]])
        assert focal_loss(probs, np.array([0]), gamma=2.0, alpha=1.0) == 0.0

    def test_hand_value_half_probability(self):
        probs = np.array([[0.5, 0.25, 0.25]])
        expected = 0.25 * np.log(2.0)
        assert abs(focal_loss(probs, np.array([0]), 2.0, 1.0) - expected) < 1e-9

    def test_alpha_weights_scale_per_class(self):
        probs = np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3]])
        y = np.array([0, 1])
        base = focal_loss(probs, y, 2.0, alpha=1.0)
        weighted = focal_loss(probs, y, 2.0, alpha=(2.0, 2.0, 2.0))
        assert abs(weighted - 2.0 * base) < 1e-12

    def test_class_balanced_alpha(self):
        labels = np.array([0] * 30 + [1] * 20 + [2] * 10)
        alpha = class_balanced_alpha(labels)
        assert abs(alpha[0] - 60 / 90) < 1e-12
        assert abs(alpha[1] - 60 / 60) < 1e-12
        assert abs(alpha[2] - 60 / 30) < 1e-12


class TestGradients:
    @pytest.mark.parametrize("use_gate", [True, False])
    def test_all_parameters_match_finite_differences(self, use_gate):
        cfg = small_config(use_gate=use_gate, alpha=(1.2, 0.9, 1.1))
        model = init_triad(7, 9, cfg, seed=21)
        rng = np.random.default_rng(5)
        x_tab, x_txt = rng.normal(size=(4, 7)), rng.normal(size=(4, 9))
        y = np.array([0, 1, 2, 1])
        _, _, grads = triad_loss_grad(model, x_tab, x_txt, y)
        for key in model.param_keys():
            fd = finite_difference(
                lambda: triad_loss_grad(model, x_tab, x_txt, y)[0], model.params[key]
            )
            assert max_relative_error(grads[key], fd) < 1e-4, key

    def test_query_key_maps_receive_zero_gradient(self, small_model):
        rng = np.random.default_rng(6)
        _, _, grads = triad_loss_grad(small_model, rng.normal(size=(4, 7)),
                                      rng.normal(size=(4, 9)), np.array([0, 1, 2, 0]))
        for key in ("wq_a", "wk_a", "wq_b", "wk_b"):
            assert np.all(grads[key] == 0.0)


class TestTraining:
    def _signal_data(self, n=240, seed=7):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 3, size=n)
        x_tab = rng.normal(size=(n, 7)) + y[:, None] * 0.8
        x_txt = rng.normal(size=(n, 9)) * 0.3
        x_txt[:, 0] = (y == 1) * 1.5 + rng.normal(size=n) * 0.2
        return x_tab, x_txt, y

    def test_same_seed_identical_parameters(self):
        x_tab, x_txt, y = self._signal_data()
        cfg = small_config(epochs=6)
        a = train_triad(x_tab, x_txt, y, cfg, seed=2)
        b = train_triad(x_tab, x_txt, y, cfg, seed=2)
        for key in a.param_keys():
            assert np.array_equal(a.params[key], b.params[key])

    def test_loss_decreases(self):
        x_tab, x_txt, y = self._signal_data()
        model = train_triad(x_tab, x_txt, y, small_config(epochs=20), seed=3)
        losses = model.history["train_loss"]
        assert losses[-1] < losses[0]

    def test_learns_signal(self):
        x_tab, x_txt, y = self._signal_data()
        model = train_triad(x_tab, x_txt, y, small_config(epochs=40), seed=4)
        probs, _ = forward(model, x_tab, x_txt)
        assert (probs.argmax(axis=1) == y).mean() > 0.8


class TestAblationSpecs:
    def test_all_variants_resolve(self):
        for name in ABLATION_VARIANTS:
            spec = ablation_variant(name)
            assert spec.name == name

    def test_unknown_variant(self):
        with pytest.raises(UnknownVariant):
            ablation_variant("no_such_thing")

    def test_variant_semantics(self):
        assert ablation_variant("no_gate").use_gate is False
        assert ablation_variant("no_stress").zero_stress is True
        assert ablation_variant("no_rag").ground_affect is False
        assert ablation_variant("tabular_only").model_kind == "mlp_tab"
        assert ablation_variant("text_only").model_kind == "mlp_txt"
        assert ablation_variant("full").model_kind == "triad"
