"""Gated cross-modal attention classifier with focal loss.

Each modality is projected to one 128-d token; four scaled dot-product
attention heads run in both directions (tabular token attending over the
text token and vice versa). With a single key per direction the softmax
over attention scores is identically 1, so the attended vector reduces to
the other modality's value projection; the score is still computed for the
introspection trace. A scalar sigmoid gate then weights the two attended
halves before the classifier head.

All gradients are hand-derived and checked against central finite
differences in the test suite. Query/key maps receive zero gradient in the
single-token setting and are kept for the declared architecture shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Diverged, UnknownVariant, WidthMismatch
from .models import Adam, N_CLASSES, one_hot, softmax

PARAM_ORDER = (
    "p_tab_w", "p_tab_b", "p_txt_w", "p_txt_b",
    "wq_a", "wk_a", "wv_a", "wo_a", "bo_a",
    "wq_b", "wk_b", "wv_b", "wo_b", "bo_b",
    "gate_w", "gate_b",
    "head_w1", "head_b1", "head_w2", "head_b2",
)


@dataclass
class TriadConfig:
    d_model: int = 128
    heads: int = 4
    head_hidden: int = 64
    gamma: float = 2.0
    alpha: tuple = (1.0, 1.0, 1.0)
    lr: float = 1e-3
    epochs: int = 40
    batch_size: int = 64
    val_fraction: float = 0.1
    patience: int = 10
    early_stopping: bool = True
    use_gate: bool = True

    def validate(self) -> None:
        if self.d_model % self.heads:
            raise ValueError("d_model must be divisible by heads")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if any(a <= 0 for a in self.alpha):
            raise ValueError("alpha weights must be positive")

    @property
    def fused_width(self) -> int:
        return 2 * self.d_model


@dataclass
class FusionTrace:
    attention_tab_over_text: np.ndarray  # heads x 1 rows, each summing to 1
    attention_text_over_tab: np.ndarray
    scores_tab_over_text: np.ndarray  # raw scaled dot products, per head
    scores_text_over_tab: np.ndarray
    gate: float | None
    fused: np.ndarray


@dataclass
class TriadModel:
    params: dict
    config: TriadConfig
    history: dict = field(default_factory=dict)

    @property
    def d_tab(self) -> int:
        return self.params["p_tab_w"].shape[1]

    @property
    def d_txt(self) -> int:
        return self.params["p_txt_w"].shape[1]

    def param_list(self) -> list:
        return [self.params[k] for k in PARAM_ORDER if k in self.params]

    def param_keys(self) -> list:
        return [k for k in PARAM_ORDER if k in self.params]


def init_triad(d_tab: int, d_txt: int, cfg: TriadConfig, seed: int = 0) -> TriadModel:
    cfg.validate()
    rng = np.random.default_rng(np.random.PCG64(seed))
    d = cfg.d_model

    def mat(rows, cols):
        bound = 1.0 / np.sqrt(cols)
        return rng.uniform(-bound, bound, size=(rows, cols))

    params = {
        "p_tab_w": mat(d, d_tab), "p_tab_b": np.zeros(d),
        "p_txt_w": mat(d, d_txt), "p_txt_b": np.zeros(d),
        "wq_a": mat(d, d), "wk_a": mat(d, d), "wv_a": mat(d, d),
        "wo_a": mat(d, d), "bo_a": np.zeros(d),
        "wq_b": mat(d, d), "wk_b": mat(d, d), "wv_b": mat(d, d),
        "wo_b": mat(d, d), "bo_b": np.zeros(d),
        "head_w1": mat(cfg.head_hidden, 2 * d), "head_b1": np.zeros(cfg.head_hidden),
        "head_w2": mat(N_CLASSES, cfg.head_hidden), "head_b2": np.zeros(N_CLASSES),
    }
    if cfg.use_gate:
        params["gate_w"] = mat(1, 2 * d)[0]
        params["gate_b"] = np.zeros(1)
    return TriadModel(params=params, config=cfg)


def _forward_internals(model: TriadModel, x_tab: np.ndarray, x_txt: np.ndarray):
    p = model.params
    h_tab = x_tab @ p["p_tab_w"].T + p["p_tab_b"]
    h_txt = x_txt @ p["p_txt_w"].T + p["p_txt_b"]

    v_txt = h_txt @ p["wv_a"].T
    a_tab = v_txt @ p["wo_a"].T + p["bo_a"]
    v_tab = h_tab @ p["wv_b"].T
    a_txt = v_tab @ p["wo_b"].T + p["bo_b"]

    if model.config.use_gate:
        u = np.concatenate([a_tab, a_txt], axis=1)
        s = u @ p["gate_w"] + p["gate_b"][0]
        g = 1.0 / (1.0 + np.exp(-s))
        fused = np.concatenate([g[:, None] * a_tab, (1.0 - g)[:, None] * a_txt], axis=1)
    else:
        g = None
        fused = np.concatenate([a_tab, a_txt], axis=1)

    z1_pre = fused @ p["head_w1"].T + p["head_b1"]
    z1 = np.maximum(z1_pre, 0.0)
    logits = z1 @ p["head_w2"].T + p["head_b2"]
    probs = softmax(logits)
    cache = dict(h_tab=h_tab, h_txt=h_txt, v_txt=v_txt, v_tab=v_tab,
                 a_tab=a_tab, a_txt=a_txt, g=g, fused=fused,
                 z1_pre=z1_pre, z1=z1, probs=probs,
                 x_tab=x_tab, x_txt=x_txt)
    return probs, cache


def _attention_scores(model: TriadModel, h_q: np.ndarray, h_kv: np.ndarray,
                      wq_key: str, wk_key: str) -> np.ndarray:
    cfg = model.config
    head_width = cfg.d_model // cfg.heads
    q = h_q @ model.params[wq_key].T
    k = h_kv @ model.params[wk_key].T
    q_heads = q.reshape(-1, cfg.heads, head_width)
    k_heads = k.reshape(-1, cfg.heads, head_width)
    return (q_heads * k_heads).sum(axis=2) / np.sqrt(head_width)


def forward(model: TriadModel, x_tab: np.ndarray, x_txt: np.ndarray,
            want_trace: bool = False):
    """Class probabilities plus, on request, per-sample fusion traces."""
    x_tab = np.atleast_2d(np.asarray(x_tab, dtype=float))
    x_txt = np.atleast_2d(np.asarray(x_txt, dtype=float))
    if x_tab.shape[1] != model.d_tab or x_txt.shape[1] != model.d_txt:
        raise WidthMismatch(
            f"expected widths ({model.d_tab}, {model.d_txt}), "
            f"got ({x_tab.shape[1]}, {x_txt.shape[1]})"
        )
    probs, cache = _forward_internals(model, x_tab, x_txt)
    if not want_trace:
        return probs, None

    scores_a = _attention_scores(model, cache["h_tab"], cache["h_txt"], "wq_a", "wk_a")
    scores_b = _attention_scores(model, cache["h_txt"], cache["h_tab"], "wq_b", "wk_b")
    heads = model.config.heads
    traces = []
    for i in range(len(x_tab)):
        traces.append(
            FusionTrace(
                attention_tab_over_text=np.ones((heads, 1)),
                attention_text_over_tab=np.ones((heads, 1)),
                scores_tab_over_text=scores_a[i],
                scores_text_over_tab=scores_b[i],
                gate=float(cache["g"][i]) if cache["g"] is not None else None,
                fused=cache["fused"][i],
            )
        )
    return probs, traces


def focal_loss(probs: np.ndarray, y: np.ndarray, gamma: float = 2.0,
               alpha=1.0) -> float:
    """Mean of -alpha_y (1 - p_y)^gamma log(p_y), with p_y clamped below."""
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    y = np.asarray(y, dtype=int)
    t = np.clip(probs[np.arange(len(y)), y], 1e-12, 1.0)
    a = np.asarray(alpha, dtype=float)
    a_y = a[y] if a.ndim else np.full(len(y), float(a))
    return float((-a_y * (1.0 - t) ** gamma * np.log(t)).mean())


def _focal_dlogits(probs: np.ndarray, y: np.ndarray, gamma: float, alpha) -> np.ndarray:
    n = len(y)
    t = np.clip(probs[np.arange(n), y], 1e-12, 1.0)
    a = np.asarray(alpha, dtype=float)
    a_y = a[y] if a.ndim else np.full(n, float(a))

    one_minus = np.clip(1.0 - t, 0.0, 1.0)
    if gamma > 0:
        term1 = gamma * np.where(one_minus > 0, one_minus ** (gamma - 1.0), 0.0) * np.log(t)
    else:
        term1 = np.zeros(n)
    coeff = a_y * (term1 - one_minus**gamma / t)  # dL_i / dt_i

    dlogits = coeff[:, None] * t[:, None] * (one_hot(y) - probs)
    return dlogits / n


def triad_loss_grad(model: TriadModel, x_tab: np.ndarray, x_txt: np.ndarray,
                    y: np.ndarray):
    """Focal loss and analytic gradients for every parameter.

    Query/key maps are architecturally present but receive zero gradient:
    with one key per direction the attention weight is constant."""
    cfg = model.config
    p = model.params
    probs, cache = _forward_internals(model, x_tab, x_txt)
    loss = focal_loss(probs, y, cfg.gamma, cfg.alpha)

    grads = {k: np.zeros_like(v) for k, v in p.items()}
    dlogits = _focal_dlogits(probs, y, cfg.gamma, cfg.alpha)

    grads["head_w2"] = dlogits.T @ cache["z1"]
    grads["head_b2"] = dlogits.sum(axis=0)
    dz1 = (dlogits @ p["head_w2"]) * (cache["z1_pre"] > 0)
    grads["head_w1"] = dz1.T @ cache["fused"]
    grads["head_b1"] = dz1.sum(axis=0)
    dfused = dz1 @ p["head_w1"]

    d = cfg.d_model
    df1, df2 = dfused[:, :d], dfused[:, d:]
    a_tab, a_txt = cache["a_tab"], cache["a_txt"]

    if cfg.use_gate:
        g = cache["g"]
        dg = (df1 * a_tab).sum(axis=1) - (df2 * a_txt).sum(axis=1)
        ds = dg * g * (1.0 - g)
        u = np.concatenate([a_tab, a_txt], axis=1)
        grads["gate_w"] = ds @ u
        grads["gate_b"] = np.array([ds.sum()])
        du = ds[:, None] * p["gate_w"][None, :]
        da_tab = g[:, None] * df1 + du[:, :d]
        da_txt = (1.0 - g)[:, None] * df2 + du[:, d:]
    else:
        da_tab, da_txt = df1, df2

    grads["wo_a"] = da_tab.T @ cache["v_txt"]
    grads["bo_a"] = da_tab.sum(axis=0)
    dv_txt = da_tab @ p["wo_a"]
    grads["wv_a"] = dv_txt.T @ cache["h_txt"]
    dh_txt = dv_txt @ p["wv_a"]

    grads["wo_b"] = da_txt.T @ cache["v_tab"]
    grads["bo_b"] = da_txt.sum(axis=0)
    dv_tab = da_txt @ p["wo_b"]
    grads["wv_b"] = dv_tab.T @ cache["h_tab"]
    dh_tab = dv_tab @ p["wv_b"]

    grads["p_tab_w"] = dh_tab.T @ cache["x_tab"]
    grads["p_tab_b"] = dh_tab.sum(axis=0)
    grads["p_txt_w"] = dh_txt.T @ cache["x_txt"]
    grads["p_txt_b"] = dh_txt.sum(axis=0)

    return loss, probs, grads


def train_triad(x_tab: np.ndarray, x_txt: np.ndarray, y: np.ndarray,
                cfg: TriadConfig | None = None, seed: int = 0) -> TriadModel:
    """Seeded mini-batch training with early stopping on a validation slice."""
    cfg = cfg or TriadConfig()
    cfg.validate()
    x_tab = np.asarray(x_tab, dtype=float)
    x_txt = np.asarray(x_txt, dtype=float)
    y = np.asarray(y, dtype=int)

    model = init_triad(x_tab.shape[1], x_txt.shape[1], cfg, seed=seed)
    rng = np.random.default_rng(np.random.PCG64(seed + 7))

    n = len(y)
    idx = rng.permutation(n)
    n_val = max(int(round(n * cfg.val_fraction)), 1) if (cfg.early_stopping and n > 10) else 0
    val_idx, train_idx = idx[:n_val], idx[n_val:]

    keys = model.param_keys()
    params = [model.params[k] for k in keys]
    opt = Adam(params, lr=cfg.lr)

    best_val = np.inf
    best_params = None
    stale = 0
    history = {"train_loss": [], "val_loss": []}

    for _epoch in range(cfg.epochs):
        order = rng.permutation(len(train_idx))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = train_idx[order[start : start + cfg.batch_size]]
            loss, _, grads = triad_loss_grad(model, x_tab[batch], x_txt[batch], y[batch])
            if np.isnan(loss):
                raise Diverged("training loss is NaN")
            opt.step(params, [grads[k] for k in keys])
            epoch_loss += loss * len(batch)
        history["train_loss"].append(epoch_loss / max(len(train_idx), 1))

        if n_val:
            val_probs, _ = _forward_internals(model, x_tab[val_idx], x_txt[val_idx])
            val_loss = focal_loss(val_probs, y[val_idx], cfg.gamma, cfg.alpha)
            history["val_loss"].append(val_loss)
            if val_loss < best_val - 1e-9:
                best_val = val_loss
                best_params = [p.copy() for p in params]
                stale = 0
            else:
                stale += 1
                if stale > cfg.patience:
                    break

    if best_params is not None:
        for p_arr, best in zip(params, best_params):
            p_arr[...] = best
    model.history = history
    return model


def class_balanced_alpha(labels: np.ndarray) -> tuple:
    """Per-class focal weights n / (3 * n_c), computed before resampling."""
    labels = np.asarray(labels, dtype=int)
    n = len(labels)
    return tuple(n / (N_CLASSES * max(int((labels == c).sum()), 1)) for c in range(N_CLASSES))


ABLATION_VARIANTS = ("full", "no_rag", "no_stress", "no_gate", "tabular_only", "text_only")


@dataclass(frozen=True)
class AblationSpec:
    """How the pipeline is altered for one ablation arm."""

    name: str
    model_kind: str  # triad | mlp_tab | mlp_txt
    use_gate: bool = True
    zero_stress: bool = False
    ground_affect: bool = True


def ablation_variant(name: str) -> AblationSpec:
    if name not in ABLATION_VARIANTS:
        raise UnknownVariant(f"{name!r}; expected one of {ABLATION_VARIANTS}")
    if name == "tabular_only":
        return AblationSpec(name=name, model_kind="mlp_tab")
    if name == "text_only":
        return AblationSpec(name=name, model_kind="mlp_txt")
    return AblationSpec(
        name=name,
        model_kind="triad",
        use_gate=(name != "no_gate"),
        zero_stress=(name == "no_stress"),
        ground_affect=(name != "no_rag"),
    )
