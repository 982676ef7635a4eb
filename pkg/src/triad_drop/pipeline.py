"""End-to-end glue: feature assembly, model training, persistence, scoring.

Fit discipline: the tabular encoder and the PCA basis are fitted on the
pre-resampling training fold; the resampled (balanced) fold is used only
to fit model parameters. Text features are record-local (embeddings and
lexicon affect), so they can be computed for any row without leakage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bundle as bundle_io
from .dataset import CleanCohort, StudentRecord, cohort_version
from .errors import ModelMissing, UnknownVariant
from .features import (
    PCA_COMPONENTS,
    PcaModel,
    SplitPlan,
    TabularEncoder,
    TextVector,
    build_text_vector,
    fit_pca,
    fit_tabular_encoder,
    project,
)
from .fusion import (
    AblationSpec,
    TriadConfig,
    TriadModel,
    ablation_variant,
    class_balanced_alpha,
    forward,
    train_triad,
)
from .lexicon import SENTIMENTS, STRESS_TAGS
from .models import LogisticModel, MlpConfig, MlpModel, predict_proba, train_logistic, train_mlp
from .resample import ResamplePlan, smotenc_balance
from .textpipe import (
    HashedNgramEmbedder,
    KnowledgeBase,
    build_prompt,
    load_knowledge_base,
    retrieve_top_k,
    write_knowledge_base,
)
from .textpipe.affect import classify

MODEL_KINDS = ("logistic", "mlp", "triad")


@dataclass
class TextEntry:
    mean_embedding: np.ndarray | None
    sentiment_grounded: str
    stress_grounded: str
    sentiment_plain: str
    stress_plain: str


def build_text_cache(records: list, provider: HashedNgramEmbedder,
                     kb: KnowledgeBase) -> dict:
    """Per-student text features: mean comment embedding plus aggregated
    affect labels with and without retrieval grounding."""
    cache: dict = {}
    for record in records:
        if record.student_id in cache:
            continue
        if not record.comments:
            cache[record.student_id] = TextEntry(None, "neutral", "none", "neutral", "none")
            continue
        embeddings = []
        sent_g = np.zeros(len(SENTIMENTS))
        stress_g = np.zeros(len(STRESS_TAGS))
        sent_p = np.zeros(len(SENTIMENTS))
        stress_p = np.zeros(len(STRESS_TAGS))
        for comment in record.comments:
            emb = provider.embed(comment.text) if comment.text.strip() else None
            retrieval = retrieve_top_k(kb.index, emb, k=3) if emb is not None else None
            if emb is not None:
                embeddings.append(emb)
            grounded = classify(build_prompt(comment.text, retrieval))
            plain = classify(build_prompt(comment.text, None))
            sent_g += grounded.sentiment_probs
            stress_g += grounded.stress_probs
            sent_p += plain.sentiment_probs
            stress_p += plain.stress_probs
        if not embeddings:
            cache[record.student_id] = TextEntry(None, "neutral", "none", "neutral", "none")
            continue
        mean_emb = np.mean(embeddings, axis=0)
        cache[record.student_id] = TextEntry(
            mean_embedding=mean_emb,
            sentiment_grounded=SENTIMENTS[int(np.argmax(sent_g))],
            stress_grounded=STRESS_TAGS[int(np.argmax(stress_g))],
            sentiment_plain=SENTIMENTS[int(np.argmax(sent_p))],
            stress_plain=STRESS_TAGS[int(np.argmax(stress_p))],
        )
    return cache


def text_vector_for(record: StudentRecord, entry: TextEntry, pca: PcaModel,
                    spec: AblationSpec) -> np.ndarray:
    if entry.mean_embedding is None:
        vec = build_text_vector(None, None, None).to_array()
    else:
        scores = project(pca, entry.mean_embedding)
        if spec.ground_affect:
            sentiment, stress = entry.sentiment_grounded, entry.stress_grounded
        else:
            sentiment, stress = entry.sentiment_plain, entry.stress_plain
        vec = TextVector(scores, sentiment, stress).to_array()
    if spec.zero_stress:
        vec = vec.copy()
        vec[PCA_COMPONENTS + len(SENTIMENTS):] = 0.0
    return vec


def assemble_features(records: list, encoder: TabularEncoder, pca: PcaModel,
                      text_cache: dict, spec: AblationSpec) -> tuple[np.ndarray, np.ndarray]:
    x_tab = encoder.encode_many(records)
    x_txt = np.stack([
        text_vector_for(r, text_cache[r.student_id], pca, spec) for r in records
    ]) if records else np.zeros((0, 57))
    return x_tab, x_txt


@dataclass
class TrainedPipeline:
    kind: str  # logistic | mlp | triad | variant:<name>
    spec: AblationSpec
    encoder: TabularEncoder
    pca: PcaModel
    model: object
    seed: int
    meta: dict = field(default_factory=dict)

    def predict(self, x_tab: np.ndarray, x_txt: np.ndarray) -> np.ndarray:
        if isinstance(self.model, TriadModel):
            probs, _ = forward(self.model, x_tab, x_txt)
            return probs
        if self.spec.model_kind == "mlp_txt":
            return predict_proba(self.model, x_txt)
        return predict_proba(self.model, x_tab)

    def predict_records(self, records: list, text_cache: dict) -> np.ndarray:
        x_tab, x_txt = assemble_features(records, self.encoder, self.pca, text_cache, self.spec)
        return self.predict(x_tab, x_txt)


def resolve_kind(kind: str) -> tuple[str, AblationSpec]:
    """Map a CLI-style model name to (canonical kind, ablation spec)."""
    if kind.startswith("variant:"):
        spec = ablation_variant(kind.split(":", 1)[1])
        return kind, spec
    if kind == "triad":
        return kind, ablation_variant("full")
    if kind == "logistic":
        return kind, AblationSpec(name="logistic", model_kind="logistic")
    if kind == "mlp":
        return kind, AblationSpec(name="mlp", model_kind="mlp_tab")
    raise UnknownVariant(f"unknown model kind {kind!r}")


def train_pipeline(cohort: CleanCohort, split: SplitPlan, kind: str, seed: int,
                   provider: HashedNgramEmbedder, kb: KnowledgeBase,
                   epochs: int = 40, batch_size: int = 64,
                   resample_plan: ResamplePlan | None = None,
                   text_cache: dict | None = None) -> TrainedPipeline:
    kind, spec = resolve_kind(kind)
    train_rows = split.train_rows(cohort)

    encoder = fit_tabular_encoder(train_rows)
    if text_cache is None:
        text_cache = build_text_cache(cohort.rows, provider, kb)

    train_embeddings = np.stack([
        text_cache[r.student_id].mean_embedding
        if text_cache[r.student_id].mean_embedding is not None
        else np.zeros(provider.dimension)
        for r in train_rows
    ])
    pca = fit_pca(train_embeddings, k=min(PCA_COMPONENTS, len(train_rows) - 1))

    alpha = class_balanced_alpha(np.array([r.label for r in train_rows]))

    plan = resample_plan or ResamplePlan(seed=seed)
    balanced = smotenc_balance(train_rows, plan)
    for row in balanced:
        if row.student_id not in text_cache:
            text_cache[row.student_id] = build_text_cache([row], provider, kb)[row.student_id]

    x_tab, x_txt = assemble_features(balanced, encoder, pca, text_cache, spec)
    y = np.array([r.label for r in balanced])

    if spec.model_kind == "logistic":
        model = train_logistic(x_tab, y, l2=1e-4, epochs=200, lr=0.5, seed=seed)
    elif spec.model_kind == "mlp_tab":
        cfg = MlpConfig(epochs=epochs, batch_size=batch_size)
        model = train_mlp(x_tab, y, cfg, seed=seed)
    elif spec.model_kind == "mlp_txt":
        cfg = MlpConfig(epochs=epochs, batch_size=batch_size)
        model = train_mlp(x_txt, y, cfg, seed=seed)
    else:
        cfg = TriadConfig(alpha=alpha, epochs=epochs, batch_size=batch_size,
                          use_gate=spec.use_gate)
        model = train_triad(x_tab, x_txt, y, cfg, seed=seed)

    meta = {
        "kind": kind,
        "spec": spec.name,
        "seed": seed,
        "cohort_version": cohort_version(cohort),
        "alpha": list(alpha),
        "train_rows": len(balanced),
    }
    return TrainedPipeline(kind=kind, spec=spec, encoder=encoder, pca=pca,
                           model=model, seed=seed, meta=meta)


# ---------------------------------------------------------------------------
# persistence

def model_version(trained: TrainedPipeline) -> str:
    import hashlib

    h = hashlib.blake2b(digest_size=6)
    h.update(trained.kind.encode())
    for arr in _model_arrays(trained.model).values():
        h.update(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return h.hexdigest()


def _model_arrays(model) -> dict:
    if isinstance(model, LogisticModel):
        return {"weights": model.weights, "bias": model.bias}
    if isinstance(model, MlpModel):
        out = {}
        for i, (w, b) in enumerate(zip(model.weights, model.biases)):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out
    if isinstance(model, TriadModel):
        return {k: model.params[k] for k in model.param_keys()}
    raise ModelMissing("unsupported model object")


def save_pipeline(trained: TrainedPipeline, path: str | Path) -> str:
    enc_meta, enc_arrays = trained.encoder.to_arrays()
    arrays = {f"encoder.{k}": v for k, v in enc_arrays.items()}
    arrays["pca.mean"] = trained.pca.mean
    arrays["pca.components"] = trained.pca.components
    arrays["pca.explained"] = trained.pca.explained_variance
    for k, v in _model_arrays(trained.model).items():
        arrays[f"model.{k}"] = v

    version = model_version(trained)
    meta = dict(trained.meta)
    meta.update({
        "model_version": version,
        "encoder": enc_meta,
        "spec": {
            "name": trained.spec.name,
            "model_kind": trained.spec.model_kind,
            "use_gate": trained.spec.use_gate,
            "zero_stress": trained.spec.zero_stress,
            "ground_affect": trained.spec.ground_affect,
        },
        "model_config": _model_config_json(trained.model),
    })
    bundle_io.save_bundle(path, meta, arrays)
    return version


def _model_config_json(model) -> dict:
    if isinstance(model, LogisticModel):
        return {"type": "logistic", "l2": model.l2}
    if isinstance(model, MlpModel):
        return {"type": "mlp", "hidden": list(model.config.hidden),
                "dropout": model.config.dropout}
    if isinstance(model, TriadModel):
        cfg = model.config
        return {"type": "triad", "d_model": cfg.d_model, "heads": cfg.heads,
                "head_hidden": cfg.head_hidden, "gamma": cfg.gamma,
                "alpha": list(cfg.alpha), "use_gate": cfg.use_gate}
    raise ModelMissing("unsupported model object")


def load_pipeline(path: str | Path) -> TrainedPipeline:
    path = Path(path)
    if not path.exists():
        raise ModelMissing(str(path))
    meta, arrays = bundle_io.load_bundle(path)

    encoder = TabularEncoder.from_arrays(
        meta["encoder"],
        {"z_mean": arrays["encoder.z_mean"], "z_sd": arrays["encoder.z_sd"]},
    )
    pca = PcaModel(mean=arrays["pca.mean"], components=arrays["pca.components"],
                   explained_variance=arrays["pca.explained"])
    spec = AblationSpec(**meta["spec"])

    mc = meta["model_config"]
    model_arrays = {k.split(".", 1)[1]: v for k, v in arrays.items() if k.startswith("model.")}
    if mc["type"] == "logistic":
        model = LogisticModel(weights=model_arrays["weights"], bias=model_arrays["bias"],
                              l2=mc["l2"])
    elif mc["type"] == "mlp":
        n_layers = len(mc["hidden"]) + 1
        model = MlpModel(
            weights=[model_arrays[f"w{i}"] for i in range(n_layers)],
            biases=[model_arrays[f"b{i}"] for i in range(n_layers)],
            config=MlpConfig(hidden=tuple(mc["hidden"]), dropout=mc["dropout"]),
        )
    else:
        cfg = TriadConfig(d_model=mc["d_model"], heads=mc["heads"],
                          head_hidden=mc["head_hidden"], gamma=mc["gamma"],
                          alpha=tuple(mc["alpha"]), use_gate=mc["use_gate"])
        model = TriadModel(params=model_arrays, config=cfg)

    return TrainedPipeline(kind=meta["kind"], spec=spec, encoder=encoder, pca=pca,
                           model=model, seed=meta["seed"], meta=meta)


# ---------------------------------------------------------------------------
# scoring

@dataclass
class ScoredStudent:
    student_id: str
    risk: float
    probs: np.ndarray
    gate: float | None = None


def score_records(trained: TrainedPipeline, records: list, text_cache: dict) -> list:
    """Batch scoring; risk is the Dropout-class probability."""
    if not records:
        return []
    x_tab, x_txt = assemble_features(records, trained.encoder, trained.pca,
                                     text_cache, trained.spec)
    gates = [None] * len(records)
    if isinstance(trained.model, TriadModel):
        probs, traces = forward(trained.model, x_tab, x_txt, want_trace=True)
        gates = [t.gate for t in traces]
    else:
        probs = trained.predict(x_tab, x_txt)
    return [
        ScoredStudent(student_id=r.student_id, risk=float(probs[i, 1]),
                      probs=probs[i], gate=gates[i])
        for i, r in enumerate(records)
    ]


def make_single_scorer(trained: TrainedPipeline, provider: HashedNgramEmbedder,
                       kb: KnowledgeBase):
    """Per-learner scorer measuring the online path: embed the comments,
    retrieve grounding passages, classify affect and run the model forward.
    Tabular encodings are precomputed (features cached)."""
    tab_cache: dict = {}

    def score_one(record: StudentRecord) -> float:
        x_tab = tab_cache.get(record.student_id)
        if x_tab is None:
            x_tab = trained.encoder.encode(record)
            tab_cache[record.student_id] = x_tab
        entry = build_text_cache([record], provider, kb)[record.student_id]
        x_txt = text_vector_for(record, entry, trained.pca, trained.spec)
        probs = trained.predict(x_tab[None, :], x_txt[None, :])
        return float(probs[0, 1])

    return score_one


# ---------------------------------------------------------------------------
# alert evidence

def best_comment_for_tag(record: StudentRecord, stress_tag: str, provider, kb):
    """The comment most indicative of the assigned stress tag (ties resolved
    toward the most recent), with its retrieval result."""
    if not record.comments:
        return None, None
    best = None
    best_key = None
    for comment in record.comments:
        if not comment.text.strip():
            continue
        emb = provider.embed(comment.text)
        retrieval = retrieve_top_k(kb.index, emb, k=3)
        labels = classify(build_prompt(comment.text, retrieval))
        if stress_tag == "none":
            score = max(labels.sentiment_probs[0], labels.stress_probs[STRESS_TAGS.index("none")])
        else:
            score = labels.stress_probs[STRESS_TAGS.index(stress_tag)]
        key = (score, -comment.age_days)
        if best_key is None or key > best_key:
            best_key = key
            best = (comment, retrieval)
    return best if best is not None else (None, None)


def default_provider(seed: int = 0) -> HashedNgramEmbedder:
    return HashedNgramEmbedder(seed=seed)


def ensure_knowledge_base(data_dir: str | Path, provider) -> KnowledgeBase:
    kb_dir = Path(data_dir) / "knowledge_base"
    if not (kb_dir / "manifest.json").exists():
        write_knowledge_base(kb_dir)
    return load_knowledge_base(kb_dir, provider)
