"""Splits, metrics and the repeated stratified train/evaluate protocol."""

from __future__ import annotations

import hashlib
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .config import ExperimentConfig, dump_config
from .errors import ArmaReconError, DataError, NumericalError
from .features import (FeatureMatrix, extract_cohort_features, feature_csv_text,
                       read_feature_csv, synth_cohort)
from .graph import SubjectGraph, build_adjacency
from .nn.model import (LABEL_SENTINEL, ModelParams, ModelSpec, init_params,
                       loss_and_gradients, model_forward, trainable_keys)
from .nn.optim import AdamState, adam_step

METRICS = ("acc", "prec", "rec", "f1", "auc")


# ---------------------------------------------------------------- splits

@dataclass
class SplitPlan:
    train_frac: float
    seed: int
    train_masks: np.ndarray  # (k, n) bool

    @property
    def folds(self) -> int:
        return self.train_masks.shape[0]

    @property
    def test_masks(self) -> np.ndarray:
        return ~self.train_masks


def stratified_folds(labels, train_frac: float, k: int, seed: int) -> SplitPlan:
    """``k`` independent stratified random splits at ``train_frac``.

    Each class contributes round(train_frac * count) training nodes,
    clamped so both sides keep at least one member of every class.
    """
    labels = np.asarray(labels)
    if not 0.0 < train_frac < 1.0:
        raise DataError(f"train_frac must be in (0, 1), got {train_frac}")
    if k < 1:
        raise DataError(f"need at least one fold, got k={k}")
    classes = np.unique(labels)
    per_class = []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        if idx.size < 2:
            raise DataError(f"class {c} has {idx.size} member(s); need >= 2 to split")
        n_train = min(max(math.floor(train_frac * idx.size + 0.5), 1), idx.size - 1)
        per_class.append((idx, n_train))
    rng = np.random.default_rng(seed)
    masks = np.zeros((k, labels.size), dtype=bool)
    for f in range(k):
        for idx, n_train in per_class:
            masks[f, rng.permutation(idx)[:n_train]] = True
    return SplitPlan(train_frac, seed, masks)


def fold_rngs(seed: int, fold: int):
    """Independent (init, dropout) generators for one fold."""
    init_ss, drop_ss = np.random.SeedSequence([seed, fold]).spawn(2)
    return np.random.default_rng(init_ss), np.random.default_rng(drop_ss)


# --------------------------------------------------------------- metrics

def auc_rank(scores, labels) -> float | None:
    """Mann-Whitney AUC with midranks; None when only one class is present."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_pairwise(scores, labels) -> float | None:
    """Brute-force AUC over all positive/negative pairs (ties count 1/2)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    sp, sn = scores[labels == 1], scores[labels != 1]
    if sp.size == 0 or sn.size == 0:
        return None
    wins = (sp[:, None] > sn[None, :]).sum() + 0.5 * (sp[:, None] == sn[None, :]).sum()
    return float(wins / (sp.size * sn.size))


def binary_metrics(scores, labels, test_mask=None) -> dict:
    """Accuracy, precision, recall, F1 and AUC with class 1 as positive.

    ``scores`` is either an (n, 2) logit array (prediction = argmax, ranking
    by the logit margin) or a length-n positive-class probability
    (prediction = score > 0.5).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    mask = np.ones(labels.size, bool) if test_mask is None else np.asarray(test_mask, bool)
    if not mask.any():
        raise DataError("test mask is empty")
    if scores.ndim == 2:
        rank_score = scores[:, 1] - scores[:, 0]
        pred = np.argmax(scores, axis=1)
    else:
        rank_score = scores
        pred = (scores > 0.5).astype(np.int64)
    y, yhat, s = labels[mask], pred[mask], rank_score[mask]
    tp = int(np.sum((yhat == 1) & (y == 1)))
    fp = int(np.sum((yhat == 1) & (y == 0)))
    fn = int(np.sum((yhat == 0) & (y == 1)))
    acc = float(np.mean(yhat == y))
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    auc = auc_rank(s, y)
    if auc is None:
        warnings.warn("test set holds a single class; AUC is undefined", stacklevel=2)
    return {"acc": acc, "prec": float(prec), "rec": float(rec), "f1": float(f1), "auc": auc}


@dataclass
class MetricsReport:
    rows: list[dict] = field(default_factory=list)

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows if r[name] is not None], dtype=np.float64)

    def mean(self) -> dict:
        return {m: (float(np.mean(c)) if (c := self.column(m)).size else None) for m in METRICS}

    def std(self) -> dict:
        """Population standard deviation over folds."""
        return {m: (float(np.std(c)) if (c := self.column(m)).size else None) for m in METRICS}

    def to_csv(self) -> str:
        def fmt(x):
            return "" if x is None else format(x, ".17g")
        lines = ["fold," + ",".join(METRICS)]
        for i, r in enumerate(self.rows):
            lines.append(f"{i}," + ",".join(fmt(r[m]) for m in METRICS))
        for tag, agg in (("aggregate_mean", self.mean()), ("aggregate_std", self.std())):
            lines.append(f"{tag}," + ",".join(fmt(agg[m]) for m in METRICS))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "MetricsReport":
        rows = []
        for line in text.strip().splitlines()[1:]:
            parts = line.split(",")
            if parts[0].startswith("aggregate"):
                continue
            rows.append({m: (float(v) if v else None) for m, v in zip(METRICS, parts[1:])})
        return cls(rows)


# ---------------------------------------------------------------- protocol

def load_dataset(config: ExperimentConfig) -> FeatureMatrix:
    if config.features_csv:
        return read_feature_csv(config.features_csv, q=config.q)
    if config.manifest:
        rois = config.roi_list()
        if not rois:
            raise DataError("a manifest dataset needs roi_ids")
        return extract_cohort_features(config.manifest, rois, q=config.q)
    return synth_cohort(config.synth_n, config.synth_p, config.q, config.synth_shift,
                        config.synth_noise, config.synth_seed)


def model_spec(config: ExperimentConfig, d_in: int) -> ModelSpec:
    return ModelSpec(kind=config.model, d_in=d_in, d_h=config.hidden,
                     num_stacks=config.num_stacks, num_layers=config.num_layers,
                     cheb_k=config.cheb_k, dropout_rate=config.dropout,
                     decoder=config.variant == "recon")


def train_model(config: ExperimentConfig, H, graph: SubjectGraph, labels, train_mask,
                fold: int = 0, history: list | None = None):
    """Train from a fresh initialization for ``config.epochs`` full-graph steps.

    Labels outside ``train_mask`` are replaced by a sentinel before training
    begins, so no gradient step can see them.
    """
    labels = np.where(train_mask, labels, LABEL_SENTINEL)
    init_rng, drop_rng = fold_rngs(config.seed, fold)
    params = init_params(model_spec(config, H.shape[1]), init_rng)
    state = AdamState(lr=config.lr, weight_decay=config.weight_decay)
    lam = config.effective_lambda
    keys = trainable_keys(params, lam)
    for _ in range(config.epochs):
        loss, grads = loss_and_gradients(params, graph, H, labels, train_mask, lam,
                                         training=True, rng=drop_rng)
        if not np.isfinite(loss):
            raise NumericalError(f"fold {fold}: loss became non-finite")
        if history is not None:
            history.append(loss)
        adam_step(params.tensors, grads, state, keys)
    return params, state


def predict(params: ModelParams, graph, H) -> np.ndarray:
    return model_forward(params, graph, H, training=False).logits


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: MetricsReport
    manifest: dict
    logits: list[np.ndarray] = field(default_factory=list, repr=False)
    plan: SplitPlan | None = field(default=None, repr=False)

    @property
    def report_csv(self) -> str:
        return self.report.to_csv()

    @property
    def manifest_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.manifest.items())


def git_blob_sha1(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def run_experiment(config: ExperimentConfig, out_dir=None, fm: FeatureMatrix | None = None,
                   progress=None) -> ExperimentResult:
    """Build the graph once over all subjects, then train and test every fold."""
    fm = load_dataset(config) if fm is None else fm
    graph = build_adjacency(fm, config.alpha, config.similarity)
    plan = stratified_folds(fm.labels, config.train_frac, config.folds, config.seed)

    def one_fold(f):
        try:
            params, _ = train_model(config, fm.data, graph, fm.labels, plan.train_masks[f], fold=f)
            logits = predict(params, graph, fm.data)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                metrics = binary_metrics(logits, fm.labels, plan.test_masks[f])
        except ArmaReconError as exc:
            raise type(exc)(f"fold {f}: {exc}") from exc
        if progress is not None:
            progress(f, metrics)
        return metrics, logits

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(one_fold, range(plan.folds)))
    else:
        results = [one_fold(f) for f in range(plan.folds)]

    report = MetricsReport([r[0] for r in results])
    manifest = dict(config.to_items())
    manifest["effective_lambda_recon"] = repr(config.effective_lambda)
    manifest["n_subjects"] = str(fm.n)
    manifest["n_features"] = str(fm.data.shape[1])
    manifest["n_edges"] = str(graph.num_edges)
    manifest["features_sha1"] = git_blob_sha1(feature_csv_text(fm).encode())
    manifest["graph_sha1"] = git_blob_sha1(
        "".join(f"{i} {j}\n" for i, j in graph.edges()).encode())
    manifest["report_sha1"] = git_blob_sha1(report.to_csv().encode())
    result = ExperimentResult(config, report, manifest, [r[1] for r in results], plan)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def write_outputs(result: ExperimentResult, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(result.report_csv)
    (out / "manifest.txt").write_text(result.manifest_text)
    (out / "config.txt").write_text(dump_config(result.config))


def compare_regularizer(config: ExperimentConfig, seeds, fm: FeatureMatrix | None = None) -> list[dict]:
    """Mean test AUC of the recon and plain variants for each seed."""
    fm = load_dataset(config) if fm is None else fm
    rows = []
    for s in seeds:
        row = {"seed": int(s)}
        for variant in ("recon", "plain"):
            res = run_experiment(config.with_overrides({"variant": variant, "seed": int(s)}), fm=fm)
            row[f"auc_{variant}"] = res.report.mean()["auc"]
        rows.append(row)
    return rows


def comparison_csv(rows) -> str:
    lines = ["seed,auc_recon,auc_plain,difference"]
    for r in rows:
        lines.append(f"{r['seed']},{r['auc_recon']:.17g},{r['auc_plain']:.17g},"
                     f"{r['auc_recon'] - r['auc_plain']:.17g}")
    rec = float(np.mean([r["auc_recon"] for r in rows]))
    pla = float(np.mean([r["auc_plain"] for r in rows]))
    lines.append(f"mean,{rec:.17g},{pla:.17g},{rec - pla:.17g}")
    return "\n".join(lines) + "\n"
