"""Multimodal harmful-content classifier over frozen image/text embeddings.

Embeddings arrive precomputed (JSONL records or the extractor sidecar);
only the fusion MLP is trained here. Each pair is fused into a
(4d+1)-vector [img ; txt ; img-txt ; img*txt ; cosine] built from the
L2-normalized embeddings, then scored by a two-hidden-layer ReLU MLP with
a sigmoid output. Training minimizes binary cross-entropy with Adam;
dropout is inverted, so evaluation needs no rescaling.
"""

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateDataset,
    DegenerateEmbedding,
    EmptyBatch,
    IoError,
    ShapeError,
)

CHECKPOINT_FORMAT_VERSION = 1
EPS_NORM = 1e-12
EPS_PROB = 1e-7


@dataclass
class EmbeddingPair:
    id: str
    e_img: np.ndarray
    e_txt: np.ndarray
    dim: int
    label: int | None = None
    text: str | None = None

    def __post_init__(self):
        self.e_img = np.asarray(self.e_img, dtype=np.float64)
        self.e_txt = np.asarray(self.e_txt, dtype=np.float64)
        if self.e_img.shape != (self.dim,) or self.e_txt.shape != (self.dim,):
            raise ShapeError(f"sample {self.id}: embeddings must both have dim {self.dim}")
        if not (np.isfinite(self.e_img).all() and np.isfinite(self.e_txt).all()):
            raise ShapeError(f"sample {self.id}: embeddings contain NaN/Inf")


@dataclass
class DetectorModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: float
    dropout_rate: float = 0.3
    threshold: float = 0.5

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 30
    batch_size: int = 64
    rng_seed: int = 0
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.validation_fraction < 1):
            raise ValueError("validation_fraction must lie in (0, 1)")


def normalize(e) -> np.ndarray:
    """L2-normalize an embedding; (near-)zero vectors are rejected."""
    e = np.asarray(e, dtype=np.float64)
    norm = np.linalg.norm(e)
    if norm <= EPS_NORM:
        raise DegenerateEmbedding("cannot normalize a (near-)zero embedding")
    return e / norm


def fuse(pair: EmbeddingPair) -> np.ndarray:
    """Fusion vector [img ; txt ; diff ; product ; cosine] of length 4d+1."""
    zi = normalize(pair.e_img)
    zt = normalize(pair.e_txt)
    return np.concatenate([zi, zt, zi - zt, zi * zt, [float(zi @ zt)]])


def fuse_batch(pairs) -> np.ndarray:
    return np.stack([fuse(p) for p in pairs])


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def model_init(input_dim: int, h1: int = 512, h2: int = 128,
               dropout_rate: float = 0.3, threshold: float = 0.5,
               rng=None) -> DetectorModel:
    """Glorot-uniform initialized model for (4d+1)-dimensional fusion input."""
    rng = rng or np.random.default_rng(0)

    def glorot(fan_out, fan_in):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_out, fan_in))

    return DetectorModel(
        W1=glorot(h1, input_dim), b1=np.zeros(h1),
        W2=glorot(h2, h1), b2=np.zeros(h2),
        w3=glorot(1, h2)[0], b3=0.0,
        dropout_rate=dropout_rate, threshold=threshold,
    )


def forward(model: DetectorModel, z, train_mode: bool = False, rng=None):
    """Probability and activation cache for one fusion vector or a batch.

    Dropout (inverted scaling) is applied after each hidden layer only in
    train_mode; evaluation is deterministic.
    """
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    Z = z[None, :] if single else z
    if Z.shape[1] != model.input_dim:
        raise ShapeError(f"input dim {Z.shape[1]} != model dim {model.input_dim}")

    cache = {"Z": Z}
    a1 = Z @ model.W1.T + model.b1
    h1 = np.maximum(a1, 0.0)
    if train_mode and model.dropout_rate > 0:
        if rng is None:
            raise ValueError("train_mode forward needs an rng for dropout masks")
        m1 = (rng.random(h1.shape) >= model.dropout_rate) / (1.0 - model.dropout_rate)
        h1 = h1 * m1
        cache["m1"] = m1
    a2 = h1 @ model.W2.T + model.b2
    h2 = np.maximum(a2, 0.0)
    if train_mode and model.dropout_rate > 0:
        m2 = (rng.random(h2.shape) >= model.dropout_rate) / (1.0 - model.dropout_rate)
        h2 = h2 * m2
        cache["m2"] = m2
    o = h2 @ model.w3 + model.b3
    p = _sigmoid(o)
    cache.update(a1=a1, h1=h1, a2=a2, h2=h2, o=o)
    if single:
        return float(p[0]), cache
    return p, cache


def classify(model: DetectorModel, pair: EmbeddingPair):
    """Eval-mode probability and hard decision (p >= threshold -> harmful)."""
    p, _ = forward(model, fuse(pair), train_mode=False)
    return p, int(p >= model.threshold)


def bce_loss(probs, labels) -> float:
    """Mean binary cross-entropy; probabilities clipped to [eps, 1-eps]."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if probs.size == 0:
        raise EmptyBatch("cannot average a loss over zero samples")
    if probs.shape != labels.shape:
        raise ShapeError("probs and labels must have equal length")
    p = np.clip(probs, EPS_PROB, 1.0 - EPS_PROB)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))


def loss_and_grads(model: DetectorModel, Z, y, train_mode=False, rng=None):
    """BCE loss plus analytic gradients for every parameter.

    The clipped-probability loss has zero gradient inside the clipped
    region, matching bce_loss exactly (finite-difference checks rely on
    this correspondence).
    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = Z.shape[0]
    p, cache = forward(model, Z, train_mode=train_mode, rng=rng)
    loss = bce_loss(p, y)

    inside = (p > EPS_PROB) & (p < 1.0 - EPS_PROB)
    do = np.where(inside, p - y, 0.0) / n
    h2, h1 = cache["h2"], cache["h1"]
    grads = {"w3": do @ h2, "b3": float(do.sum())}

    dh2 = np.outer(do, model.w3)
    if train_mode and "m2" in cache:
        dh2 = dh2 * cache["m2"]
    da2 = dh2 * (cache["a2"] > 0)
    grads["W2"] = da2.T @ h1
    grads["b2"] = da2.sum(axis=0)

    dh1 = da2 @ model.W2
    if train_mode and "m1" in cache:
        dh1 = dh1 * cache["m1"]
    da1 = dh1 * (cache["a1"] > 0)
    grads["W1"] = da1.T @ cache["Z"]
    grads["b1"] = da1.sum(axis=0)
    return loss, grads, p


def _check_two_classes(labels):
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise DegenerateDataset("dataset holds a single class")
    if min((labels == 0).sum(), (labels == 1).sum()) < 2:
        raise DegenerateDataset("need at least 2 samples per class")


def train(dataset, cfg: TrainConfig, h1: int = 512, h2: int = 128,
          dropout_rate: float = 0.3, threshold: float = 0.5):
    """Adam mini-batch training on BCE; returns (best-val model, history).

    beta1=0.9, beta2=0.999, eps=1e-8. The model with the lowest validation
    loss across epochs is returned; history holds per-epoch train/val loss
    and accuracy.
    """
    labeled = [p for p in dataset if p.label is not None]
    y_all = np.array([p.label for p in labeled], dtype=np.float64)
    _check_two_classes(y_all)
    Z_all = fuse_batch(labeled)

    rng = np.random.default_rng(cfg.rng_seed)
    order = rng.permutation(len(labeled))
    n_val = max(1, int(round(cfg.validation_fraction * len(labeled))))
    val_idx, train_idx = order[:n_val], order[n_val:]
    Zt, yt = Z_all[train_idx], y_all[train_idx]
    Zv, yv = Z_all[val_idx], y_all[val_idx]

    model = model_init(Z_all.shape[1], h1, h2, dropout_rate, threshold, rng)
    params = ["W1", "b1", "W2", "b2", "w3", "b3"]
    m_state = {k: np.zeros_like(np.asarray(getattr(model, k), dtype=np.float64)) for k in params}
    v_state = {k: np.zeros_like(np.asarray(getattr(model, k), dtype=np.float64)) for k in params}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    history = []
    best = None
    for epoch in range(cfg.epochs):
        perm = rng.permutation(len(yt))
        for start in range(0, len(yt), cfg.batch_size):
            batch = perm[start:start + cfg.batch_size]
            _, grads, _ = loss_and_grads(model, Zt[batch], yt[batch],
                                         train_mode=True, rng=rng)
            step += 1
            for k in params:
                g = np.asarray(grads[k], dtype=np.float64)
                m_state[k] = beta1 * m_state[k] + (1 - beta1) * g
                v_state[k] = beta2 * v_state[k] + (1 - beta2) * g * g
                m_hat = m_state[k] / (1 - beta1**step)
                v_hat = v_state[k] / (1 - beta2**step)
                update = cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
                if k == "b3":
                    model.b3 = float(model.b3 - update)
                else:
                    setattr(model, k, getattr(model, k) - update)

        p_tr, _ = forward(model, Zt)
        p_va, _ = forward(model, Zv)
        entry = {
            "epoch": epoch + 1,
            "train_loss": bce_loss(p_tr, yt),
            "train_acc": float(np.mean((p_tr >= threshold) == (yt == 1))),
            "val_loss": bce_loss(p_va, yv),
            "val_acc": float(np.mean((p_va >= threshold) == (yv == 1))),
        }
        history.append(entry)
        if best is None or entry["val_loss"] < best[0]:
            best = (entry["val_loss"], _copy_model(model))

    return best[1], history


def _copy_model(model: DetectorModel) -> DetectorModel:
    return replace(
        model,
        W1=model.W1.copy(), b1=model.b1.copy(),
        W2=model.W2.copy(), b2=model.b2.copy(),
        w3=model.w3.copy(),
    )


def auc_rank(scores, labels) -> float:
    """AUC-ROC by the rank-statistic (Mann-Whitney) formula, ties half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateDataset("AUC needs both classes")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum_pos = ranks[labels == 1].sum()
    return float((rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate(model: DetectorModel, dataset) -> dict:
    """Threshold metrics at the model threshold plus rank-statistic AUC."""
    labeled = [p for p in dataset if p.label is not None]
    if not labeled:
        raise EmptyBatch("no labeled samples to evaluate")
    y = np.array([p.label for p in labeled])
    _check_two_classes(y)
    probs, _ = forward(model, fuse_batch(labeled))
    pred = (probs >= model.threshold).astype(int)
    tp = int(((pred == 1) & (y == 1)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())
    return {
        "accuracy": float((pred == y).mean()),
        "precision": tp / (tp + fp) if tp + fp else 0.0,
        "recall": tp / (tp + fn) if tp + fn else 0.0,
        "auc_roc": auc_rank(probs, y),
    }


# --- JSONL dataset and JSON checkpoint formats ----------------------------


def load_jsonl_dataset(path) -> list:
    """Read embedding records; enforces one constant dim per file."""
    pairs = []
    dim = None
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read dataset {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        rec = json.loads(line)
        pair = EmbeddingPair(
            id=str(rec["id"]),
            e_img=rec["e_img"],
            e_txt=rec["e_txt"],
            dim=int(rec["dim"]),
            label=rec.get("label"),
            text=rec.get("text"),
        )
        if dim is None:
            dim = pair.dim
        elif pair.dim != dim:
            raise ShapeError(f"line {lineno}: dim {pair.dim} != dataset dim {dim}")
        pairs.append(pair)
    return pairs


def save_jsonl_dataset(pairs, path):
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            rec = {
                "id": p.id,
                "label": p.label,
                "dim": p.dim,
                "e_img": [float(v) for v in p.e_img],
                "e_txt": [float(v) for v in p.e_txt],
            }
            if p.text is not None:
                rec["text"] = p.text
            fh.write(json.dumps(rec) + "\n")


def save_checkpoint(model: DetectorModel, path):
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "dims": {
            "input": int(model.W1.shape[1]),
            "hidden1": int(model.W1.shape[0]),
            "hidden2": int(model.W2.shape[0]),
        },
        "W1": model.W1.tolist(),
        "b1": model.b1.tolist(),
        "W2": model.W2.tolist(),
        "b2": model.b2.tolist(),
        "w3": model.w3.tolist(),
        "b3": model.b3,
        "dropout_rate": model.dropout_rate,
        "threshold": model.threshold,
    }
    try:
        Path(path).write_text(json.dumps(doc), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path) -> DetectorModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise IoError(f"unsupported checkpoint format {doc.get('format_version')!r}")
    return DetectorModel(
        W1=np.array(doc["W1"], dtype=np.float64),
        b1=np.array(doc["b1"], dtype=np.float64),
        W2=np.array(doc["W2"], dtype=np.float64),
        b2=np.array(doc["b2"], dtype=np.float64),
        w3=np.array(doc["w3"], dtype=np.float64),
        b3=float(doc["b3"]),
        dropout_rate=float(doc["dropout_rate"]),
        threshold=float(doc["threshold"]),
    )
