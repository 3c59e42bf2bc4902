"""Heterogeneous message-passing model for per-clause core prediction.

Three parallel graph-convolution stacks, one per edge type (clause->literal,
literal->clause, literal<->literal), are coupled by averaging their outputs
after every layer and applying ReLU. A linear readout with a sigmoid turns
clause-node embeddings into core-membership probabilities, thresholded
strictly to produce the predicted core.

Each per-edge-type pass is the mean of the transformed in-neighbour
embeddings plus a self-loop term (the node's own transformed embedding);
nodes without in-edges of some type contribute only the self term, so every
term in the cross-type average is well defined. Gradients are computed by
this module's own reverse-mode pass; tests check them against central
finite differences.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from .cnf import Cnf, parse_dimacs, serialize_dimacs
from .lcg import FEATURE_DIM, Lcg, build_lcg
from .mus import CoreLabel, core_from_json, core_to_json

EDGE_TYPES = ("cl", "lc", "ll")
SCHEMA_VERSION = 1
_PROB_EPS = 1e-12  # keeps reported probabilities in the open interval (0, 1)


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; usually the learning rate is too high."""


@dataclass(frozen=True)
class GnnConfig:
    num_layers: int = 3
    hidden_dim: int = 32
    threshold: float = 0.5
    learning_rate: float = 1e-2
    epochs: int = 1
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie strictly between 0 and 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class GnnModel:
    """Weights: per layer and edge type a linear map, plus a scalar readout."""

    layers: list[dict[str, tuple[np.ndarray, np.ndarray]]]
    readout_w: np.ndarray
    readout_b: float
    config: GnnConfig

    def num_parameters(self) -> int:
        n = self.readout_w.size + 1
        for layer in self.layers:
            for w, b in layer.values():
                n += w.size + b.size
        return n

    def copy(self) -> "GnnModel":
        return GnnModel(
            layers=[
                {t: (w.copy(), b.copy()) for t, (w, b) in layer.items()} for layer in self.layers
            ],
            readout_w=self.readout_w.copy(),
            readout_b=self.readout_b,
            config=self.config,
        )


@dataclass(frozen=True)
class TrainingPair:
    """A formula with its oracle core; labels are verified at harvest time."""

    cnf: Cnf
    label: CoreLabel


_BIAS_INIT = 0.05  # small positive offset keeps ReLU units live at the start


def init_model(config: GnnConfig, feature_dim: int = FEATURE_DIM) -> GnnModel:
    """Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], deterministic per
    seed; biases at a small positive constant."""
    rng = np.random.default_rng(config.rng_seed)
    layers = []
    in_dim = feature_dim
    for _ in range(config.num_layers):
        layer = {}
        bound = 1.0 / np.sqrt(in_dim)
        for t in EDGE_TYPES:
            w = rng.uniform(-bound, bound, size=(in_dim, config.hidden_dim))
            b = np.full(config.hidden_dim, _BIAS_INIT)
            layer[t] = (w, b)
        layers.append(layer)
        in_dim = config.hidden_dim
    bound = 1.0 / np.sqrt(config.hidden_dim)
    readout_w = rng.uniform(-bound, bound, size=config.hidden_dim)
    return GnnModel(layers, readout_w, 0.0, config)


def _propagation_matrices(graph: Lcg) -> dict[str, sp.csr_matrix]:
    """I + row-normalised A per edge type: self term plus in-neighbour mean.

    Rows of A with no in-edges normalise to zero, so such nodes keep only
    the self term.
    """
    n = graph.num_nodes
    mats = {}
    eye = sp.identity(n, format="csr")
    for t, edges in (("cl", graph.edges_cl), ("lc", graph.edges_lc), ("ll", graph.edges_ll)):
        if len(edges):
            data = np.ones(len(edges), dtype=np.float64)
            a = sp.csr_matrix((data, (edges[:, 1], edges[:, 0])), shape=(n, n))
            deg = np.asarray(a.sum(axis=1)).ravel()
            inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
            mats[t] = (eye + sp.diags(inv) @ a).tocsr()
        else:
            mats[t] = eye.copy()
    return mats


def _forward_pass(
    model: GnnModel, graph: Lcg, mats: dict[str, sp.csr_matrix] | None = None
) -> tuple[np.ndarray, list[dict], np.ndarray]:
    """Returns (clause logits, per-layer cache for backprop, final embeddings)."""
    if graph.features.shape[1] != model.layers[0]["cl"][0].shape[0]:
        raise ValueError(
            f"graph feature dim {graph.features.shape[1]} does not match model "
            f"input dim {model.layers[0]['cl'][0].shape[0]}"
        )
    if mats is None:
        mats = _propagation_matrices(graph)
    h = graph.features
    caches = []
    for layer in model.layers:
        s = None
        for t in EDGE_TYPES:
            w, b = layer[t]
            m = mats[t] @ (h @ w + b)
            s = m if s is None else s + m
        s /= len(EDGE_TYPES)
        caches.append({"h_in": h, "s": s})
        h = np.maximum(s, 0.0)
    logits = h[2 * graph.num_vars :] @ model.readout_w + model.readout_b
    return logits, caches, h


def forward(model: GnnModel, graph: Lcg) -> np.ndarray:
    """Per-clause core-membership probabilities, each strictly inside (0, 1)."""
    logits, _, _ = _forward_pass(model, graph)
    return np.clip(_sigmoid(logits), _PROB_EPS, 1.0 - _PROB_EPS)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _bce_from_logits(logits: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, logits) - y * logits))


def _backward_pass(
    model: GnnModel,
    graph: Lcg,
    mats: dict[str, sp.csr_matrix],
    caches: list[dict],
    h_final: np.ndarray,
    dlogits: np.ndarray,
) -> GnnModel:
    """Gradient of the loss w.r.t. every parameter, packed in a model-shaped shell."""
    n_lit = 2 * graph.num_vars
    grad_readout_w = h_final[n_lit:].T @ dlogits
    grad_readout_b = float(dlogits.sum())
    dh = np.zeros_like(h_final)
    dh[n_lit:] = np.outer(dlogits, model.readout_w)

    grad_layers: list[dict[str, tuple[np.ndarray, np.ndarray]]] = [None] * len(model.layers)  # type: ignore[list-item]
    for li in range(len(model.layers) - 1, -1, -1):
        cache = caches[li]
        ds = dh * (cache["s"] > 0.0)
        ds /= len(EDGE_TYPES)
        h_in = cache["h_in"]
        dh = np.zeros_like(h_in)
        grads = {}
        for t in EDGE_TYPES:
            w, _ = model.layers[li][t]
            dz = mats[t].T @ ds
            grads[t] = (h_in.T @ dz, dz.sum(axis=0))
            dh += dz @ w.T
        grad_layers[li] = grads
    return GnnModel(grad_layers, grad_readout_w, grad_readout_b, model.config)


def loss_and_gradients(model: GnnModel, pair_cnf: Cnf, core: frozenset[int]) -> tuple[float, GnnModel]:
    """BCE loss over clause nodes and its full gradient, for one instance."""
    graph = build_lcg(pair_cnf)
    mats = _propagation_matrices(graph)
    y = np.zeros(graph.num_clauses)
    y[sorted(core)] = 1.0
    logits, caches, h_final = _forward_pass(model, graph, mats)
    loss = _bce_from_logits(logits, y)
    dlogits = (_sigmoid(logits) - y) / max(len(logits), 1)
    grads = _backward_pass(model, graph, mats, caches, h_final, dlogits)
    return loss, grads


def train(
    model: GnnModel, pairs: list[TrainingPair], config: GnnConfig | None = None
) -> tuple[GnnModel, list[float]]:
    """Full-batch-per-instance SGD on binary cross-entropy.

    Deterministic: pairs are visited in the given order, `config.epochs`
    times, with no shuffling. Returns a new model; the input is untouched.
    loss_trace holds the pre-update loss of every step.
    """
    if not pairs:
        raise ValueError("no training pairs")
    cfg = config or model.config
    out = model.copy()
    lr = cfg.learning_rate
    trace: list[float] = []

    prepared = []
    for pair in pairs:
        graph = build_lcg(pair.cnf)
        y = np.zeros(graph.num_clauses)
        y[sorted(pair.label.clause_indices)] = 1.0
        prepared.append((graph, _propagation_matrices(graph), y))

    for _ in range(cfg.epochs):
        for graph, mats, y in prepared:
            logits, caches, h_final = _forward_pass(out, graph, mats)
            loss = _bce_from_logits(logits, y)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss}; lower the learning rate (currently {lr})"
                )
            trace.append(loss)
            dlogits = (_sigmoid(logits) - y) / max(len(logits), 1)
            grads = _backward_pass(out, graph, mats, caches, h_final, dlogits)
            for layer, glayer in zip(out.layers, grads.layers):
                for t in EDGE_TYPES:
                    w, b = layer[t]
                    gw, gb = glayer[t]
                    w -= lr * gw
                    b -= lr * gb
            out.readout_w -= lr * grads.readout_w
            out.readout_b -= lr * grads.readout_b
            if not all(
                np.isfinite(w).all() and np.isfinite(b).all()
                for layer in out.layers
                for w, b in layer.values()
            ):
                raise TrainingDivergedError("non-finite parameters after update")
    return out, trace


def predict_core(model: GnnModel, cnf: Cnf) -> CoreLabel:
    """Predicted core: clause indices whose probability strictly exceeds the threshold."""
    probs = forward(model, build_lcg(cnf))
    indices = frozenset(int(i) for i in np.nonzero(probs > model.config.threshold)[0])
    return CoreLabel(indices, source="predicted")


def prediction_metrics(model: GnnModel, pairs: list[TrainingPair]) -> dict[str, float]:
    """Recall (core recovery), accuracy, and size discrepancy over clause nodes."""
    tp = fp = fn = tn = 0
    for pair in pairs:
        pred = predict_core(model, pair.cnf).clause_indices
        true = pair.label.clause_indices
        nc = pair.cnf.num_clauses
        tp += len(pred & true)
        fp += len(pred - true)
        fn += len(true - pred)
        tn += nc - len(pred | true)
    total = tp + fp + fn + tn
    pos = tp + fn
    return {
        "recall": tp / pos if pos else 1.0,
        "accuracy": (tp + tn) / total if total else 1.0,
        "size_discrepancy": abs(tp - pos) / total if total else 0.0,
    }


# ---------------------------------------------------------------- persistence


def save_model(model: GnnModel) -> bytes:
    payload = {
        "schema": SCHEMA_VERSION,
        "config": {
            "num_layers": model.config.num_layers,
            "hidden_dim": model.config.hidden_dim,
            "threshold": model.config.threshold,
            "learning_rate": model.config.learning_rate,
            "epochs": model.config.epochs,
            "rng_seed": model.config.rng_seed,
        },
        "layers": [
            {t: {"w": w.tolist(), "b": b.tolist()} for t, (w, b) in layer.items()}
            for layer in model.layers
        ],
        "readout": {"w": model.readout_w.tolist(), "b": model.readout_b},
    }
    return json.dumps(payload).encode("utf-8")


def load_model(blob: bytes) -> GnnModel:
    try:
        payload = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"corrupt model payload: {exc}") from None
    if not isinstance(payload, dict) or "schema" not in payload:
        raise ValueError("corrupt model payload: missing schema field")
    if payload["schema"] != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported model schema version {payload['schema']} (expected {SCHEMA_VERSION})"
        )
    config = GnnConfig(**payload["config"])
    layers = []
    in_dim = None
    for ldata in payload["layers"]:
        layer = {}
        for t in EDGE_TYPES:
            w = np.asarray(ldata[t]["w"], dtype=np.float64)
            b = np.asarray(ldata[t]["b"], dtype=np.float64)
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError("corrupt model payload: bad weight shapes")
            if in_dim is not None and w.shape[0] != in_dim:
                raise ValueError("corrupt model payload: inconsistent layer dims")
            layer[t] = (w, b)
        layers.append(layer)
        in_dim = layer["cl"][0].shape[1]
    readout_w = np.asarray(payload["readout"]["w"], dtype=np.float64)
    readout_b = float(payload["readout"]["b"])
    model = GnnModel(layers, readout_w, readout_b, config)
    if len(layers) != config.num_layers or readout_w.shape != (config.hidden_dim,):
        raise ValueError("corrupt model payload: config does not match weights")
    return model


def save_pairs(pairs: list[TrainingPair], directory: str | Path) -> None:
    """Pair store: instance_NNNNN.cnf with a sibling .core.json per pair."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, pair in enumerate(pairs):
        stem = f"instance_{i:05d}"
        (directory / f"{stem}.cnf").write_text(serialize_dimacs(pair.cnf))
        (directory / f"{stem}.core.json").write_text(
            core_to_json(pair.label, instance=f"{stem}.cnf")
        )


def load_pairs(directory: str | Path) -> list[TrainingPair]:
    directory = Path(directory)
    pairs = []
    for cnf_path in sorted(directory.glob("*.cnf")):
        label_path = cnf_path.with_suffix("").with_suffix(".core.json")
        if not label_path.exists():
            raise FileNotFoundError(f"missing core label for {cnf_path.name}")
        cnf = parse_dimacs(cnf_path.read_text())
        label, _ = core_from_json(label_path.read_text())
        pairs.append(TrainingPair(cnf, label))
    return pairs


# ------------------------------------------------------------- estimator API


class CorePredictor(BaseEstimator):
    """sklearn-style wrapper around the core-prediction model.

    X is a sequence of Cnf values; y a matching sequence of core index
    collections. fit/predict compose with sklearn tooling (clone,
    get_params); the functional API above stays the primitive layer.
    """

    def __init__(
        self,
        num_layers: int = 3,
        hidden_dim: int = 32,
        threshold: float = 0.5,
        learning_rate: float = 1e-2,
        epochs: int = 1,
        random_state: int = 0,
    ) -> None:
        self.num_layers = num_layers
        self.hidden_dim = hidden_dim
        self.threshold = threshold
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.random_state = random_state

    def _config(self) -> GnnConfig:
        return GnnConfig(
            num_layers=self.num_layers,
            hidden_dim=self.hidden_dim,
            threshold=self.threshold,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            rng_seed=self.random_state,
        )

    def fit(self, X, y) -> "CorePredictor":
        if len(X) != len(y):
            raise ValueError(f"X and y lengths differ: {len(X)} vs {len(y)}")
        pairs = [
            TrainingPair(cnf, CoreLabel(frozenset(int(i) for i in core), source="oracle"))
            for cnf, core in zip(X, y)
        ]
        config = self._config()
        self.model_, self.loss_trace_ = train(init_model(config), pairs, config)
        return self

    def predict(self, X) -> list[frozenset[int]]:
        self._check_fitted()
        return [predict_core(self.model_, cnf).clause_indices for cnf in X]

    def predict_proba(self, X) -> list[np.ndarray]:
        self._check_fitted()
        return [forward(self.model_, build_lcg(cnf)) for cnf in X]

    def score(self, X, y) -> float:
        """Mean per-clause accuracy."""
        self._check_fitted()
        pairs = [
            TrainingPair(cnf, CoreLabel(frozenset(int(i) for i in core), source="oracle"))
            for cnf, core in zip(X, y)
        ]
        return prediction_metrics(self.model_, pairs)["accuracy"]

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise RuntimeError("CorePredictor is not fitted; call fit first")
