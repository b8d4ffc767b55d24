"""Graph encoder + linear classifier + MLP feature decoder, with exact gradients.

    hidden = dropout(conv(H))
    logits = hidden @ head.W + head.b
    recon  = relu(hidden @ dec.W1 + dec.b1) @ dec.W2 + dec.b2

The loss is mean cross-entropy over the training nodes plus
``lambda_recon`` times the mean squared reconstruction error over all nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError
from .layers import (activate, activation_grad, chebyshev_basis, dropout,
                     glorot_uniform)

CONV_KINDS = ("arma", "gcn", "cheb", "mlp")
LABEL_SENTINEL = -1


@dataclass
class ModelSpec:
    kind: str = "arma"
    d_in: int = 180
    d_h: int = 64
    n_classes: int = 2
    num_stacks: int = 1
    num_layers: int = 1
    cheb_k: int = 3
    dropout_rate: float = 0.25
    decoder: bool = True
    activation: str = "relu"

    def __post_init__(self):
        if self.kind not in CONV_KINDS:
            raise ConfigError(f"model kind must be one of {CONV_KINDS}, got {self.kind!r}")
        if min(self.d_in, self.d_h, self.num_stacks, self.num_layers, self.cheb_k) < 1:
            raise ConfigError("dimensions, stacks, layers and cheb_k must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout_rate}")


@dataclass
class ModelParams:
    spec: ModelSpec
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.tensors[key]

    def keys(self):
        return self.tensors.keys()

    def decoder_keys(self) -> list[str]:
        return [k for k in self.tensors if k.startswith("dec.")]

    def copy(self) -> "ModelParams":
        return ModelParams(self.spec, {k: v.copy() for k, v in self.tensors.items()})

    def arma_weights(self, r: int):
        T = self.spec.num_layers
        return ([self.tensors[f"conv.W{r}.{l}"] for l in range(T)],
                [self.tensors[f"conv.V{r}.{l}"] for l in range(T)])


def init_params(spec: ModelSpec, rng) -> ModelParams:
    """Glorot-uniform weights, zero biases.

    Draw order is conv, head, decoder, so dropping the decoder leaves every
    other tensor unchanged for a given rng state.
    """
    t: dict[str, np.ndarray] = {}
    d_in, d_h = spec.d_in, spec.d_h
    if spec.kind == "arma":
        for r in range(spec.num_stacks):
            for l in range(spec.num_layers):
                t[f"conv.W{r}.{l}"] = glorot_uniform(rng, d_in if l == 0 else d_h, d_h)
                t[f"conv.V{r}.{l}"] = glorot_uniform(rng, d_in, d_h)
    elif spec.kind == "cheb":
        for k in range(spec.cheb_k):
            t[f"conv.W{k}"] = glorot_uniform(rng, d_in, d_h)
    else:
        t["conv.W"] = glorot_uniform(rng, d_in, d_h)
    t["head.W"] = glorot_uniform(rng, d_h, spec.n_classes)
    t["head.b"] = np.zeros(spec.n_classes)
    if spec.decoder:
        t["dec.W1"] = glorot_uniform(rng, d_h, d_h)
        t["dec.b1"] = np.zeros(d_h)
        t["dec.W2"] = glorot_uniform(rng, d_h, d_in)
        t["dec.b2"] = np.zeros(d_in)
    return ModelParams(spec, t)


def graph_operator(graph, kind: str):
    """Propagation matrix a conv kind needs: normalized adjacency or scaled Laplacian.

    ``graph`` may be a SubjectGraph or an already-built square matrix.
    """
    if kind == "mlp":
        return None
    if isinstance(graph, np.ndarray):
        return graph
    if kind == "cheb":
        return graph.scaled_laplacian()
    return graph.normalized


@dataclass
class ForwardResult:
    logits: np.ndarray
    reconstruction: np.ndarray | None
    hidden: np.ndarray
    cache: dict = field(repr=False, default_factory=dict)


def model_forward(params: ModelParams, graph, H, training: bool = False, rng=None) -> ForwardResult:
    spec = params.spec
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[1] != spec.d_in:
        raise DataError(f"features have shape {H.shape}, model expects (n, {spec.d_in})")
    op = graph_operator(graph, spec.kind)
    if op is not None and op.shape != (H.shape[0], H.shape[0]):
        raise DataError(f"graph operator {op.shape} does not match {H.shape[0]} nodes")
    act = spec.activation
    cache: dict = {"op": op, "H": H}

    if spec.kind == "arma":
        stacks = []
        out = np.zeros((H.shape[0], spec.d_h))
        for r in range(spec.num_stacks):
            Ws, Vs = params.arma_weights(r)
            X = H
            steps = []
            for W, V in zip(Ws, Vs):
                AX = op @ X
                Z = AX @ W + H @ V
                steps.append((AX, Z))
                X = activate(Z, act)
            stacks.append(steps)
            out += X
        conv = out / spec.num_stacks
        cache["stacks"] = stacks
    elif spec.kind == "gcn":
        AX = op @ H
        Z = AX @ params["conv.W"]
        cache["AX"], cache["Z"] = AX, Z
        conv = activate(Z, act)
    elif spec.kind == "cheb":
        T = chebyshev_basis(op, H, spec.cheb_k)
        Z = sum(Tk @ params[f"conv.W{k}"] for k, Tk in enumerate(T))
        cache["T"], cache["Z"] = T, Z
        conv = activate(Z, act)
    else:
        Z = H @ params["conv.W"]
        cache["Z"] = Z
        conv = activate(Z, act)

    hidden, mask = dropout(conv, spec.dropout_rate, training, rng)
    cache["mask"] = mask
    logits = hidden @ params["head.W"] + params["head.b"]
    recon = None
    if spec.decoder:
        a1 = hidden @ params["dec.W1"] + params["dec.b1"]
        z1 = np.maximum(a1, 0.0)
        recon = z1 @ params["dec.W2"] + params["dec.b2"]
        cache["a1"], cache["z1"] = a1, z1
    return ForwardResult(logits, recon, hidden, cache)


def log_softmax(logits):
    m = logits.max(axis=1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _check_mask(labels, train_mask):
    train_mask = np.asarray(train_mask, dtype=bool)
    if not train_mask.any():
        raise DataError("train mask is empty")
    labels = np.asarray(labels)
    if np.any(labels[train_mask] == LABEL_SENTINEL):
        raise DataError("a training node carries the hidden-label sentinel")
    return labels, train_mask


def joint_loss(logits, labels, train_mask, reconstruction, H, lambda_recon: float) -> float:
    """Cross-entropy on training nodes + lambda_recon * MSE(reconstruction, H) on all nodes."""
    labels, train_mask = _check_mask(labels, train_mask)
    logp = log_softmax(np.asarray(logits, dtype=np.float64))
    idx = np.flatnonzero(train_mask)
    ce = -logp[idx, labels[idx]].mean()
    if lambda_recon == 0.0 or reconstruction is None:
        return float(ce)
    return float(ce + lambda_recon * np.mean((reconstruction - H) ** 2))


def _conv_backward(params: ModelParams, cache, d_conv, grads):
    spec = params.spec
    act = spec.activation
    op, H = cache["op"], cache["H"]
    if spec.kind == "arma":
        for r, steps in enumerate(cache["stacks"]):
            Ws, _ = params.arma_weights(r)
            dX = d_conv / spec.num_stacks
            for l in range(len(steps) - 1, -1, -1):
                AX, Z = steps[l]
                dZ = dX * activation_grad(Z, act)
                grads[f"conv.W{r}.{l}"] = AX.T @ dZ
                grads[f"conv.V{r}.{l}"] = H.T @ dZ
                if l > 0:
                    dX = op.T @ (dZ @ Ws[l].T)
    elif spec.kind == "gcn":
        dZ = d_conv * activation_grad(cache["Z"], act)
        grads["conv.W"] = cache["AX"].T @ dZ
    elif spec.kind == "cheb":
        dZ = d_conv * activation_grad(cache["Z"], act)
        for k, Tk in enumerate(cache["T"]):
            grads[f"conv.W{k}"] = Tk.T @ dZ
    else:
        dZ = d_conv * activation_grad(cache["Z"], act)
        grads["conv.W"] = H.T @ dZ


def backward(params: ModelParams, fwd: ForwardResult, labels, train_mask,
             lambda_recon: float) -> dict[str, np.ndarray]:
    """Gradients of :func:`joint_loss` for every tensor, reusing the forward dropout mask."""
    labels, train_mask = _check_mask(labels, train_mask)
    cache = fwd.cache
    H = cache["H"]
    grads: dict[str, np.ndarray] = {}

    idx = np.flatnonzero(train_mask)
    probs = np.exp(log_softmax(fwd.logits))
    d_logits = np.zeros_like(fwd.logits)
    d_logits[idx] = probs[idx]
    d_logits[idx, labels[idx]] -= 1.0
    d_logits /= idx.size

    grads["head.W"] = fwd.hidden.T @ d_logits
    grads["head.b"] = d_logits.sum(axis=0)
    d_hidden = d_logits @ params["head.W"].T

    if params.spec.decoder:
        if lambda_recon == 0.0:
            for k in params.decoder_keys():
                grads[k] = np.zeros_like(params[k])
        else:
            d_rec = (2.0 * lambda_recon / H.size) * (fwd.reconstruction - H)
            grads["dec.W2"] = cache["z1"].T @ d_rec
            grads["dec.b2"] = d_rec.sum(axis=0)
            d_a1 = (d_rec @ params["dec.W2"].T) * (cache["a1"] > 0)
            grads["dec.W1"] = fwd.hidden.T @ d_a1
            grads["dec.b1"] = d_a1.sum(axis=0)
            d_hidden = d_hidden + d_a1 @ params["dec.W1"].T

    d_conv = d_hidden if cache["mask"] is None else d_hidden * cache["mask"]
    _conv_backward(params, cache, d_conv, grads)
    return {k: grads[k] for k in params.keys()}


def loss_and_gradients(params: ModelParams, graph, H, labels, train_mask,
                       lambda_recon: float, training: bool = True, rng=None):
    fwd = model_forward(params, graph, H, training=training, rng=rng)
    loss = joint_loss(fwd.logits, labels, train_mask, fwd.reconstruction, H, lambda_recon)
    return loss, backward(params, fwd, labels, train_mask, lambda_recon)


def trainable_keys(params: ModelParams, lambda_recon: float) -> list[str]:
    """Keys with a live gradient path; the decoder is inert when lambda_recon == 0."""
    if lambda_recon == 0.0:
        return [k for k in params.keys() if not k.startswith("dec.")]
    return list(params.keys())
