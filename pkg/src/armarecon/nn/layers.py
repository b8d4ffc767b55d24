"""Dense graph convolution layers (forward passes).

The backward passes live next to the model in :mod:`armarecon.nn.model`,
where the caches needed for them are kept.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DataError

ACTIVATIONS = ("relu", "identity")


def relu(x):
    return np.maximum(x, 0.0)


def activate(z, activation: str):
    if activation == "relu":
        return relu(z)
    if activation == "identity":
        return z
    raise ConfigError(f"unknown activation {activation!r}")


def activation_grad(z, activation: str):
    if activation == "relu":
        return (z > 0).astype(z.dtype)
    return np.ones_like(z)


def _check_matmul(a, b, what):
    if a.shape[-1] != b.shape[0]:
        raise DataError(f"{what}: cannot multiply {a.shape} by {b.shape}")


def arma_conv_forward(Atil, X_prev, H, W, V, activation: str = "relu"):
    """One ARMA recursion step: sigma(Atil @ X_prev @ W + H @ V)."""
    if Atil.shape[1] != X_prev.shape[0] or H.shape[0] != X_prev.shape[0]:
        raise DataError(f"operator {Atil.shape}, state {X_prev.shape} and skip input "
                        f"{H.shape} disagree on the node count")
    _check_matmul(X_prev, W, "propagation weight")
    _check_matmul(H, V, "skip weight")
    if W.shape[1] != V.shape[1]:
        raise DataError(f"W and V output widths differ: {W.shape[1]} vs {V.shape[1]}")
    return activate(Atil @ X_prev @ W + H @ V, activation)


def arma_stack_forward(Atil, H, Ws, Vs, activation: str = "relu"):
    """Run ``len(Ws)`` recursion steps starting from X = H.

    Passing the same matrices repeatedly gives the weight-shared recursion.
    """
    X = H
    for W, V in zip(Ws, Vs):
        X = arma_conv_forward(Atil, X, H, W, V, activation)
    return X


def gcn_conv_forward(Atil, X, W, activation: str = "relu"):
    _check_matmul(Atil, X, "propagation")
    _check_matmul(X, W, "weight")
    return activate(Atil @ X @ W, activation)


def chebyshev_basis(L_scaled, X, K: int) -> list[np.ndarray]:
    """T_0 X .. T_{K-1} X via the three-term recurrence."""
    if K < 1:
        raise ConfigError(f"Chebyshev order K must be >= 1, got {K}")
    _check_matmul(L_scaled, X, "Chebyshev propagation")
    T = [X]
    if K > 1:
        T.append(L_scaled @ X)
    for _ in range(2, K):
        T.append(2.0 * (L_scaled @ T[-1]) - T[-2])
    return T


def cheb_conv_forward(L_scaled, X, Ws, activation: str = "relu"):
    T = chebyshev_basis(L_scaled, X, len(Ws))
    return activate(sum(Tk @ Wk for Tk, Wk in zip(T, Ws)), activation)


def dropout(X, rate: float, training: bool, rng=None):
    """Inverted dropout. Returns ``(output, mask)``; the mask is scaled by 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return X, None
    if rng is None:
        raise ConfigError("training-mode dropout needs an rng")
    mask = (rng.random(X.shape) >= rate) / (1.0 - rate)
    return X * mask, mask


def glorot_uniform(rng, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))
