"""Reference evaluations of rational (ARMA) graph filters.

These are dense, exact routines meant for graphs of at most a few hundred
nodes. They serve as oracles for the trainable layers and for inspecting
filter shapes; nothing here is used on the training path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvergenceError, DataError, PoleError, SingularFilterError
from .graph import _check_adjacency

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class ArmaFilterSpec:
    """Numerator ``p_0..p_{K-1}`` and denominator ``q_1..q_K`` coefficients."""

    p_coeffs: tuple[float, ...]
    q_coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p_coeffs", tuple(float(c) for c in self.p_coeffs))
        object.__setattr__(self, "q_coeffs", tuple(float(c) for c in self.q_coeffs))
        if len(self.p_coeffs) < 1 or len(self.p_coeffs) != len(self.q_coeffs):
            raise ConfigError(
                f"need K >= 1 numerator and K denominator coefficients, got "
                f"{len(self.p_coeffs)} and {len(self.q_coeffs)}")

    @classmethod
    def from_lists(cls, p, q=()) -> "ArmaFilterSpec":
        """Zero-pad the shorter list so both have length K."""
        p, q = list(p), list(q)
        K = max(len(p), len(q), 1)
        return cls(tuple(p + [0.0] * (K - len(p))), tuple(q + [0.0] * (K - len(q))))

    @property
    def order(self) -> int:
        return len(self.p_coeffs)

    @property
    def is_polynomial(self) -> bool:
        return all(c == 0.0 for c in self.q_coeffs)


@dataclass(frozen=True)
class LaplacianOperator:
    matrix: np.ndarray
    kind: str = "sym_normalized"


def normalized_laplacian(A) -> LaplacianOperator:
    """I - D^-1/2 A D^-1/2, degrees taken from A alone.

    Isolated nodes keep L_ii = 1 and no off-diagonal entries.
    """
    A = _check_adjacency(A)
    deg = A.sum(axis=1)
    inv = np.zeros_like(deg)
    inv[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    L = np.eye(A.shape[0]) - inv[:, None] * A * inv[None, :]
    return LaplacianOperator(L)


def power_iteration(M, tol: float = 1e-8, max_iter: int = 10_000, seed: int = 0) -> float:
    """Dominant eigenvalue magnitude of a symmetric matrix via Rayleigh quotients."""
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    x = np.random.default_rng(seed).standard_normal(n) + 1.0
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = M @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        lam_new = float(x @ y)
        x = y / norm
        if abs(abs(lam_new) - abs(lam)) <= tol * max(1.0, abs(lam_new)):
            return abs(lam_new)
        lam = lam_new
    return abs(lam)


def scale_laplacian(L, lambda_max: float | None = None) -> np.ndarray:
    """Map the spectrum of L onto [-1, 1]: 2 L / lambda_max - I."""
    L = np.asarray(L, dtype=np.float64)
    if lambda_max is None:
        lambda_max = power_iteration(L)
    if lambda_max <= 0:
        lambda_max = 1.0
    return 2.0 * L / lambda_max - np.eye(L.shape[0])


def _matrix_polynomial(L, coeffs, start_power: int) -> np.ndarray:
    """sum_k coeffs[k] L^(k + start_power), accumulated by repeated products."""
    n = L.shape[0]
    out = np.zeros((n, n))
    P = np.linalg.matrix_power(L, start_power) if start_power else np.eye(n)
    for c in coeffs:
        if c != 0.0:
            out += c * P
        P = P @ L
    return out


def _as_matrix(L):
    return L.matrix if isinstance(L, LaplacianOperator) else np.asarray(L, dtype=np.float64)


def polynomial_filter(L, p_coeffs, H) -> np.ndarray:
    """sum_k p_k L^k H, evaluated Horner-style on H (no matrix powers)."""
    L = _as_matrix(L)
    H = np.asarray(H, dtype=np.float64)
    out = np.zeros_like(H)
    for c in reversed(list(p_coeffs)):
        out = L @ out + c * H
    return out


def arma_exact_filter(L, spec: ArmaFilterSpec, H) -> np.ndarray:
    """Solve (I + sum q_k L^k) X = (sum p_k L^k) H with a dense solver."""
    Lm = _as_matrix(L)
    H = np.asarray(H, dtype=np.float64)
    if H.shape[0] != Lm.shape[0]:
        raise DataError(f"H has {H.shape[0]} rows but L is {Lm.shape[0]}x{Lm.shape[0]}")
    numer = polynomial_filter(Lm, spec.p_coeffs, H)
    if spec.is_polynomial:
        return numer
    denom = np.eye(Lm.shape[0]) + _matrix_polynomial(Lm, spec.q_coeffs, start_power=1)
    cond = np.linalg.cond(denom)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularFilterError(
            f"denominator of {spec} is singular or ill-conditioned (cond={cond:.3g})")
    return np.linalg.solve(denom, numer)


def arma_fixed_point(Atil, w: float, v: float, H, tol: float = 1e-12,
                     max_iter: int = 10_000) -> tuple[np.ndarray, int]:
    """Iterate X <- w Atil X + v H from X = H until the relative step is below ``tol``.

    For |w| < 1 and spectral radius of Atil at most 1 this converges to
    v (I - w Atil)^-1 H.
    """
    Atil = np.asarray(Atil, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    if abs(w) >= 1:
        raise ConfigError(f"|w| must be < 1 for a contraction, got w={w}")
    X = H.copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        X_new = w * (Atil @ X) + v * H
        step = np.linalg.norm(X_new - X)
        scale = np.linalg.norm(X)
        X = X_new
        residual = step / scale if scale > 0 else step
        if residual <= tol or step == 0.0:
            return X, it
    raise ConvergenceError(
        f"fixed point not reached in {max_iter} iterations (residual {residual:.3g})",
        residual=residual, iterations=max_iter)


def fixed_point_closed_form(Atil, w: float, v: float, H) -> np.ndarray:
    """v (I - w Atil)^-1 H by dense solve."""
    Atil = np.asarray(Atil, dtype=np.float64)
    return v * np.linalg.solve(np.eye(Atil.shape[0]) - w * Atil, np.asarray(H, dtype=np.float64))


def frequency_response(spec: ArmaFilterSpec, lam) -> float | np.ndarray:
    """Scalar transfer function (sum p_k lam^k) / (1 + sum q_k lam^k)."""
    lam_arr = np.asarray(lam, dtype=np.float64)
    num = np.polynomial.polynomial.polyval(lam_arr, spec.p_coeffs)
    den = np.polynomial.polynomial.polyval(lam_arr, (1.0, *spec.q_coeffs))
    if np.any(den == 0):
        bad = lam_arr[den == 0] if lam_arr.ndim else lam_arr
        raise PoleError(float(np.ravel(bad)[0]))
    out = num / den
    return float(out) if np.ndim(out) == 0 else out


def spectral_filter(L, spec: ArmaFilterSpec, H) -> np.ndarray:
    """Apply the filter through the eigenbasis of symmetric L."""
    evals, U = np.linalg.eigh(_as_matrix(L))
    g = frequency_response(spec, evals)
    return U @ (np.atleast_1d(g)[:, None] * (U.T @ np.asarray(H, dtype=np.float64)))
