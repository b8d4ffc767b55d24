"""Subject graph construction and the self-loop normalized propagation operator."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

SIMILARITIES = ("cosine", "dot")


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise DataError(f"length mismatch: {u.size} vs {v.size}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        warnings.warn("cosine similarity with an all-zero vector is taken as 0", stacklevel=2)
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def similarity_matrix(X, kind: str = "cosine") -> np.ndarray:
    """Pairwise similarities between rows of ``X``. Zero rows get similarity 0."""
    X = np.asarray(X, dtype=np.float64)
    if kind == "dot":
        return X @ X.T
    if kind != "cosine":
        raise ConfigError(f"similarity must be one of {SIMILARITIES}, got {kind!r}")
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        warnings.warn(f"{int(np.sum(norms == 0))} all-zero feature rows; "
                      "their cosine similarities are taken as 0", stacklevel=2)
    safe = np.where(norms > 0, norms, 1.0)
    U = X / safe[:, None]
    S = U @ U.T
    return np.clip(S, -1.0, 1.0)


def _check_adjacency(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataError(f"adjacency must be square, got shape {A.shape}")
    if not np.array_equal(A, A.T):
        raise DataError("adjacency is not symmetric")
    if np.any(np.diag(A) != 0):
        raise DataError("adjacency has a nonzero diagonal")
    return A


def normalize_adjacency(A) -> np.ndarray:
    """D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I."""
    A = _check_adjacency(A)
    A_hat = A + np.eye(A.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(A_hat.sum(axis=1))
    return d_inv_sqrt[:, None] * A_hat * d_inv_sqrt[None, :]


@dataclass
class SubjectGraph:
    adjacency: np.ndarray
    alpha: float | None = None
    similarity: str = "cosine"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.adjacency = _check_adjacency(self.adjacency)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degree(self) -> np.ndarray:
        """Degrees of A + I (each node counts its own self-loop)."""
        return (self.adjacency.sum(axis=1) + 1).astype(np.int64)

    @property
    def normalized(self) -> np.ndarray:
        if "normalized" not in self._cache:
            self._cache["normalized"] = normalize_adjacency(self.adjacency)
        return self._cache["normalized"]

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.sum() // 2)

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(i.tolist(), j.tolist()))

    def scaled_laplacian(self) -> np.ndarray:
        """Chebyshev-domain operator 2 L / lambda_max - I."""
        if "scaled_laplacian" not in self._cache:
            from .spectral import normalized_laplacian, scale_laplacian
            self._cache["scaled_laplacian"] = scale_laplacian(
                normalized_laplacian(self.adjacency).matrix)
        return self._cache["scaled_laplacian"]

    def permuted(self, perm) -> "SubjectGraph":
        perm = np.asarray(perm)
        return SubjectGraph(self.adjacency[np.ix_(perm, perm)], self.alpha, self.similarity)


def build_adjacency(H, alpha: float, similarity: str = "cosine") -> SubjectGraph:
    """Threshold pairwise similarity of feature rows: edge iff sim > alpha.

    ``H`` may be a FeatureMatrix or a plain array. Disconnected graphs are
    allowed; self-loops in the normalized operator keep them well defined.
    """
    X = getattr(H, "data", H)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("need at least two feature rows to build a graph")
    if similarity not in SIMILARITIES:
        raise ConfigError(f"similarity must be one of {SIMILARITIES}, got {similarity!r}")
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"alpha must be in [0, 1), got {alpha}")
    S = similarity_matrix(X, similarity)
    # the matrix product is symmetric only up to rounding
    S = 0.5 * (S + S.T)
    A = (S > alpha).astype(np.float64)
    np.fill_diagonal(A, 0.0)
    return SubjectGraph(A, alpha=alpha, similarity=similarity)


def write_edge_list(graph: SubjectGraph, path):
    lines = [f"# n={graph.n} alpha={graph.alpha!r} similarity={graph.similarity}"]
    lines += [f"{i} {j}" for i, j in graph.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> SubjectGraph:
    n, alpha, similarity = None, None, "cosine"
    edges = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "n":
                    n = int(val)
                elif key == "alpha":
                    alpha = None if val == "None" else float(val)
                elif key == "similarity":
                    similarity = val
            continue
        i, j = (int(t) for t in line.split())
        edges.append((i, j))
    if n is None:
        raise DataError(f"{path}: missing '# n=<n>' sidecar line")
    A = np.zeros((n, n))
    for i, j in edges:
        A[i, j] = A[j, i] = 1.0
    return SubjectGraph(A, alpha=alpha, similarity=similarity)
