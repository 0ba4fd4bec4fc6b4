"""First-order graph convolution over the resource-channel graph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from meterguard.errors import AsymmetricAdjacency, ShapeMismatch


def normalized_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric normalization D^-1/2 (A + I) D^-1/2, D the degree of A + I."""
    a = np.asarray(adjacency, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"adjacency must be square, got {a.shape}")
    if not np.array_equal(a, a.T):
        raise AsymmetricAdjacency("adjacency matrix is not symmetric")
    if np.any(a < 0):
        raise ValueError("adjacency weights must be non-negative")
    a_hat = a + np.eye(a.shape[0])
    d = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return d[:, None] * a_hat * d[None, :]


def resource_graph(n: int = 5) -> np.ndarray:
    """Fully connected unit-weight graph without self loops."""
    return np.ones((n, n)) - np.eye(n)


@dataclass
class GcnParams:
    adjacency: np.ndarray  # (n, n), fixed
    weight: np.ndarray  # (in, out), learned

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=float)
        self.operator = normalized_adjacency(self.adjacency)


def gcn_layer(params: GcnParams, H: np.ndarray) -> np.ndarray:
    """ReLU(A_norm @ H @ W) for node features ``H`` of shape (..., n, in)."""
    H = np.asarray(H, dtype=float)
    n = params.operator.shape[0]
    if H.ndim < 2 or H.shape[-2] != n or H.shape[-1] != params.weight.shape[0]:
        raise ShapeMismatch(
            f"node features {H.shape} incompatible with {n} nodes and weight {params.weight.shape}"
        )
    return np.maximum(params.operator @ H @ params.weight, 0.0)


def gcn_forward(operator: np.ndarray, weight: np.ndarray, H: np.ndarray):
    """Batched forward keeping what the backward pass needs."""
    propagated = operator @ H  # (..., n, in)
    pre = propagated @ weight
    return np.maximum(pre, 0.0), (propagated, pre)


def gcn_backward(weight: np.ndarray, cache, d_out: np.ndarray):
    """Gradient w.r.t. the weight; inputs are data so their gradient is not needed."""
    propagated, pre = cache
    d_pre = d_out * (pre > 0)
    n_in = propagated.shape[-1]
    return propagated.reshape(-1, n_in).T @ d_pre.reshape(-1, weight.shape[1])
