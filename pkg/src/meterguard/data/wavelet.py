"""Orthonormal Haar DWT with soft-threshold denoising."""

from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)


def haar_dwt(x: np.ndarray, levels: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Return (approximation, [detail_1, ..., detail_levels]); finest level first."""
    a = np.asarray(x, dtype=float)
    details = []
    for _ in range(levels):
        if len(a) % 2:
            raise ValueError("length must be divisible by 2**levels")
        even, odd = a[0::2], a[1::2]
        details.append((even - odd) / SQRT2)
        a = (even + odd) / SQRT2
    return a, details


def haar_idwt(approx: np.ndarray, details: list[np.ndarray]) -> np.ndarray:
    a = np.asarray(approx, dtype=float)
    for d in reversed(details):
        out = np.empty(2 * len(a))
        out[0::2] = (a + d) / SQRT2
        out[1::2] = (a - d) / SQRT2
        a = out
    return a


def soft_threshold(c: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(c) * np.maximum(np.abs(c) - threshold, 0.0)


def _pad(values: np.ndarray, levels: int) -> np.ndarray:
    block = 2**levels
    n = len(values)
    target = max(block, -(-n // block) * block)
    return np.pad(values, (0, target - n), mode="edge")


def default_threshold(values: np.ndarray, levels: int = 2, fraction: float = 0.1) -> float:
    """``fraction`` times the spread of the finest-level detail coefficients."""
    _, details = haar_dwt(_pad(np.asarray(values, float), levels), levels)
    return fraction * float(np.std(details[0]))


def dwt_denoise(values, levels: int = 2, threshold: float | None = None) -> np.ndarray:
    """Haar-decompose, soft-threshold every detail level, reconstruct.

    Short or odd-length inputs are padded by edge replication and cropped back.
    ``threshold=None`` uses :func:`default_threshold`.
    """
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        return x.copy()
    if threshold is None:
        threshold = default_threshold(x, levels)
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    approx, details = haar_dwt(_pad(x, levels), levels)
    details = [soft_threshold(d, threshold) for d in details]
    return haar_idwt(approx, details)[: len(x)]
