"""Pure-Python (numpy) versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def matmul(a, b):
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch: {a.shape} @ {b.shape}")
    return np.matmul(a, b)


def jitter_transform_many(loss, alpha):
    if loss.shape != alpha.shape:
        raise ValueError("loss and alpha must have equal length")
    return np.where(loss >= alpha, loss, 2.0 * alpha - loss)


def positive_part_mean(x):
    if x.size == 0:
        raise ValueError("empty sample")
    return float(np.maximum(x, 0.0).mean())
