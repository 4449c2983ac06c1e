"""Flooding and Jitter loss wrappers, a small MLP trainer, and Monte Carlo checks."""
from .kernels import BACKEND
from .losses import Flooding, Jitter, Original, flooding_transform, grad_sign, jitter_transform
from .samplers import JitterSpec, RngStream, jitter_preset

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Flooding", "Jitter", "JitterSpec", "Original", "RngStream",
    "flooding_transform", "grad_sign", "jitter_preset", "jitter_transform",
]
