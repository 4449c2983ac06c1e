"""Seeded random streams and Jitter-point distributions.

Each :class:`RngStream` wraps a PCG64 bit generator seeded from
``SeedSequence(seed, spawn_key=(stream_id,))``. Gaussian variates come from
numpy's ziggurat sampler (``Generator.standard_normal``); uniforms from
``Generator.random``. Stream ids used by the package:

    0   weight initialization
    1   batch shuffling
    2   Jitter points
    3   synthetic data
    >=16  Monte Carlo verification shards
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

STREAM_INIT = 0
STREAM_SHUFFLE = 1
STREAM_JITTER = 2
STREAM_DATA = 3
STREAM_MC = 16

MAX_REJECTIONS = 10_000


class DegenerateTruncationError(RuntimeError):
    """Rejection sampling failed to land inside the truncation interval."""


class RngStream:
    """Deterministic random stream keyed by ``(seed, stream_id)``."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform(self, lo=0.0, hi=1.0, size=None):
        return self.gen.uniform(lo, hi, size)

    def normal(self, mu=0.0, sigma=1.0, size=None):
        return self.gen.normal(mu, sigma, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.gen.permutation(n)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"Uniform needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class TruncGaussian:
    mu: float
    sigma: float
    lo: float
    hi: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("TruncGaussian needs sigma > 0")
        if not self.lo < self.hi:
            raise ValueError(f"TruncGaussian needs lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("Normal needs sigma > 0")


@dataclass(frozen=True)
class JitterSpec:
    """A Jitter-point distribution; every draw is multiplied by ``correction``."""

    kind: Uniform | TruncGaussian | Normal
    correction: float = 1.0

    def __post_init__(self):
        if not self.correction > 0:
            raise ValueError("correction must be > 0")

    def to_dict(self) -> dict:
        d = {"kind": type(self.kind).__name__.lower()}
        d.update(vars(self.kind))
        d["correction"] = self.correction
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "JitterSpec":
        d = dict(d)
        kind = d.pop("kind")
        correction = float(d.pop("correction", 1.0))
        types = {"uniform": Uniform, "truncgaussian": TruncGaussian, "normal": Normal}
        if kind not in types:
            raise ValueError(f"unknown distribution kind {kind!r}")
        return cls(types[kind](**{k: float(v) for k, v in d.items()}), correction)


PRESETS = {
    "jitter_1": JitterSpec(Uniform(0.00, 0.04)),
    "jitter_2": JitterSpec(Uniform(0.01, 0.03)),
    "jitter_3": JitterSpec(TruncGaussian(0.02, 0.01, 0.00, 0.04)),
    "jitter_4": JitterSpec(TruncGaussian(0.02, 0.005, 0.01, 0.03)),
    "jitter_5": JitterSpec(Normal(0.0, 1.0), correction=0.1),
    "jitter_s": JitterSpec(Normal(0.0, 1.0), correction=1.0),
}


def jitter_preset(name: str) -> JitterSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown Jitter preset {name!r}; expected one of {sorted(PRESETS)}") from None


def _trunc_one(k: TruncGaussian, rng: RngStream) -> float:
    for _ in range(MAX_REJECTIONS):
        x = k.mu + k.sigma * rng.gen.standard_normal()
        if k.lo <= x <= k.hi:
            return x
    raise DegenerateTruncationError(
        f"no draw in [{k.lo}, {k.hi}] after {MAX_REJECTIONS} tries (mu={k.mu}, sigma={k.sigma})"
    )


def sample(spec: JitterSpec, rng: RngStream) -> float:
    """Draw one Jitter point."""
    k = spec.kind
    if isinstance(k, Uniform):
        x = k.lo + (k.hi - k.lo) * rng.gen.random()
    elif isinstance(k, TruncGaussian):
        x = _trunc_one(k, rng)
    else:
        x = k.mu + k.sigma * rng.gen.standard_normal()
    return float(x * spec.correction)


def sample_many(spec: JitterSpec, n: int, rng: RngStream) -> np.ndarray:
    """Vectorized draws. Same distribution as :func:`sample`, not the same sequence."""
    k = spec.kind
    if isinstance(k, Uniform):
        x = k.lo + (k.hi - k.lo) * rng.gen.random(n)
    elif isinstance(k, Normal):
        x = k.mu + k.sigma * rng.gen.standard_normal(n)
    else:
        x = np.empty(n)
        todo = np.arange(n)
        tries = 0
        while todo.size:
            tries += 1
            if tries > MAX_REJECTIONS:
                raise DegenerateTruncationError(
                    f"no draw in [{k.lo}, {k.hi}] after {MAX_REJECTIONS} tries"
                )
            cand = k.mu + k.sigma * rng.gen.standard_normal(todo.size)
            ok = (cand >= k.lo) & (cand <= k.hi)
            x[todo[ok]] = cand[ok]
            todo = todo[~ok]
    return x * spec.correction


def effective_flooding_mc(spec: JitterSpec, n: int, rng: RngStream) -> float:
    """Monte Carlo estimate of E[max(alpha, 0)]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return kernels.positive_part_mean(sample_many(spec, n, rng))


def moments_mc(spec: JitterSpec, n: int, rng: RngStream) -> dict:
    x = sample_many(spec, n, rng)
    return {"mean": float(x.mean()), "std": float(x.std())}


def effective_flooding_closed_form(spec: JitterSpec) -> float:
    """E[max(alpha, 0)] in closed form.

    Normal: s*phi(m/s) + m*Phi(m/s) with m, s scaled by the correction.
    Bounded specs with lo >= 0 reduce to the plain mean.
    """
    k, c = spec.kind, spec.correction
    if isinstance(k, Normal):
        m, s = k.mu * c, k.sigma * c
        z = m / s
        return s * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) + m * 0.5 * math.erfc(-z / math.sqrt(2))
    if k.lo < 0:
        raise NotImplementedError("closed form only for non-negative support")
    if isinstance(k, Uniform):
        return c * 0.5 * (k.lo + k.hi)
    a, b = (k.lo - k.mu) / k.sigma, (k.hi - k.mu) / k.sigma
    pdf = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)  # noqa: E731
    cdf = lambda t: 0.5 * math.erfc(-t / math.sqrt(2))  # noqa: E731
    return c * (k.mu + k.sigma * (pdf(a) - pdf(b)) / (cdf(b) - cdf(a)))
