"""Loss wrappers: original, flooding |L-b|+b, and Jitter |L-alpha|+alpha."""
from __future__ import annotations

from dataclasses import dataclass

from . import samplers
from .samplers import JitterSpec, RngStream


def jitter_transform(loss: float, alpha: float) -> float:
    """``|loss - alpha| + alpha``.

    Written as a branch so the ``loss >= alpha`` case returns ``loss`` bit-exactly;
    ``(loss - alpha) + alpha`` can round away from ``loss``.
    """
    if loss >= alpha:
        return loss
    return 2.0 * alpha - loss


def flooding_transform(loss: float, b: float) -> float:
    return jitter_transform(loss, b)


def grad_sign(loss: float, alpha: float) -> float:
    """d(wrapped)/d(loss). Ties at the kink descend (+1)."""
    return 1.0 if loss >= alpha else -1.0


@dataclass(frozen=True)
class Original:
    def label(self) -> str:
        return "original"


@dataclass(frozen=True)
class Flooding:
    level: float = 0.02

    def __post_init__(self):
        if not self.level > 0:
            raise ValueError("flooding level must be > 0")

    def label(self) -> str:
        return f"flooding_{self.level:g}"


@dataclass(frozen=True)
class Jitter:
    spec: JitterSpec
    name: str | None = None

    def label(self) -> str:
        return self.name or "jitter_custom"


LossWrapper = Original | Flooding | Jitter


@dataclass(frozen=True)
class WrappedLoss:
    raw: float
    wrapped: float
    alpha: float | None
    grad_sign: float


def apply(wrapper: LossWrapper, raw_loss: float, rng: RngStream | None = None) -> WrappedLoss:
    """Wrap a batch-mean loss. Jitter consumes exactly one draw from ``rng``."""
    if isinstance(wrapper, Original):
        return WrappedLoss(raw_loss, raw_loss, None, 1.0)
    if isinstance(wrapper, Flooding):
        alpha = wrapper.level
    elif isinstance(wrapper, Jitter):
        if rng is None:
            raise ValueError("Jitter wrapper needs an RngStream")
        alpha = samplers.sample(wrapper.spec, rng)
    else:
        raise TypeError(f"not a loss wrapper: {wrapper!r}")
    return WrappedLoss(raw_loss, jitter_transform(raw_loss, alpha), alpha, grad_sign(raw_loss, alpha))


def wrapper_from_config(value) -> LossWrapper:
    """Parse the ``wrapper`` field of a run config.

    Accepts ``"original"``, ``"flooding"`` (level 0.02), a preset name such as
    ``"jitter_5"``, ``{"flooding": 0.05}``, or an inline distribution object
    like ``{"kind": "uniform", "lo": 0.0, "hi": 0.04, "correction": 1.0}``.
    """
    if isinstance(value, str):
        if value == "original":
            return Original()
        if value == "flooding":
            return Flooding(0.02)
        return Jitter(samplers.jitter_preset(value), name=value)
    if isinstance(value, dict):
        if set(value) == {"flooding"}:
            return Flooding(float(value["flooding"]))
        value = dict(value)
        name = value.pop("name", None)
        return Jitter(JitterSpec.from_dict(value), name=name)
    raise ValueError(f"cannot interpret wrapper {value!r}")


def wrapper_to_config(wrapper: LossWrapper):
    if isinstance(wrapper, Original):
        return "original"
    if isinstance(wrapper, Flooding):
        return {"flooding": wrapper.level}
    if wrapper.name in samplers.PRESETS and samplers.PRESETS[wrapper.name] == wrapper.spec:
        return wrapper.name
    d = wrapper.spec.to_dict()
    if wrapper.name:
        d["name"] = wrapper.name
    return d
