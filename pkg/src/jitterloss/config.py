"""JSON run and sweep configuration.

A run config::

    {
      "dataset": {"kind": "synthetic", "n_train": 1000, "n_test": 1000, "d": 20,
                  "num_classes": 4, "class_separation": 3.0,
                  "label_noise_rate": 0.2, "data_seed": 0},
      "model": {"hidden": [64, 32]},
      "wrapper": "flooding",
      "optimizer": {"learning_rate": 0.001, "momentum": 0.95,
                    "weight_decay": 0.0005, "batch_size": 128},
      "epochs": 300,
      "seed": 0,
      "output_dir": "runs"
    }

An IDX dataset instead names ``train_images``, ``train_labels``, ``test_images``
and ``test_labels`` (plus optional ``num_classes``). Either kind takes an
optional ``subset_n`` (training rows) and ``test_subset_n``. ``data_seed``
defaults to the run seed.

A sweep config is a run config with ``seeds`` and ``wrappers`` lists in place
of ``seed`` and ``wrapper``, and an optional ``workers`` count.
"""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

from .losses import wrapper_from_config, wrapper_to_config
from .trainer import OptimizerConfig

DEFAULT_WRAPPERS = [
    "original", "flooding", "jitter_1", "jitter_2", "jitter_3", "jitter_4", "jitter_5", "jitter_s",
]

SYNTHETIC_DEFAULTS = {
    "kind": "synthetic", "n_train": 1000, "n_test": 1000, "d": 20, "num_classes": 4,
    "class_separation": 3.0, "label_noise_rate": 0.2,
}
IDX_KEYS = {"train_images", "train_labels", "test_images", "test_labels"}

# desk-scale eight-method grid
DEFAULT_SWEEP = {
    "dataset": dict(SYNTHETIC_DEFAULTS, data_seed=0),
    "model": {"hidden": [64, 32]},
    "wrappers": DEFAULT_WRAPPERS,
    "optimizer": {"learning_rate": 0.001, "momentum": 0.95, "weight_decay": 0.0005, "batch_size": 8},
    "epochs": 300,
    "seeds": [0, 1, 2, 3, 4],
    "output_dir": "runs/sweep",
}


class ConfigError(ValueError):
    pass


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = set(obj) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _int(v, where, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{where}: must be >= {lo}")
    return v


def _num(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    return float(v)


def parse_json(text: str, source: str = "<config>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None


def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    return parse_json(text, str(path))


def _dataset(d):
    if not isinstance(d, dict):
        raise ConfigError("dataset: expected an object")
    kind = d.get("kind", "synthetic")
    common = {"kind", "subset_n", "test_subset_n", "data_seed"}
    if kind == "synthetic":
        _check_keys(d, common | set(SYNTHETIC_DEFAULTS), "dataset")
        out = dict(SYNTHETIC_DEFAULTS, **d)
        for k in ("n_train", "n_test", "d", "num_classes"):
            _int(out[k], f"dataset.{k}", 1)
        out["class_separation"] = _num(out["class_separation"], "dataset.class_separation")
        rate = _num(out["label_noise_rate"], "dataset.label_noise_rate")
        if not 0 <= rate < 1:
            raise ConfigError("dataset.label_noise_rate: must lie in [0, 1)")
        out["label_noise_rate"] = rate
    elif kind == "idx":
        _check_keys(d, common | IDX_KEYS | {"num_classes"}, "dataset")
        missing = IDX_KEYS - set(d)
        if missing:
            raise ConfigError(f"dataset: idx needs {sorted(missing)}")
        out = dict({"num_classes": 10}, **d)
        _int(out["num_classes"], "dataset.num_classes", 2)
    else:
        raise ConfigError(f"dataset.kind: unknown kind {kind!r}")
    for k in ("subset_n", "test_subset_n"):
        if out.get(k) is not None:
            _int(out[k], f"dataset.{k}", 1)
    if "data_seed" in out:
        _int(out["data_seed"], "dataset.data_seed", 0)
    return out


def _model(m):
    _check_keys(m, {"hidden"}, "model")
    hidden = m.get("hidden", [64, 32])
    if not isinstance(hidden, list):
        raise ConfigError("model.hidden: expected a list of layer widths")
    return {"hidden": [_int(h, "model.hidden[]", 1) for h in hidden]}


def _optimizer(o):
    _check_keys(o, OptimizerConfig.__dataclass_fields__, "optimizer")
    merged = dict(vars(OptimizerConfig()), **o)
    try:
        opt = OptimizerConfig(**merged)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"optimizer: {e}") from None
    return vars(opt).copy()


def _wrapper(w, where="wrapper"):
    try:
        return wrapper_to_config(wrapper_from_config(w))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from None


_COMMON = {"dataset", "model", "optimizer", "epochs", "output_dir"}


def _common(raw, out):
    out["dataset"] = _dataset(raw.get("dataset", {}))
    out["model"] = _model(raw.get("model", {}))
    out["optimizer"] = _optimizer(raw.get("optimizer", {}))
    out["epochs"] = _int(raw.get("epochs", 300), "epochs", 0)
    out["output_dir"] = str(raw.get("output_dir", "runs"))


def validate_run(raw: dict) -> dict:
    """Fill defaults and normalize a run config; raises :class:`ConfigError`."""
    _check_keys(raw, _COMMON | {"wrapper", "seed"}, "config")
    out = {}
    _common(raw, out)
    out["wrapper"] = _wrapper(raw.get("wrapper", "original"))
    out["seed"] = _int(raw.get("seed", 0), "seed", 0)
    return out


def validate_sweep(raw: dict) -> dict:
    _check_keys(raw, _COMMON | {"wrappers", "seeds", "workers"}, "config")
    out = {}
    _common(raw, out)
    wrappers = raw.get("wrappers", DEFAULT_WRAPPERS)
    seeds = raw.get("seeds", [0, 1, 2, 3, 4])
    if not isinstance(wrappers, list) or not wrappers:
        raise ConfigError("wrappers: expected a non-empty list")
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("seeds: expected a non-empty list")
    out["wrappers"] = [_wrapper(w, f"wrappers[{i}]") for i, w in enumerate(wrappers)]
    out["seeds"] = [_int(s, "seeds[]", 0) for s in seeds]
    if "workers" in raw:
        out["workers"] = _int(raw["workers"], "workers", 1)
    return out


def expand_sweep(sweep: dict) -> list[dict]:
    """Run configs for the wrappers x seeds product, wrapper-major."""
    base = {k: copy.deepcopy(v) for k, v in sweep.items() if k not in ("wrappers", "seeds", "workers")}
    return [dict(copy.deepcopy(base), wrapper=w, seed=s) for w in sweep["wrappers"] for s in sweep["seeds"]]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def run_id(config: dict) -> str:
    """Digest of the normalized config, ignoring where outputs go."""
    body = {k: v for k, v in config.items() if k != "output_dir"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()[:16]
