"""Monte Carlo checks of the Jitter math, landscape flipping, and run reports."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, samplers
from .losses import wrapper_from_config
from .samplers import JitterSpec, RngStream

REPORT_HEADER = ["wrapper", "seeds", "best_acc", "mean_acc", "final_raw_train_loss"]


def verify_theorem1(spec: JitterSpec, n: int, tol: float, rng: RngStream) -> dict:
    """MC estimate of E[max(alpha, 0)] against its closed form."""
    if n < 10_000:
        raise ValueError("n must be >= 1e4")
    est = samplers.effective_flooding_mc(spec, n, rng)
    exact = samplers.effective_flooding_closed_form(spec)
    return {"estimate": est, "closed_form": exact, "tol": tol, "pass": abs(est - exact) < tol}


def jensen_check(per_batch, tol: float = 1e-12) -> dict:
    """Compare |mean R - mean a| + mean a against mean(|R_m - a_m| + a_m).

    A missing alpha (original loss) counts as 0, where the wrap is the identity.
    """
    if not per_batch:
        raise ValueError("per_batch must be non-empty")
    r = np.array([p[0] for p in per_batch], dtype=np.float64)
    a = np.array([0.0 if p[1] is None else p[1] for p in per_batch], dtype=np.float64)
    rhs = float(np.mean(np.abs(r - a) + a))
    rbar, abar = float(r.mean()), float(a.mean())
    lhs = abs(rbar - abar) + abar
    return {"lhs": lhs, "rhs": rhs, "pass": lhs <= rhs + tol}


@dataclass
class MseReport:
    n_total: int
    n_condition_a: int
    n_condition_b: int
    mse_raw_a: float
    mse_wrapped_a: float
    max_abs_diff_b: float
    condition_a_empty: bool = False


def mse_experiment(true_risk: float, estimator_std: float, alpha: float, n: int, rng: RngStream) -> MseReport:
    """Gaussian risk estimates around ``true_risk``, wrapped at a fixed ``alpha``.

    Condition a: est < alpha < true_risk. Condition b: alpha <= est.
    """
    if not true_risk > 0:
        raise ValueError("true_risk must be > 0")
    if n < 100_000:
        raise ValueError("n must be >= 1e5")
    est = np.maximum(rng.normal(true_risk, estimator_std, size=n), 0.0)
    wrapped = kernels.jitter_transform_many(est, np.full(n, alpha))
    err_raw = est - true_risk
    err_wrapped = wrapped - true_risk
    cond_a = (est < alpha) & (alpha < true_risk)
    cond_b = alpha <= est
    na, nb = int(cond_a.sum()), int(cond_b.sum())
    if na:
        mse_raw_a = float(np.mean(err_raw[cond_a] ** 2))
        mse_wrapped_a = float(np.mean(err_wrapped[cond_a] ** 2))
    else:
        mse_raw_a = mse_wrapped_a = math.nan
    diff_b = float(np.max(np.abs(err_wrapped[cond_b] - err_raw[cond_b]), initial=0.0))
    return MseReport(n, na, nb, mse_raw_a, mse_wrapped_a, diff_b, condition_a_empty=na == 0)


@dataclass
class CurveSamples:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=np.float64)
        self.ys = np.asarray(self.ys, dtype=np.float64)
        if self.xs.shape != self.ys.shape or self.xs.ndim != 1:
            raise ValueError("xs and ys must be 1-D and of equal length")
        if np.any(np.diff(self.xs) <= 0):
            raise ValueError("xs must be strictly increasing")


def flip_curve(curve: CurveSamples, level: float) -> CurveSamples:
    ys = kernels.jitter_transform_many(curve.ys, np.full(curve.ys.shape, float(level)))
    return CurveSamples(curve.xs.copy(), ys)


def local_minima(curve: CurveSamples, tol: float = 0.0) -> list[int]:
    """Indices of local minima; a plateau (values within ``tol``) reports its middle index.

    A plateau touching an endpoint counts only if it spans the whole curve.
    """
    ys = curve.ys
    n = ys.size
    if n < 3:
        raise ValueError("need at least 3 samples")
    # collapse runs of near-equal values
    starts = [0]
    for i in range(1, n):
        if abs(ys[i] - ys[starts[-1]]) > tol:
            starts.append(i)
    ends = starts[1:] + [n]
    if len(starts) == 1:
        return [n // 2]
    out = []
    for k in range(1, len(starts) - 1):
        v = ys[starts[k]]
        if v < ys[starts[k - 1]] and v < ys[starts[k + 1]]:
            out.append((starts[k] + ends[k] - 1) // 2)
    return out


def count_local_minima(curve: CurveSamples, tol: float = 0.0) -> int:
    return len(local_minima(curve, tol))


@dataclass
class DescentPhases:
    smoothed: np.ndarray
    turning_points: list = field(default_factory=list)
    phases: list = field(default_factory=list)  # "down" / "up"
    double_descent: bool = False


def moving_average(series, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at the edges."""
    y = np.asarray(series, dtype=np.float64)
    h = window // 2
    c = np.concatenate([[0.0], np.cumsum(y)])
    out = np.empty_like(y)
    n = y.size
    for i in range(n):
        r = min(h, i, n - 1 - i)
        out[i] = (c[i + r + 1] - c[i - r]) / (2 * r + 1)
    return out


def detect_double_descent(test_losses, window: int = 5, min_drop: float | None = None) -> DescentPhases:
    """Split a smoothed loss series into alternating down/up phases.

    A direction change is kept only once the move from the last extreme reaches
    ``min_drop`` (default: 2% of the raw series range). The flag is set when the
    phases contain down, up, down in sequence.
    """
    y = np.asarray(test_losses, dtype=np.float64)
    if window < 1 or y.size < 3 * window:
        raise ValueError(f"series of length {y.size} is too short for window {window}")
    s = moving_average(y, window)
    if min_drop is None:
        min_drop = 0.02 * float(y.max() - y.min())
    # smoothing round-off must not form a phase
    thresh = max(min_drop, 1e-12 * max(1.0, float(np.abs(y).max())))

    extremes = [0]
    direction = 0  # +1 rising, -1 falling, 0 undecided
    cand = 0
    for i in range(1, s.size):
        if direction == 0:
            if abs(s[i] - s[0]) >= thresh:
                direction = 1 if s[i] > s[0] else -1
                cand = i
        elif direction * (s[i] - s[cand]) > 0:
            cand = i
        elif direction * (s[cand] - s[i]) >= thresh:
            extremes.append(cand)
            direction = -direction
            cand = i
    if direction:
        extremes.append(cand)
    phases = ["up" if s[b] > s[a] else "down" for a, b in zip(extremes, extremes[1:])]
    dd = any(phases[i:i + 3] == ["down", "up", "down"] for i in range(len(phases)))
    return DescentPhases(s, extremes[1:-1], phases, dd)


@dataclass
class ReportRow:
    wrapper: str
    seeds: int
    best_acc: float
    mean_acc: float
    final_raw_train_loss: float


class InconsistentRunsError(ValueError):
    pass


def _shared_config(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in ("seed", "wrapper", "output_dir")}


def _method_order(label: str):
    """Original, flooding levels, presets in table order, then the rest by name."""
    if label == "original":
        return (0, label)
    if label.startswith("flooding"):
        return (1, label)
    if label in samplers.PRESETS:
        return (2, list(samplers.PRESETS).index(label))
    return (3, label)


def compare_runs(records) -> list[ReportRow]:
    """Best and mean final-epoch test accuracy per wrapper, across seeds.

    ``final_raw_train_loss`` is the seed mean of the last epoch's raw train loss.
    """
    if not records:
        return []
    base = _shared_config(records[0].config)
    groups: dict[str, list] = {}
    for rec in records:
        if _shared_config(rec.config) != base:
            raise InconsistentRunsError(f"run {rec.run_id} does not share the dataset/model config")
        groups.setdefault(wrapper_from_config(rec.config["wrapper"]).label(), []).append(rec)
    rows = []
    for label, recs in sorted(groups.items(), key=lambda kv: _method_order(kv[0])):
        done = [r for r in recs if r.epochs]
        accs = [r.epochs[-1].test_accuracy for r in done]
        losses = [r.epochs[-1].raw_train_loss for r in done]
        rows.append(ReportRow(
            label, len(done),
            max(accs) if accs else math.nan,
            float(np.mean(accs)) if accs else math.nan,
            float(np.mean(losses)) if losses else math.nan,
        ))
    return rows


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in rows:
        w.writerow([r.wrapper, r.seeds, f"{r.best_acc:.6f}", f"{r.mean_acc:.6f}", f"{r.final_raw_train_loss:.9g}"])
    return buf.getvalue()


def report_text(rows, failures=()) -> str:
    width = max([len("wrapper")] + [len(r.wrapper) for r in rows])
    lines = [f"{'wrapper':<{width}}  seeds  best_acc  mean_acc  final_raw_train_loss"]
    for r in rows:
        lines.append(
            f"{r.wrapper:<{width}}  {r.seeds:>5}  {100 * r.best_acc:>7.2f}%  {100 * r.mean_acc:>7.2f}%"
            f"  {r.final_raw_train_loss:>20.6g}"
        )
    for f in failures:
        lines.append(f"FAILED {f}")
    return "\n".join(lines) + "\n"
