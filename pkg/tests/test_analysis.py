import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jitterloss import analysis, samplers
from jitterloss.analysis import CurveSamples
from jitterloss.losses import jitter_transform
from jitterloss.samplers import JitterSpec, RngStream, Uniform
from jitterloss.trainer import EpochMetrics, RunRecord

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def test_effective_flooding_closed_forms():
    r = analysis.verify_theorem1(samplers.jitter_preset("jitter_s"), 100_000, 1e-2, RngStream(0, 16))
    assert r["closed_form"] == pytest.approx(INV_SQRT_2PI, abs=1e-15) and r["pass"]
    r = analysis.verify_theorem1(JitterSpec(Uniform(0.01, 0.03)), 100_000, 1e-4, RngStream(0, 16))
    assert r["closed_form"] == pytest.approx(0.02, abs=1e-15) and r["pass"]
    r = analysis.verify_theorem1(samplers.jitter_preset("jitter_5"), 1_000_000, 2e-4, RngStream(0, 17))
    assert r["closed_form"] == pytest.approx(0.1 * INV_SQRT_2PI, abs=1e-15) and r["pass"]
    with pytest.raises(ValueError):
        analysis.verify_theorem1(samplers.jitter_preset("jitter_s"), 10, 1.0, RngStream(0, 16))


def test_effective_flooding_mc_rate():
    spec = samplers.jitter_preset("jitter_s")
    n = 100_000
    se = math.sqrt((0.5 - 1 / (2 * math.pi)) / (4 * n))
    r = analysis.verify_theorem1(spec, 4 * n, 1.0, RngStream(1, 16))
    assert abs(r["estimate"] - INV_SQRT_2PI) < 3 * se


def test_jensen_examples():
    r = analysis.jensen_check([(0.01, 0.02), (0.03, 0.02)])
    assert r["lhs"] == pytest.approx(0.02, abs=1e-15)
    assert r["rhs"] == pytest.approx(0.03, abs=1e-15)
    assert r["pass"]
    r = analysis.jensen_check([(0.013, 0.7)])
    assert r["lhs"] == r["rhs"]
    r = analysis.jensen_check([(0.04, 0.01)] * 5)
    assert r["lhs"] == pytest.approx(r["rhs"], abs=1e-16)
    with pytest.raises(ValueError):
        analysis.jensen_check([])


@settings(max_examples=200)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(-10, 10)), min_size=1, max_size=30))
def test_jensen_always_holds(pairs):
    assert analysis.jensen_check(pairs)["pass"]


def test_mse_experiment_strict_case():
    rep = analysis.mse_experiment(0.5, 0.2, 0.3, 200_000, RngStream(0, 16))
    assert rep.n_condition_a > 0 and rep.n_condition_a + rep.n_condition_b <= rep.n_total
    assert rep.mse_wrapped_a < rep.mse_raw_a
    assert rep.max_abs_diff_b == 0.0


def test_mse_experiment_alpha_zero():
    rep = analysis.mse_experiment(0.5, 0.2, 0.0, 100_000, RngStream(0, 16))
    assert rep.n_condition_b == rep.n_total
    assert rep.max_abs_diff_b == 0.0 and rep.condition_a_empty


def test_mse_experiment_flags_alpha_above_risk():
    rep = analysis.mse_experiment(0.5, 0.2, 0.6, 100_000, RngStream(0, 16))
    assert rep.condition_a_empty and rep.n_condition_a == 0


def test_mse_single_realization_arithmetic():
    wrapped = jitter_transform(0.1, 0.3)
    assert wrapped == pytest.approx(0.5, abs=1e-15)
    assert abs(wrapped - 0.5) < abs(0.1 - 0.5)


@pytest.mark.parametrize("L,std,alpha", [(0.5, 0.2, 0.3), (0.1, 0.05, 0.02), (1.0, 1.0, 0.9)])
def test_mse_strict_for_alpha_inside(L, std, alpha):
    rep = analysis.mse_experiment(L, std, alpha, 100_000, RngStream(2, 16))
    assert rep.mse_wrapped_a < rep.mse_raw_a and rep.max_abs_diff_b == 0.0


def _parabola(n=2001):
    x = np.linspace(-1.0, 1.0, n)
    return CurveSamples(x, x * x)


def test_flip_parabola():
    c = _parabola()
    f = analysis.flip_curve(c, 0.25)
    idx = analysis.local_minima(f)
    assert len(idx) == 2
    step = c.xs[1] - c.xs[0]
    assert abs(c.xs[idx[0]] + 0.5) <= step and abs(c.xs[idx[1]] - 0.5) <= step
    assert abs(f.ys.min() - 0.25) <= 1e-12
    assert analysis.count_local_minima(c) == 1


def test_flip_identity_and_full_reflection():
    c = _parabola(101)
    np.testing.assert_array_equal(analysis.flip_curve(c, 0.0).ys, c.ys)
    np.testing.assert_allclose(analysis.flip_curve(c, 2.0).ys, 4.0 - c.ys, rtol=0, atol=1e-15)


def test_constant_curve_single_plateau():
    assert analysis.count_local_minima(CurveSamples(np.arange(10.0), np.ones(10))) == 1


def test_plateau_merging():
    ys = np.array([3.0, 1.0, 1.0, 1.0, 2.0, 0.5, 0.5, 4.0])
    assert analysis.count_local_minima(CurveSamples(np.arange(8.0), ys)) == 2
    jitter = ys + np.array([0, 0, 1e-9, -1e-9, 0, 1e-9, 0, 0])
    assert analysis.count_local_minima(CurveSamples(np.arange(8.0), jitter), tol=1e-6) == 2


def test_curve_validation():
    with pytest.raises(ValueError):
        CurveSamples([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        analysis.count_local_minima(CurveSamples([0.0, 1.0], [1.0, 2.0]))


@given(st.floats(0.01, 0.99))
def test_flip_convex_gives_two_minima(level):
    x = np.linspace(-1.0, 1.0, 2001)
    c = CurveSamples(x, x * x + 0.0)
    f = analysis.flip_curve(c, level)
    assert (f.ys >= c.ys).all()
    assert analysis.count_local_minima(f) == 2


def _ddd():
    return np.concatenate([np.linspace(1.0, 0.4, 20), np.linspace(0.4, 0.8, 20)[1:], np.linspace(0.8, 0.3, 20)[1:]])


def test_double_descent_fixtures():
    r = analysis.detect_double_descent(_ddd(), window=5)
    assert r.double_descent and r.phases == ["down", "up", "down"]
    r = analysis.detect_double_descent(np.linspace(1.0, 0.1, 40), window=5)
    assert r.phases == ["down"] and not r.double_descent
    r = analysis.detect_double_descent(np.full(40, 0.3), window=5)
    assert r.phases == [] and not r.double_descent


def test_double_descent_ignores_small_wiggles():
    base = np.linspace(1.0, 0.1, 60)
    wiggle = 0.001 * np.sin(np.arange(60))
    assert analysis.detect_double_descent(base + wiggle, window=5).phases == ["down"]


def test_double_descent_too_short():
    with pytest.raises(ValueError):
        analysis.detect_double_descent(np.ones(14), window=5)


def test_phases_alternate():
    r = np.random.default_rng(0)
    walk = np.cumsum(r.normal(size=300))
    ph = analysis.detect_double_descent(walk, window=3).phases
    assert all(a != b for a, b in zip(ph, ph[1:]))


def _rec(wrapper, seed, acc, loss=0.01):
    cfg = {"dataset": {"kind": "synthetic"}, "model": {"hidden": [4]}, "wrapper": wrapper, "seed": seed}
    rec = RunRecord(f"r{seed}", cfg, seed)
    rec.epochs.append(EpochMetrics(0, loss, loss, [], [], 0.1, acc, None))
    return rec


def test_compare_runs_arithmetic():
    rows = analysis.compare_runs([_rec("original", 0, 0.91)])
    assert rows[0].best_acc == rows[0].mean_acc == 0.91
    rows = analysis.compare_runs([_rec("jitter_5", 0, 0.91), _rec("jitter_5", 1, 0.93)])
    assert rows[0].wrapper == "jitter_5" and rows[0].seeds == 2
    assert rows[0].best_acc == 0.93 and rows[0].mean_acc == pytest.approx(0.92, abs=1e-15)


def test_compare_runs_rejects_mixed_configs():
    a, b = _rec("original", 0, 0.9), _rec("original", 1, 0.9)
    b.config["model"] = {"hidden": [8]}
    with pytest.raises(analysis.InconsistentRunsError):
        analysis.compare_runs([a, b])


GOLDEN_CSV = """wrapper,seeds,best_acc,mean_acc,final_raw_train_loss
original,1,0.900000,0.900000,0.5
flooding_0.02,2,0.950000,0.925000,0.02
"""


def test_report_golden():
    recs = [_rec("original", 0, 0.9, 0.5), _rec({"flooding": 0.02}, 0, 0.9, 0.02), _rec({"flooding": 0.02}, 1, 0.95, 0.02)]
    rows = analysis.compare_runs(recs)
    assert analysis.report_csv(rows) == GOLDEN_CSV
    text = analysis.report_text(rows, ["jitter_s seed=3: boom"])
    assert text.splitlines()[0].split() == ["wrapper", "seeds", "best_acc", "mean_acc", "final_raw_train_loss"]
    assert "95.00%" in text and text.rstrip().endswith("FAILED jitter_s seed=3: boom")
