from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dspcorr.metrics import (TABLE_COLUMNS, MetricsReport, average_reports, evaluate, interval_metrics, mae_steady,
                             mae_transient, response_lag, rmse, settling_lag, write_reports_csv)

T = 1000


def step_truth(b=250, before=0.2, after=0.6, n=T):
    truth = np.full(n, before)
    truth[b:] = after          # 1-based times b+1.. are post-break
    return truth


def test_rmse_examples():
    truth = np.linspace(0, 1, T)
    assert rmse(truth, truth, (60, T)) == 0.0
    assert rmse(truth + 0.1, truth, (60, T)) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ValueError):
        rmse(truth, truth, (500, 400))


def test_interval_examples():
    truth = np.full(T, 0.4)
    assert interval_metrics(np.zeros(T), np.ones(T), truth, (60, T)) == (1.0, 1.0)
    assert interval_metrics(truth, truth, truth, (60, T)) == (0.0, 1.0)
    with pytest.raises(ValueError):
        interval_metrics(np.ones(T), np.zeros(T), truth, (60, T))


def test_mae_window_examples():
    truth = step_truth()
    assert mae_steady(truth, truth, [250]) == 0.0
    assert mae_transient(truth, truth, [250]) == 0.0
    est = truth.copy()
    est[270:320] += 0.2       # times 271..320
    assert mae_steady(est, truth, [250]) == pytest.approx(0.2, abs=1e-12)
    est = truth.copy()
    est[250:300] += 0.3       # times 251..300
    assert mae_transient(est, truth, [250]) == pytest.approx(0.3, abs=1e-12)


def test_response_lag_examples():
    truth = step_truth()
    assert response_lag(truth, truth, [250]) == 1.0
    assert response_lag(np.full(T, 0.2), truth, [250]) == math.inf
    ramp = truth.copy()
    ramp[250:260] = 0.2 + 0.4 * np.arange(1, 11) / 10    # reaches the new level at k=10
    assert response_lag(ramp, truth, [250]) == 5.0


def test_settling_lag_examples():
    truth = step_truth()
    assert settling_lag(truth, truth, [250]) == 1.0
    osc = truth.copy()
    osc[250::2] += 0.5
    assert settling_lag(osc, truth, [250]) == math.inf
    late = truth.copy()
    late[250:256] = 0.2           # periods 1..6 still at the old level
    assert settling_lag(late, truth, [250]) == 7.0


def test_lags_average_over_breaks_and_truncate():
    truth = np.zeros(100)
    truth[30:] = 1.0
    truth[60:] = 0.0
    est = truth.copy()
    est[30:33] = 0.0              # first break responds at k=4
    assert response_lag(est, truth, [30, 60]) == pytest.approx(2.5)
    # a response that only arrives after the next break does not count
    late = np.zeros(100)
    late[30:] = 1.0
    late[30:60] = 0.0
    assert response_lag(late, truth, [30, 60]) == math.inf


def test_zero_jump_breaks_skipped():
    truth = step_truth()
    assert response_lag(truth, truth, [100, 250]) == 1.0


def test_evaluate_ignores_breaks_before_range():
    truth = step_truth(b=40, n=300)
    est = truth.copy()
    est[:59] = np.nan
    rep = evaluate("m", est, truth, [40])
    assert math.isnan(rep.response_lag) and rep.rmse == 0.0
    truth[150:] = est[150:] = 0.9
    rep = evaluate("m", est, truth, [40, 150])
    assert rep.response_lag == 1.0 and rep.mae2 == 0.0


def test_report_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        MetricsReport("m", 0.1, 0.2, 1.5, 0.1, 0.1, 0.1, 1.0, 1.0)
    a = MetricsReport("m", 0.1, 0.2, 0.9, 0.1, 0.1, 0.1, 1.0, math.inf)
    b = MetricsReport("m", 0.3, 0.2, 0.7, 0.1, 0.1, 0.1, 3.0, 2.0)
    avg = average_reports([a, b])[0]
    assert avg.rmse == pytest.approx(0.2) and avg.settling_lag == math.inf and avg.response_lag == 2.0
    write_reports_csv([a, b], tmp_path / "m.csv", extra={"seed": 1})
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == ",".join(["method", "seed", *TABLE_COLUMNS, "mae"])
    assert "inf" in lines[1]


@given(hnp.arrays(float, 80, elements=st.floats(-1, 1)), hnp.arrays(float, 80, elements=st.floats(-1, 1)))
def test_rmse_exceeds_mean_error(est, truth):
    assert rmse(est, truth, (1, 80)) >= abs(np.mean(est - truth)) - 1e-12


@given(n_pre=st.integers(1, 80), offset=st.integers(0, 60), jump=st.floats(0.05, 2.0), up=st.booleans(),
       rate=st.floats(0.02, 1.0))
def test_response_precedes_settling_on_monotone_paths(n_pre, offset, jump, up, rate):
    n = n_pre + 200
    b = n_pre
    sign = 1.0 if up else -1.0
    truth = np.zeros(n)
    truth[b:] = sign * jump
    k = np.arange(1, n - b + 1)
    est = np.zeros(n)
    est[b:] = sign * jump * np.minimum(1.0, rate * np.maximum(k - offset, 0))
    r = response_lag(est, truth, [b])
    s = settling_lag(est, truth, [b])
    assert r <= s


@given(shift=st.integers(0, 40), seed=st.integers(0, 1000))
def test_prefix_invariance(shift, seed):
    rng = np.random.default_rng(seed)
    truth = np.repeat(rng.uniform(0, 1, 3), 100)
    est = truth + rng.normal(0, 0.05, 300)
    pre_t = np.concatenate([np.zeros(shift), truth])
    pre_e = np.concatenate([np.full(shift, np.nan), est])
    a = evaluate("m", est, truth, [100, 200], eval_range=(60, 300))
    b = evaluate("m", pre_e, pre_t, [100 + shift, 200 + shift], eval_range=(60 + shift, 300 + shift))
    np.testing.assert_array_equal([a.rmse, a.mae, *a.table_row()], [b.rmse, b.mae, *b.table_row()])
