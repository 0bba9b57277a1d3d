import io
import json
import math

import numpy as np
import pytest

from entrate import (
    ContractError,
    FunctionSource,
    InputError,
    ResourceError,
    block_entropy,
    cesaro_entropy_sandwich,
    entropy_curve,
    entropy_rate_estimate,
    finite_entropy_rate,
    shift_residuals,
    Alphabet,
)
from entrate.evolution import cesaro_mean
from entrate.source import MAX_SUPPORT_ENV

from conftest import bern, brute_entropy, random_source_suite

LOG2 = math.log(2)


def circular_rate(t):
    return ((t + 1) // 3) * LOG2 / t


def point_mass():
    return bern(1.0)


def test_block_entropy_examples(fair_coin, circular):
    assert block_entropy(fair_coin, 5) == pytest.approx(5 * LOG2, abs=1e-12)
    assert block_entropy(point_mass(), 7) == 0.0
    assert block_entropy(circular, 3) == pytest.approx(LOG2, abs=1e-15)
    assert block_entropy(circular, 0) == 0.0


def test_block_entropy_matches_brute_force():
    for src in random_source_suite(10):
        for t in range(1, 5):
            assert block_entropy(src, t) == pytest.approx(brute_entropy(src, t), abs=1e-12)


def test_finite_entropy_rate_examples(fair_coin, circular, circular_uniform):
    for t in (1, 4, 9):
        assert finite_entropy_rate(fair_coin, t) == pytest.approx(LOG2, abs=1e-12)
    assert finite_entropy_rate(circular, 30) == pytest.approx(LOG2 / 3, abs=1e-12)
    assert finite_entropy_rate(circular_uniform, 3) == pytest.approx(math.log(6) / 3, abs=1e-12)
    with pytest.raises(InputError):
        finite_entropy_rate(circular, 0)


def test_circular_curve_closed_form(circular):
    curve = entropy_curve(circular, 30)
    for t in range(1, 31):
        assert curve.values[t] == pytest.approx(circular_rate(t), abs=1e-9)


def test_uniform_curve_constant(fair_coin):
    values = entropy_curve(fair_coin, 10).as_array()
    np.testing.assert_allclose(values, LOG2, atol=1e-12)


def test_base_conversion(circular, qrw4):
    for src in (circular, qrw4):
        nats = entropy_curve(src, 8)
        bits = entropy_curve(src, 8, base="2")
        np.testing.assert_allclose(bits.as_array(), nats.as_array() / LOG2, atol=1e-12)
        np.testing.assert_allclose(bits.to_base("e").as_array(), nats.as_array(), atol=1e-12)
    with pytest.raises(InputError):
        entropy_curve(circular, 4, base="10")


def test_entropy_bounds_on_suite():
    for src in random_source_suite(20):
        values = entropy_curve(src, 6).as_array()
        assert np.all(values >= 0)
        assert np.all(values <= math.log(src.alphabet.size) + 1e-12)


def test_curve_csv_and_sidecar(circular, tmp_path):
    curve = entropy_curve(circular, 3)
    buf = io.StringIO()
    curve.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,entropy_rate"
    assert float(lines[3].split(",")[1]) == circular_rate(3)
    path = tmp_path / "curve.csv"
    curve.write(path)
    meta = json.loads((tmp_path / "curve.csv.json").read_text())
    assert meta["base"] == "e" and meta["t_max"] == 3


def test_curve_reports_failing_horizon(fair_coin, monkeypatch):
    monkeypatch.setenv(MAX_SUPPORT_ENV, "64")
    with pytest.raises(ResourceError, match="t=7"):
        entropy_curve(fair_coin, 10)


def test_rate_estimate_windows(circular, fair_coin):
    est = entropy_rate_estimate(circular, 24, 30)
    assert est.lower_est <= LOG2 / 3 <= est.upper_est
    assert est.cauchy_gap <= 0.02
    assert entropy_rate_estimate(fair_coin, 2, 6).cauchy_gap == pytest.approx(0, abs=1e-15)
    pm = entropy_rate_estimate(point_mass(), 1, 5)
    assert pm.upper_est == pm.lower_est == 0
    with pytest.raises(InputError):
        entropy_rate_estimate(circular, 5, 4)


def test_residuals_uniform_iid(fair_coin):
    for k in (1, 2, 3):
        for t in (1, 3, 5):
            I, J = shift_residuals(fair_coin, k, t)
            assert I == pytest.approx(k / t * LOG2, abs=1e-12)
            assert J == pytest.approx(k / t * LOG2, abs=1e-12)


def test_residuals_equal_for_period_shift(circular, circular_uniform):
    I, J = shift_residuals(circular, 3, 5)
    assert I == pytest.approx(J, abs=1e-9)
    I, J = shift_residuals(circular_uniform, 2, 4)
    assert I == pytest.approx(J, abs=1e-9)


def test_residual_identity_and_bounds():
    for src in random_source_suite(15):
        m = src.alphabet.size
        for k in (1, 2, 3):
            for t in (1, 3, 5):
                I, J = shift_residuals(src, k, t)
                lhs = finite_entropy_rate(src, t) + J
                rhs = I + finite_entropy_rate(src.shifted(k), t)
                assert lhs == pytest.approx(rhs, abs=1e-9)
                for r in (I, J):
                    assert -1e-9 <= r <= k / t * math.log(m) + 1e-9


def test_residuals_reject_signed_source():
    # P("00") < 0 cancels P("10") in the shifted marginal of "0"
    table = {(): 1.0, (0,): 0.5, (1,): 0.5, (0, 0): -0.25, (0, 1): 0.75, (1, 0): 0.25, (1, 1): 0.25}
    src = FunctionSource(Alphabet.of_size(2), lambda w: table[tuple(w)])
    with pytest.raises(ContractError):
        shift_residuals(src, 1, 1)


def test_sandwich_iid_is_tight(fair_coin):
    lower, mid, upper = cesaro_entropy_sandwich(bern(0.3), 3, 5)
    assert lower == pytest.approx(mid, abs=1e-12)
    assert upper == pytest.approx(lower + 3 / 5 * LOG2)


def test_sandwich_circular_equals_stationary_mean(circular):
    lower, mid, upper = cesaro_entropy_sandwich(circular, 3, 6)
    assert mid == pytest.approx((math.log(3) + 2 * LOG2) / 6, abs=1e-12)
    assert lower <= mid <= upper


def test_sandwich_ordering_on_suite():
    for src in random_source_suite(10):
        for n in range(1, 5):
            for t in range(1, 7):
                lower, mid, upper = cesaro_entropy_sandwich(src, n, t)
                assert lower <= mid + 1e-9
                assert mid <= upper + 1e-9


def test_cesaro_entropy_gap_bound(circular):
    gaps = {}
    for n in range(1, 5):
        mean = cesaro_mean(circular, n)
        curve_p = entropy_curve(circular, 24)
        curve_n = entropy_curve(mean, 24)
        for t in range(1, 25):
            gap = abs(curve_p.values[t] - curve_n.values[t])
            assert gap <= n / t * LOG2 + 1e-9
            gaps[n, t] = gap
    for n in range(1, 5):
        assert gaps[n, 24] <= gaps[n, 6] + 1e-12
