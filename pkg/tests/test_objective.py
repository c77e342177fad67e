import datetime as dt
import logging

import numpy as np
import pytest

from nsscurve import testkit
from nsscurve.curves import CurveParams
from nsscurve.objective import (BondObservation, ObjectiveSpec, Offer, SpreadUnavailable,
                                bid_ask_spread, goodness_of_fit, model_prices, observation_weight,
                                weighted_sse, weighted_sse_gradient)
from nsscurve.pricing import BondSpec, CashFlowSchedule

from .conftest import random_params

FLAT = CurveParams.nelson_siegel(0.05, 0.0, 0.0, 1.0)


def zero_bond(i, t):
    bond = BondSpec(f"Z{i}", dt.date(2014, 1, 1), dt.date(2016, 1, 1))
    return bond, CashFlowSchedule(np.array([t]), np.array([100.0]))


def micro_spec(observed, spreads, staleness, model="ns"):
    """Zero-coupon bonds at 1..n years priced against a flat 5% curve."""
    obs = []
    for i, (px, h, nd) in enumerate(zip(observed, spreads, staleness)):
        bond, sched = zero_bond(i, float(i + 1))
        obs.append(BondObservation(bond, sched, px, nd, h))
    return ObjectiveSpec(tuple(obs), model)


def central_difference(f, x):
    grad = np.empty_like(x)
    for i in range(x.size):
        h = 1e-6 * (1 + abs(x[i]))
        up, down = x.copy(), x.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (f(up) - f(down)) / (2 * h)
    return grad


def fair(t):
    return 100 * np.exp(-0.05 * t)


class TestSpread:
    def test_single_offers(self):
        offers = [Offer("sell", 0.07, 10), Offer("buy", 0.065, 5)]
        assert bid_ask_spread(offers) == pytest.approx(0.005, abs=1e-15)

    def test_weighted_mean(self):
        offers = [Offer("sell", 0.07, 10), Offer("sell", 0.08, 10), Offer("buy", 0.07, 20)]
        assert bid_ask_spread(offers) == pytest.approx(0.005, abs=1e-15)

    def test_identical_quotes_floored(self, caplog):
        with caplog.at_level(logging.WARNING):
            h = bid_ask_spread([Offer("sell", 0.07, 10), Offer("buy", 0.07, 10)])
        assert h == 1e-6
        assert "degenerate spread" in caplog.text

    @pytest.mark.parametrize("offers, reason", [
        ([], "no offers"),
        ([Offer("sell", 0.07, 1)], "no buy offers"),
        ([Offer("buy", 0.07, 1)], "no sell offers"),
    ])
    def test_one_sided(self, offers, reason):
        with pytest.raises(SpreadUnavailable) as info:
            bid_ask_spread(offers)
        assert info.value.reason == reason

    def test_bad_offer(self):
        with pytest.raises(ValueError):
            Offer("hold", 0.07, 1)
        with pytest.raises(ValueError):
            Offer("buy", 0.07, 0)


class TestWeight:
    @pytest.mark.parametrize("h, nd, w", [(0.005, 0, 200.0), (0.005, 1, 100.0), (1.0, 0, 1.0)])
    def test_values(self, h, nd, w):
        assert observation_weight(h, nd) == pytest.approx(w, rel=1e-15)

    def test_invalid(self):
        with pytest.raises(ValueError):
            observation_weight(0.0, 0)
        with pytest.raises(ValueError):
            observation_weight(0.01, -1)


class TestWeightedSse:
    def test_perfect_fit(self):
        spec = micro_spec([fair(t) for t in range(1, 6)], [0.01] * 5, [0] * 5)
        assert weighted_sse(FLAT, spec) == pytest.approx(0.0, abs=1e-24)

    def test_single_residual(self):
        prices = [fair(t) for t in range(1, 6)]
        prices[0] += 2.0
        spec = micro_spec(prices, [0.5] + [1.0] * 4, [0] * 5)
        assert weighted_sse(FLAT, spec) == pytest.approx(8.0, rel=1e-12)

    def test_two_residuals(self):
        prices = [fair(t) for t in range(1, 6)]
        prices[0] += 1.0
        prices[1] -= 1.0
        spec = micro_spec(prices, [1.0] * 5, [0] * 5)
        assert weighted_sse(FLAT, spec) == pytest.approx(2.0, rel=1e-12)

    def test_two_bond_micro_instance(self):
        # residuals 2 and 1 with weights 2 and 1
        prices = [fair(t) for t in range(1, 6)]
        prices[0] += 2.0
        prices[1] += 1.0
        spec = micro_spec(prices, [0.5, 1.0, 1.0, 1.0, 1.0], [0] * 5)
        assert weighted_sse(FLAT, spec) == pytest.approx(9.0, rel=1e-12)
        assert testkit.oracle_wsse(FLAT, spec.observations) == pytest.approx(9.0, rel=1e-12)

    def test_too_few_observations(self):
        with pytest.raises(ValueError):
            micro_spec([fair(1)] * 4, [0.01] * 4, [0] * 4, model="ns")

    def test_kind_mismatch(self, sv_instance):
        with pytest.raises(ValueError):
            weighted_sse(FLAT, sv_instance.spec)

    def test_vector_and_params_agree(self, sv_instance):
        p = testkit.TRUE_SVENSSON
        assert weighted_sse(p, sv_instance.spec) == weighted_sse(p.to_vector(), sv_instance.spec)

    def test_matches_oracle(self, noisy_instance):
        rng = np.random.default_rng(5)
        for params in random_params("svensson", rng, 200):
            fast = weighted_sse(params, noisy_instance.spec)
            slow = testkit.oracle_wsse(params, noisy_instance.observations)
            assert abs(fast - slow) <= 1e-12 * abs(slow)

    def test_nonnegative(self, noisy_instance):
        rng = np.random.default_rng(6)
        for params in random_params("svensson", rng, 100):
            assert weighted_sse(params, noisy_instance.spec) >= 0

    def test_spread_scaling(self, noisy_instance):
        scaled = [BondObservation(o.bond, o.schedule, o.observed_dirty_price, o.staleness_days,
                                  o.spread * 3.0) for o in noisy_instance.observations]
        spec = ObjectiveSpec(tuple(scaled), "svensson")
        for params in random_params("svensson", np.random.default_rng(8), 20):
            a = weighted_sse(params, noisy_instance.spec)
            assert weighted_sse(params, spec) == pytest.approx(a / 3.0, rel=1e-12)

    def test_model_prices(self, sv_instance):
        prices = model_prices(sv_instance.true_params, sv_instance.spec)
        np.testing.assert_array_equal(prices, sv_instance.spec.observed_prices)


class TestGradient:
    @pytest.mark.parametrize("kind, fixture", [("ns", "ns_instance"), ("svensson", "noisy_instance")])
    def test_matches_central_differences(self, kind, fixture, request):
        inst = request.getfixturevalue(fixture)
        spec = inst.spec_for(kind)
        rng = np.random.default_rng(12)
        for params in random_params(kind, rng, 50):
            g = weighted_sse_gradient(params, spec)
            fd = central_difference(lambda x: weighted_sse(x, spec), params.to_vector())
            assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-8)

    def test_zero_at_perfect_fit(self, sv_instance):
        g = weighted_sse_gradient(sv_instance.true_params, sv_instance.spec)
        np.testing.assert_array_equal(g, 0.0)


class TestGoodnessOfFit:
    def test_perfect(self, sv_instance):
        assert goodness_of_fit(sv_instance.true_params, sv_instance.spec) == 0.0

    def test_one_percent(self):
        prices = [fair(t) for t in range(1, 6)]
        prices[0] = fair(1) / 0.99
        spec = micro_spec(prices, [1.0] * 5, [0] * 5)
        # relative error of the first bond is 1%; the mean over five bonds is 0.2%
        assert goodness_of_fit(FLAT, spec) == pytest.approx(0.2, rel=1e-9)

    def test_mean_of_relative_errors(self):
        t = np.arange(1, 6)
        model = fair(t)
        rel = np.array([0.01, 0.03, 0.02, 0.02, 0.02])
        spec = micro_spec(list(model / (1 - rel)), [1.0] * 5, [0] * 5)
        assert goodness_of_fit(FLAT, spec) == pytest.approx(2.0, rel=1e-9)
