import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from nsscurve.curves import (CurveParams, ModelKind, check_constraints, constraint_system,
                             discrete_forward, forward_rate, is_feasible, spot_rate)

from .conftest import random_params

NS = CurveParams.nelson_siegel(0.05, -0.02, 0.01, 0.5)


def ns_strategy():
    return st.builds(CurveParams.nelson_siegel,
                     st.floats(0.001, 0.249), st.floats(-0.2, 0.2), st.floats(0.0, 0.25),
                     st.floats(1 / 300 + 1e-9, 12.0))


def sv_strategy():
    return st.builds(CurveParams.svensson,
                     st.floats(0.001, 0.249), st.floats(-0.2, 0.0), st.floats(0.0, 0.25),
                     st.floats(1 / 300 + 1e-9, 12.0), st.floats(0.0, 0.25),
                     st.floats(1 / 300 + 1e-9, 12.0))


class TestDiscreteForward:
    def test_flat_curve(self):
        assert discrete_forward(0.05, 2, 0.05, 1) == pytest.approx(0.05, abs=1e-15)

    def test_direct_evaluation(self):
        assert discrete_forward(0.06, 2, 0.04, 1) == pytest.approx(0.08, abs=1e-15)

    def test_degenerate_interval(self):
        with pytest.raises(ValueError):
            discrete_forward(0.05, 1, 0.05, 1)


class TestRates:
    def test_forward_short_end(self):
        assert forward_rate(NS, 0.0) == pytest.approx(0.03, abs=1e-15)
        assert forward_rate(NS, 1e-12) == pytest.approx(0.03, abs=1e-6)

    def test_forward_long_end(self):
        assert forward_rate(NS, 1e4) == pytest.approx(0.05, abs=1e-12)

    def test_spot_short_end(self):
        assert spot_rate(NS, 0.0) == pytest.approx(0.03, abs=1e-15)

    def test_spot_at_unit_lambda_t(self):
        # -0.02(1 - e^-1) + 0.01(1 - 2e^-1) = -0.01 exactly
        assert spot_rate(NS, 2.0) == pytest.approx(0.04, abs=1e-15)

    def test_constant_curve(self):
        flat = CurveParams.svensson(0.07, 0.0, 0.0, 2.0, 0.0, 0.3)
        t = np.array([0.0, 0.1, 1.0, 7.5, 30.0])
        np.testing.assert_allclose(spot_rate(flat, t), 0.07, atol=1e-15)
        np.testing.assert_allclose(forward_rate(flat, t), 0.07, atol=1e-15)

    def test_scalar_in_scalar_out(self):
        assert isinstance(spot_rate(NS, 1.0), float)
        assert spot_rate(NS, np.array([1.0, 2.0])).shape == (2,)

    def test_negative_tenor_rejected(self):
        with pytest.raises(ValueError):
            spot_rate(NS, -1.0)

    def test_series_branch_matches_closed_form(self):
        # lambda * t straddling the series cutoff gives a continuous curve
        p = CurveParams.nelson_siegel(0.05, -0.02, 0.01, 1.0)
        t = np.array([0.99e-8, 1.01e-8])
        np.testing.assert_allclose(spot_rate(p, t), 0.03, atol=1e-9)

    @given(sv_strategy(), st.floats(0.01, 30.0))
    def test_svensson_reduces_to_ns(self, p, t):
        reduced = CurveParams.svensson(p.beta0, p.beta1, p.beta2, p.lambda1, 0.0, p.lambda2)
        ns = CurveParams.nelson_siegel(p.beta0, p.beta1, p.beta2, p.lambda1)
        assert spot_rate(reduced, t) == spot_rate(ns, t)
        assert forward_rate(reduced, t) == forward_rate(ns, t)

    @given(st.one_of(ns_strategy(), sv_strategy()), st.floats(0.05, 25.0))
    def test_spot_is_mean_forward(self, p, t):
        integral, _ = quad(lambda s: forward_rate(p, s), 0.0, t, epsabs=1e-13, epsrel=1e-13, limit=200)
        assert abs(spot_rate(p, t) - integral / t) < 1e-9

    @given(st.one_of(ns_strategy(), sv_strategy()))
    def test_continuity_at_zero(self, p):
        assert abs(spot_rate(p, 1e-12) - (p.beta0 + p.beta1)) < 1e-6
        assert abs(forward_rate(p, 1e-12) - (p.beta0 + p.beta1)) < 1e-6

    @given(ns_strategy().filter(lambda p: p.lambda1 >= 1 / 30))
    def test_long_end_approaches_beta0(self, p):
        # both loadings are bounded by 1 / (lambda t), so convergence is only algebraic
        bound = (abs(p.beta1) + abs(p.beta2)) / (500 * p.lambda1)
        assert abs(spot_rate(p, 500.0) - p.beta0) <= bound + 1e-15

    def test_long_end_with_fast_decay(self):
        p = CurveParams.nelson_siegel(0.06, -0.02, 0.01, 12.0)
        assert abs(spot_rate(p, 1e5) - p.beta0) < 1e-6


class TestParams:
    def test_vector_round_trip(self):
        p = CurveParams.svensson(0.07, -0.03, 0.02, 1.5, 0.01, 0.4)
        assert CurveParams.from_vector("svensson", p.to_vector()) == p

    def test_dict_round_trip(self):
        d = NS.to_dict()
        assert d == {"model": "ns", "beta0": 0.05, "beta1": -0.02, "beta2": 0.01, "lambda1": 0.5}
        assert CurveParams.from_dict(d) == NS

    def test_dict_rejects_extra_keys(self):
        with pytest.raises(ValueError):
            CurveParams.from_dict({**NS.to_dict(), "beta3": 0.1})

    def test_nonpositive_lambda(self):
        with pytest.raises(ValueError):
            CurveParams.nelson_siegel(0.05, -0.02, 0.01, 0.0)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            CurveParams.from_vector("ns", [0.1, 0.2])

    def test_model_kind_parse(self):
        assert ModelKind.parse("NS") is ModelKind.NELSON_SIEGEL
        assert ModelKind.parse("svensson").dimension == 6
        with pytest.raises(ValueError):
            ModelKind.parse("cubic")


class TestConstraints:
    def test_counts(self):
        assert constraint_system("ns").n_constraints() == 9
        assert constraint_system("svensson").n_constraints() == 13

    @pytest.mark.parametrize("kind", ["ns", "svensson"])
    def test_witness_is_interior(self, kind):
        cs = constraint_system(kind)
        assert check_constraints(cs.witness, cs) == (True, [])

    def test_beta0_breach(self):
        ok, violated = is_feasible(CurveParams.nelson_siegel(0.30, -0.05, 0.05, 1.0))
        assert not ok
        assert violated == ["beta0 < 0.25"]

    def test_short_rate_boundary_is_infeasible(self):
        ok, violated = is_feasible(CurveParams.nelson_siegel(0.05, -0.05, 0.05, 1.0))
        assert not ok
        assert violated == ["beta0 + beta1 > 0"]

    def test_kind_mismatch(self):
        with pytest.raises(ValueError):
            is_feasible(NS, constraint_system("svensson"))

    def test_repair_restores_short_rate(self):
        cs = constraint_system("svensson")
        x = np.array([[0.05, -0.1, 0.1, 1.0, 0.1, 2.0], [0.30, 0.5, -1.0, 20.0, 0.1, 0.0]])
        fixed = cs.repair(x)
        assert cs.contains(fixed).all()

    @pytest.mark.parametrize("kind", ["ns", "svensson"])
    def test_random_feasible_points_pass(self, kind):
        for p in random_params(kind, np.random.default_rng(4), 200):
            assert is_feasible(p)[0]

    def test_inequality_rows_agree_with_labels(self):
        cs = constraint_system("ns")
        U, c = cs.inequalities()
        assert U.shape == (9, 4) and len(cs.labels()) == 9
        assert math.isclose(float(U[-1] @ [0.1, -0.05, 0, 1] - c[-1]), 0.05)
