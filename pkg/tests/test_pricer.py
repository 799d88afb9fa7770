import math

import pytest

import fourval as fv
from fourval.models import ModelSpec, fix_drift
from fourval.payoffs import PayoffSpec
from fourval.pricer import (MODE_CAPPED_1D, MODE_L2_ND, MODE_LEBESGUE_1D,
                            MODE_LEBESGUE_ND, PriceRequest, check_conditions,
                            cp_digital_exact, delta,
                            digital_value_midpoint_check, gamma, price,
                            price_min_two, price_strike_grid)
from fourval.quadrature import QuadConfig

PAPER_NIG = dict(alpha=6.20, beta=[-3.80, -2.50], delta=0.150)
DELTA_PLUS = [[1.0, 0.0], [0.0, 1.0]]


def bs_call(S0, K, sigma, T, r=0.0):
    d1 = (math.log(S0 / K) + (r + 0.5 * sigma ** 2) * T) / (sigma * math.sqrt(T))
    d2 = d1 - sigma * math.sqrt(T)
    Phi = lambda x: 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
    return S0 * Phi(d1) - K * math.exp(-r * T) * Phi(d2)


@pytest.fixture(scope="module")
def brownian():
    return fix_drift(ModelSpec.brownian(c=0.04))


@pytest.fixture(scope="module")
def nig1d():
    return fix_drift(ModelSpec.nig1d(6.20, -3.80, 0.150))


@pytest.fixture(scope="module")
def cp_model():
    return fix_drift(ModelSpec.compound_poisson([(0.1, 2.0)]))


@pytest.fixture(scope="module")
def nig2d():
    return fix_drift(ModelSpec.nig2d(**PAPER_NIG, Delta=DELTA_PLUS))


CFG2D = QuadConfig(abs_tol=1e-6, max_nodes=30_000_000)


class TestDispatch:
    def test_call_nig1d_lebesgue(self, nig1d):
        req = PriceRequest(spot=[100.0], payoff=PayoffSpec.call(100.0),
                           model=nig1d, maturity=1.0)
        assert check_conditions(req).mode == MODE_LEBESGUE_1D

    def test_digital_cp_capped_with_atom_warning(self, cp_model):
        req = PriceRequest(spot=[100.0], payoff=PayoffSpec.digital_call(100.0),
                           model=cp_model, maturity=1.0)
        disp = check_conditions(req)
        assert disp.mode == MODE_CAPPED_1D
        assert disp.diagnostics["midpoint_at_discontinuities"]

    def test_min_call_nig2d_lebesgue_nd(self, nig2d):
        req = PriceRequest(spot=[100.0, 95.0], payoff=PayoffSpec.min_call(100.0, 2),
                           model=nig2d, maturity=0.25)
        disp = check_conditions(req)
        assert disp.mode == MODE_LEBESGUE_ND
        assert "cf_tail_check" in disp.diagnostics

    def test_discontinuous_2d_goes_l2(self, nig2d):
        pay = PayoffSpec.product([PayoffSpec.digital_call(100.0),
                                  PayoffSpec.digital_call(95.0)])
        req = PriceRequest(spot=[100.0, 95.0], payoff=pay, model=nig2d, maturity=1.0)
        assert check_conditions(req).mode == MODE_L2_ND

    def test_damping_outside_strip_rejected(self, nig1d):
        req = PriceRequest(spot=[100.0], payoff=PayoffSpec.call(100.0),
                           model=nig1d, maturity=1.0, damping=[0.5])
        with pytest.raises(fv.InfeasibleError):
            check_conditions(req)
        req = PriceRequest(spot=[100.0], payoff=PayoffSpec.call(100.0),
                           model=nig1d, maturity=1.0, damping=[25.0])
        with pytest.raises(fv.InfeasibleError):
            check_conditions(req)

    def test_dimension_mismatch(self, nig2d):
        with pytest.raises(fv.ParameterError):
            PriceRequest(spot=[100.0], payoff=PayoffSpec.call(100.0),
                         model=nig2d, maturity=1.0)


class TestBlackScholes:
    def test_atm_call(self, brownian):
        res = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.call(100.0),
                                 model=brownian, maturity=1.0))
        assert res.mode == MODE_LEBESGUE_1D
        assert res.value == pytest.approx(bs_call(100, 100, 0.2, 1.0), abs=1e-8)

    def test_strike_sweep(self, brownian):
        for K in (80.0, 95.0, 110.0, 130.0):
            res = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.call(K),
                                     model=brownian, maturity=0.5))
            assert res.value == pytest.approx(bs_call(100, K, 0.2, 0.5), abs=1e-8)

    def test_nonzero_rates(self):
        m = fix_drift(ModelSpec.brownian(c=0.04), r=0.05, q=0.02)
        res = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.call(100.0),
                                 model=m, maturity=1.0, rate=0.05, dividend=0.02))
        # forward-adjusted Black-Scholes
        fwd = 100.0 * math.exp(0.03)
        d1 = (math.log(fwd / 100.0) + 0.02) / 0.2
        Phi = lambda x: 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
        expected = math.exp(-0.05) * (fwd * Phi(d1) - 100.0 * Phi(d1 - 0.2))
        assert res.value == pytest.approx(expected, abs=1e-8)

    def test_digital_capped_matches_gaussian_cdf(self, brownian):
        B = 105.0
        res = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.digital_call(B),
                                 model=brownian, maturity=1.0))
        assert res.mode == MODE_CAPPED_1D and res.converged
        a = math.log(B / 100.0)
        expected = 0.5 * (1.0 - math.erf((a + 0.02) / (0.2 * math.sqrt(2.0))))
        assert res.value == pytest.approx(expected, abs=1e-8)


class TestParityAndIdentities:
    @pytest.mark.parametrize("model_name", ["brownian", "nig1d"])
    def test_put_call_parity(self, model_name, request):
        model = request.getfixturevalue(model_name)
        for K in (90.0, 100.0, 110.0):
            for T in (1.0 / 12.0, 0.5, 1.0):
                c = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.call(K),
                                       model=model, maturity=T)).value
                p = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.put(K),
                                       model=model, maturity=T)).value
                assert abs(c - p - (100.0 - K)) < 1e-8

    @pytest.mark.parametrize("model_name", ["brownian", "nig1d"])
    def test_call_decomposition(self, model_name, request):
        model = request.getfixturevalue(model_name)
        K = 100.0
        call = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.call(K),
                                  model=model, maturity=0.5)).value
        aon = price(PriceRequest(spot=[100.0],
                                 payoff=PayoffSpec.asset_or_nothing_call(K),
                                 model=model, maturity=0.5)).value
        dig = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.digital_call(K),
                                 model=model, maturity=0.5)).value
        assert abs(call - (aon - K * dig)) < 1e-6

    def test_double_digital_decomposition(self, nig1d):
        lo, hi = 90.0, 110.0
        dd = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.double_digital(lo, hi),
                                model=nig1d, maturity=0.5)).value
        p_hi = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.digital_put(hi),
                                  model=nig1d, maturity=0.5)).value
        p_lo = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.digital_put(lo),
                                  model=nig1d, maturity=0.5)).value
        assert abs(dd - (p_hi - p_lo)) < 1e-6

    @pytest.mark.parametrize("model_name", ["brownian", "nig1d"])
    def test_damping_invariance(self, model_name, request):
        model = request.getfixturevalue(model_name)
        cfg = QuadConfig(abs_tol=1e-11)
        vals = [price(PriceRequest(spot=[100.0], payoff=PayoffSpec.call(100.0),
                                   model=model, maturity=1.0, damping=[R],
                                   quad=cfg)).value
                for R in (1.25, 1.75, 2.5)]
        assert max(vals) - min(vals) < 1e-7

    def test_digital_monotone_in_spot(self, nig1d):
        prices = [price(PriceRequest(spot=[s], payoff=PayoffSpec.digital_call(100.0),
                                     model=nig1d, maturity=0.5)).value
                  for s in (85.0, 95.0, 100.0, 105.0, 120.0)]
        assert all(a <= b + 1e-9 for a, b in zip(prices, prices[1:]))

    def test_price_bounds(self, nig2d, nig1d):
        call = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.call(90.0),
                                  model=nig1d, maturity=0.5)).value
        assert 0.0 <= call <= 100.0
        dig = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.digital_call(90.0),
                                 model=nig1d, maturity=0.5)).value
        assert 0.0 <= dig <= 1.0 + 1e-8
        mn = price(PriceRequest(spot=[100.0, 95.0], payoff=PayoffSpec.min_call(95.0, 2),
                                model=nig2d, maturity=0.5, quad=CFG2D)).value
        for i, marg in enumerate([nig2d.params.marginal(0), nig2d.params.marginal(1)]):
            m1 = ModelSpec("NIG1d", marg, 1, True)
            single = price(PriceRequest(spot=[[100.0, 95.0][i]],
                                        payoff=PayoffSpec.call(95.0),
                                        model=m1, maturity=0.5)).value
            assert mn <= single + 1e-6


class TestCompoundPoissonDigital:
    def test_exact_sum_off_atom(self, cp_model):
        bt = cp_model.params.drift_uncompensated()[0]
        B = 100.0 * math.exp(bt + 0.05)
        assert cp_digital_exact(cp_model, 100.0, B, 1.0) == pytest.approx(
            1.0 - math.exp(-2.0), abs=1e-12)

    def test_capped_price_off_atom(self, cp_model):
        bt = cp_model.params.drift_uncompensated()[0]
        B = 100.0 * math.exp(bt + 0.05)
        cfg = QuadConfig(abs_tol=1e-7, max_nodes=8_000_000)
        res = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.digital_call(B),
                                 model=cp_model, maturity=1.0, quad=cfg))
        assert res.converged
        assert res.value == pytest.approx(cp_digital_exact(cp_model, 100.0, B, 1.0),
                                          abs=1e-6)

    def test_midpoint_at_atom(self, cp_model):
        bt = cp_model.params.drift_uncompensated()[0]
        B = 100.0 * math.exp(bt + 0.1)   # the n = 1 lattice point
        cfg = QuadConfig(abs_tol=1e-7, max_nodes=8_000_000)
        chk = digital_value_midpoint_check(cp_model, 100.0, B, 1.0, cfg)
        assert chk.left == pytest.approx(1.0 - math.exp(-2.0), abs=1e-12)
        assert chk.right == pytest.approx(1.0 - 3.0 * math.exp(-2.0), abs=1e-12)
        assert chk.capped == pytest.approx(0.5 * (chk.left + chk.right), abs=1e-5)


class TestMinTwo:
    def test_specialized_equals_generic(self, nig2d):
        req = PriceRequest(spot=[100.0, 95.0], payoff=PayoffSpec.min_call(100.0, 2),
                           model=nig2d, maturity=0.25, quad=CFG2D)
        generic = price(req).value
        special = price_min_two(100.0, 95.0, 100.0, nig2d, 0.25, 0.75, 0.75, CFG2D)
        assert abs(generic - special) < 1e-8

    def test_symmetry_under_asset_swap(self, nig2d):
        a = price_min_two(100.0, 95.0, 100.0, nig2d, 0.25, 0.75, 0.75, CFG2D)
        # swapping the assets swaps beta/mu components; Delta+ is symmetric
        p = nig2d.params
        swapped = ModelSpec.nig2d(p.alpha, p.beta[::-1], p.delta, DELTA_PLUS,
                                  mu=p.mu[::-1])
        b = price_min_two(95.0, 100.0, 100.0, swapped, 0.25, 0.75, 0.75, CFG2D)
        assert abs(a - b) < 1e-8

    def test_invalid_damping(self, nig2d):
        with pytest.raises(fv.InfeasibleError):
            price_min_two(100.0, 95.0, 100.0, nig2d, 0.25, 0.4, 0.4)

    def test_nig2d_against_monte_carlo(self, nig2d):
        val = price(PriceRequest(spot=[100.0, 95.0],
                                 payoff=PayoffSpec.min_call(100.0, 2),
                                 model=nig2d, maturity=0.25, quad=CFG2D)).value
        est = fv.price_mc(nig2d, PayoffSpec.min_call(100.0, 2), [100.0, 95.0], 0.25,
                          cfg=fv.McConfig(paths=400_000, seed=21))
        assert abs(val - est.mean) < 3.0 * est.std_error

    def test_dhsv_against_monte_carlo(self):
        sv = ModelSpec.dhsv(0.5, 1.0, 0.05, 0.5, 0.25, -0.5, 0.04, 1.0, 0.04)
        val = price_min_two(96.0, 100.0, 100.0, sv, 0.5, 0.75, 0.75, CFG2D)
        est = fv.price_mc(sv, PayoffSpec.min_call(100.0, 2), [96.0, 100.0], 0.5,
                          cfg=fv.McConfig(paths=400_000, steps=1000, seed=22))
        assert abs(val - est.mean) < 3.0 * est.std_error


class TestGreeks:
    def test_black_scholes_delta_gamma(self, brownian):
        cfg = QuadConfig(abs_tol=1e-11)
        req = PriceRequest(spot=[100.0], payoff=PayoffSpec.call(100.0),
                           model=brownian, maturity=1.0, quad=cfg)
        Phi = lambda x: 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
        phi = lambda x: math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        assert delta(req) == pytest.approx(Phi(0.1), abs=1e-9)
        assert gamma(req) == pytest.approx(phi(0.1) / 20.0, abs=1e-9)

    @pytest.mark.parametrize("model_name", ["brownian", "nig1d"])
    def test_finite_difference_consistency(self, model_name, request):
        model = request.getfixturevalue(model_name)
        cfg = QuadConfig(abs_tol=1e-11)
        req = PriceRequest(spot=[100.0], payoff=PayoffSpec.call(100.0),
                           model=model, maturity=1.0, quad=cfg)
        h = 1e-4 * 100.0
        p = [price(PriceRequest(spot=[100.0 + s], payoff=PayoffSpec.call(100.0),
                                model=model, maturity=1.0, quad=cfg)).value
             for s in (-h, 0.0, h)]
        fd_delta = (p[2] - p[0]) / (2.0 * h)
        fd_gamma = (p[2] - 2.0 * p[1] + p[0]) / h ** 2
        assert delta(req) == pytest.approx(fd_delta, rel=1e-4)
        assert gamma(req) == pytest.approx(fd_gamma, rel=1e-3)

    def test_deep_itm_delta(self, brownian):
        req = PriceRequest(spot=[100.0], payoff=PayoffSpec.call(10.0),
                           model=brownian, maturity=1.0, quad=QuadConfig(abs_tol=1e-11))
        assert delta(req) == pytest.approx(1.0, abs=1e-4)

    def test_gamma_nonnegative_across_strikes(self, nig1d):
        for K in (85.0, 95.0, 105.0, 115.0):
            req = PriceRequest(spot=[100.0], payoff=PayoffSpec.call(K),
                               model=nig1d, maturity=0.5)
            assert gamma(req) >= 0.0

    def test_refuses_digital_under_atoms(self, cp_model):
        req = PriceRequest(spot=[100.0], payoff=PayoffSpec.digital_call(100.0),
                           model=cp_model, maturity=1.0)
        with pytest.raises(fv.InfeasibleError, match="integrability"):
            delta(req)


class TestGrid:
    def test_lebesgue_grid_matches_single_prices(self, nig1d):
        strikes = [90.0, 100.0, 110.0]
        cells = price_strike_grid(nig1d, "Call", strikes, 0.5, 100.0)
        for cell in cells:
            single = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.call(cell.strike),
                                        model=nig1d, maturity=0.5)).value
            assert cell.result.value == pytest.approx(single, abs=1e-7)

    def test_capped_grid_matches_single_prices(self, nig1d):
        strikes = [95.0, 105.0]
        cells = price_strike_grid(nig1d, "DigitalCall", strikes, 0.5, 100.0)
        for cell in cells:
            single = price(PriceRequest(spot=[100.0],
                                        payoff=PayoffSpec.digital_call(cell.strike),
                                        model=nig1d, maturity=0.5)).value
            assert cell.result.value == pytest.approx(single, abs=1e-6)

    def test_2d_grid_matches_single_prices(self, nig2d):
        strikes = [90.0, 100.0, 110.0]
        cells = price_strike_grid(nig2d, "MinCall", strikes, 0.25, [100.0, 95.0],
                                  cfg=CFG2D)
        for cell in cells:
            single = price(PriceRequest(spot=[100.0, 95.0],
                                        payoff=PayoffSpec.min_call(cell.strike, 2),
                                        model=nig2d, maturity=0.25, quad=CFG2D)).value
            assert cell.result.value == pytest.approx(single, abs=1e-6)

    @pytest.mark.parametrize("kind,model_name", [("Call", "nig1d"),
                                                 ("DigitalCall", "nig1d"),
                                                 ("MinCall", "nig2d")])
    def test_cached_equals_uncached(self, kind, model_name, request):
        model = request.getfixturevalue(model_name)
        spot = [100.0, 95.0] if kind == "MinCall" else 100.0
        cfg = CFG2D if kind == "MinCall" else QuadConfig()
        a = price_strike_grid(model, kind, [95.0, 105.0], 0.5, spot, cfg=cfg,
                              use_cache=True)
        b = price_strike_grid(model, kind, [95.0, 105.0], 0.5, spot, cfg=cfg,
                              use_cache=False)
        for ca, cb in zip(a, b):
            assert ca.result.value == cb.result.value  # bitwise identical


class TestResultInvariants:
    def test_negative_clamp_and_mode_echo(self, nig1d):
        res = price(PriceRequest(spot=[100.0], payoff=PayoffSpec.call(400.0),
                                 model=nig1d, maturity=1.0 / 12.0))
        assert res.value >= 0.0
        assert res.mode == MODE_LEBESGUE_1D
        assert res.damping_used == pytest.approx([1.75])
