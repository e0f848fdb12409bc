import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmdf import ChannelParams, CorrelationPair, PowerSplit, estimate, sample_fading, two_layer_mutual_infos
from bmdf.errors import DomainError
from bmdf.montecarlo import Provenance, stream
from bmdf.single_layer import maximize_throughput, pair_success, q_min_single, success_prob_pair
from bmdf.two_layer import (
    LayerRates,
    OptimizeMode,
    average_throughput_mc,
    average_throughput_uncorrelated,
    classify_conic,
    conic_value,
    decode_counts,
    decode_events,
    direct_two_layer_throughput,
    oblivious_two_layer,
    optimize_siso_layering,
    optimize_two_layer_throughput,
    p_layer1_miso_analytic,
    p_layer2_miso_analytic,
    q_min_layers,
    rho2_cap,
)

# frozen: scipy dblquad of exp(-a - b) over the decoding region (0, 0 correlation)
LAYER1_UNCORRELATED_ORACLE = [
    ((10, 10), (0.3, 0.5), 0.5, 0.36816171733015257),
    ((10, 10), (0.8, 0.8), 0.5, 0.9956076601130918),
    ((2, 5), (0.6, 0.8), 0.4, 0.9664317602904763),
    ((10, 1), (0.5, 0.9), 0.3, 0.9815841042520265),
]

P10 = ChannelParams(10.0, 10.0, 100.0)


def _draws(n=10_000, seed=3):
    return sample_fading(stream(seed, 0), n)


# ---- decode events ------------------------------------------------------------


def test_zero_rates_always_decode():
    ev = decode_events(P10, _draws(), PowerSplit(0.4, 0.6), CorrelationPair(0.3, 0.2), LayerRates(0.0, 0.0))
    assert ev.layer1_ok.all() and ev.layer2_ok.all()


def test_layer2_blocked_by_relay():
    split = PowerSplit(0.6, 0.6)
    r2 = math.log1p(P10.q * split.alpha_bar * P10.p_s) + 0.01
    ev = decode_events(P10, _draws(), split, CorrelationPair(), LayerRates(0.1, r2))
    assert not ev.layer2_ok.any()


def test_events_reduce_to_miso_thresholds_for_large_q():
    params = ChannelParams(10.0, 10.0, 1e12)
    split, rates = PowerSplit(0.7, 0.6), LayerRates(0.3, 0.9)
    d = _draws()
    ev = decode_events(params, d, split, CorrelationPair(), rates)
    e1 = math.exp(rates.r1)
    t1 = d.nu_s * 10 * (1 - 0.3 * e1) + d.nu_r * 10 * (1 - 0.4 * e1) >= math.expm1(rates.r1)
    t2 = d.nu_s * 3 + d.nu_r * 4 >= math.expm1(rates.r2)
    assert np.array_equal(ev.layer1_ok, t1)
    assert np.array_equal(ev.layer2_ok, t1 & t2)


def test_counts_decomposition_identity():
    split, corr, rates = PowerSplit(0.6, 0.7), CorrelationPair(0.2, 0.3), LayerRates(0.6, 1.1)
    d = _draws()
    ev = decode_events(P10, d, split, corr, rates)
    only1 = int(np.count_nonzero(ev.layer1_ok & ~ev.layer2_ok))
    both = int(np.count_nonzero(ev.layer2_ok))
    l1 = int(np.count_nonzero(ev.layer1_ok))
    # exact on integer counts
    assert only1 + both == l1
    lhs = rates.r1 * only1 + (rates.r1 + rates.r2) * both
    rhs = rates.r1 * l1 + rates.r2 * both
    assert math.isclose(lhs, rhs, rel_tol=1e-15)


def test_r1_above_cap_never_decodes():
    split = PowerSplit(0.5, 0.5)
    cap = classify_conic(P10, split, LayerRates(0.0, 0.0)).max_r1
    counts = decode_counts(P10, split, CorrelationPair(0.0, 1.0), LayerRates(cap + 1e-6, 0.0), 10_000)
    assert counts.layer1 == 0


# ---- throughput ---------------------------------------------------------------


def test_mc_zero_rates():
    est = average_throughput_mc(P10, PowerSplit(0.5, 0.5), CorrelationPair(), LayerRates(0.0, 0.0), 1000)
    assert est.value == 0.0 and est.half_width == 0.0


def test_mc_rho2_one_kills_second_layer():
    counts = decode_counts(P10, PowerSplit(0.5, 0.5), CorrelationPair(0.0, 1.0), LayerRates(0.2, 0.3), 50_000)
    assert counts.both == 0 and counts.layer1 > 0


def test_mc_is_deterministic_and_worker_invariant():
    args = (P10, PowerSplit(0.5, 0.7), CorrelationPair(0.1, 0.2), LayerRates(0.4, 0.8), 150_000)
    a = average_throughput_mc(*args, seed=9)
    assert a == average_throughput_mc(*args, seed=9, workers=4)
    assert a.provenance is Provenance.MONTE_CARLO


def test_mc_standard_error_matches_generic_estimator():
    split, corr, rates = PowerSplit(0.8, 0.8), CorrelationPair(), LayerRates(0.5, 1.0)
    fast = average_throughput_mc(P10, split, corr, rates, 100_000, seed=2)

    def payoff(d):
        ev = decode_events(P10, d, split, corr, rates)
        return rates.r1 * ev.layer1_ok + rates.r2 * ev.layer2_ok

    slow = estimate(payoff, 100_000, seed=2)
    assert fast.value == pytest.approx(slow.value, rel=1e-12)
    assert fast.std_error == pytest.approx(slow.std_error, rel=1e-9)


def test_uncorrelated_collapses_to_single_layer():
    params = ChannelParams(3.0, 7.0, 50.0)
    r = 1.3
    est = average_throughput_uncorrelated(params, PowerSplit(1.0, 1.0), LayerRates(r, 0.0))
    assert est.value == pytest.approx(r * success_prob_pair(r, 3.0, 7.0), abs=1e-6)
    assert est.provenance is Provenance.QUADRATURE and est.half_width == 0.0


@pytest.mark.parametrize("rates", [(0.5, 1.0), (0.2, 0.3), (1.0, 0.5)])
def test_uncorrelated_matches_mc(rates):
    split, rates = PowerSplit(0.8, 0.8), LayerRates(*rates)
    quad = average_throughput_uncorrelated(P10, split, rates).value
    mc = average_throughput_mc(P10, split, CorrelationPair(), rates, 1_000_000, seed=17)
    assert mc.contains(quad, slack=1e-6)


def test_uncorrelated_huge_rate():
    est = average_throughput_uncorrelated(P10, PowerSplit(0.9, 0.9), LayerRates(40.0, 1.0))
    assert est.value == pytest.approx(0.0, abs=1e-12)


def test_uncorrelated_relay_silent_fallback():
    params = ChannelParams(10.0, 10.0, 0.05)
    split, rates = PowerSplit(0.8, 0.8), LayerRates(0.5, 1.0)
    est = average_throughput_uncorrelated(params, split, rates)
    assert est.provenance is Provenance.ANALYTIC
    assert est.value == pytest.approx(direct_two_layer_throughput(10.0, 0.8, rates), rel=1e-14)


# ---- conic --------------------------------------------------------------------


def test_conic_origin_feasible_below_threshold():
    split = PowerSplit(0.6, 0.4)
    r_edge = math.log((1 + P10.p_s * P10.q) / (1 + P10.q * split.alpha_bar * P10.p_s))
    c = classify_conic(P10, split, LayerRates(r_edge - 1e-3, 0.0), CorrelationPair())
    assert c.feasible_at_origin and c.probe_feasible
    assert not classify_conic(P10, split, LayerRates(r_edge + 1e-3, 0.0)).feasible_at_origin


def test_conic_cutoff_none_when_rho_star_above_one():
    c = classify_conic(ChannelParams(10.0, 1.0, 1.0), PowerSplit(0.5, 0.5), LayerRates(0.0, 0.0))
    assert c.rho1_cutoff is None


def test_conic_cutoff_value():
    params, split, rates = ChannelParams(10.0, 1.0, 10.0), PowerSplit(0.5, 0.5), LayerRates(0.6, 0.0)
    c = classify_conic(params, split, rates)
    f0 = 101.0 - math.exp(0.6) * 51.0
    assert c.rho1_cutoff == pytest.approx(math.sqrt(f0 / 25.0), rel=1e-12)
    assert conic_value(params, split, 0.6, c.rho1_cutoff, 0.0) == pytest.approx(0.0, abs=1e-9)
    assert classify_conic(params, split, LayerRates(3.0, 0.0)).rho1_cutoff == 0.0


def test_conic_boundary_probe_is_infeasible():
    split = PowerSplit(0.3, 0.6)
    c0 = classify_conic(P10, split, LayerRates(0.0, 0.0))
    c = classify_conic(P10, split, LayerRates(c0.max_r1, 0.0), CorrelationPair(0.0, 1.0))
    assert c.max_r1 == pytest.approx(math.log1p(P10.p_s * P10.q * (1 - 0.7 * 0.4)))
    assert c.probe_feasible is False


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.01, 0.9), st.floats(0.05, 1.0), st.floats(0.0, 3.0))
def test_conic_decreasing_in_rho1(a, b, rho1, rho2, r1):
    split = PowerSplit(a, b)
    lo = conic_value(P10, split, r1, rho1, rho2)
    hi = conic_value(P10, split, r1, rho1 + 0.05, rho2)
    assert hi < lo


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 3.0))
def test_conic_sign_matches_relay_decodability(a, b, rho1, rho2, r1):
    from bmdf import relay_layer_infos

    split = PowerSplit(a, b)
    i1, _ = relay_layer_infos(P10, split, CorrelationPair(rho1, rho2))
    val = conic_value(P10, split, r1, rho1, rho2)
    scale = 1.0 + P10.p_s * P10.q * math.exp(r1)
    if abs(val) > 1e-9 * scale:
        assert (val > 0) == (i1 > r1)


def test_rho2_cap():
    split = PowerSplit(0.6, 0.6)
    cap = rho2_cap(P10, split, 1.0)
    i2 = math.log1p(P10.q * 0.4 * 10 * (1 - cap**2))
    assert i2 == pytest.approx(1.0)
    assert rho2_cap(P10, split, 100.0) == 0.0


# ---- analytic MISO probabilities ----------------------------------------------


@pytest.mark.parametrize("powers, split, r1, expected", LAYER1_UNCORRELATED_ORACLE)
def test_layer1_uncorrelated_oracle(powers, split, r1, expected):
    params = ChannelParams(*powers, 100.0)
    val = p_layer1_miso_analytic(params, PowerSplit(*split), CorrelationPair(), r1, tol=1e-9)
    assert val == pytest.approx(expected, abs=1e-8)


def test_layer1_trivial_rate():
    assert p_layer1_miso_analytic(P10, PowerSplit(0.3, 0.5), CorrelationPair(0.2, 0.3), 0.0) == 1.0


def test_layer1_domain_error():
    with pytest.raises(DomainError):
        p_layer1_miso_analytic(P10, PowerSplit(0.2, 0.2), CorrelationPair(0.2, 0.3), 0.5)


def test_layer2_uncorrelated_reduces_to_pair():
    split = PowerSplit(0.7, 0.4)
    val = p_layer2_miso_analytic(P10, split, 0.0, 0.9, tol=1e-10)
    assert val == pytest.approx(pair_success(3.0, 6.0, math.expm1(0.9)), abs=1e-9)


def test_layer2_trivial_and_domain():
    assert p_layer2_miso_analytic(P10, PowerSplit(0.5, 0.5), 0.5, 0.0) == 1.0
    with pytest.raises(DomainError):
        p_layer2_miso_analytic(P10, PowerSplit(0.5, 0.5), 1.5, 0.2)


def _mc_layer(params, split, corr, which, rate, n=1_000_000, seed=31):
    def pay(d):
        info = two_layer_mutual_infos(params, d, split, corr)
        return (info.i1_miso if which == 1 else info.i2_miso) >= rate

    return estimate(pay, n, seed=seed)


@pytest.mark.parametrize(
    "split, corr, r1",
    [
        ((0.3, 0.5), (0.2, 0.3), 0.5),
        ((0.3, 0.5), (0.0, 0.9), 0.5),
        ((0.5, 0.3), (0.4, 0.2), 0.3),
        ((0.7, 0.9), (1.0, 0.0), 0.2),
    ],
)
def test_layer1_matches_mc(split, corr, r1):
    split, corr = PowerSplit(*split), CorrelationPair(*corr)
    val = p_layer1_miso_analytic(P10, split, corr, r1)
    assert _mc_layer(P10, split, corr, 1, r1).contains(val, slack=1e-6)


@pytest.mark.parametrize("rho2, r2", [(0.5, 0.7), (1.0, 0.7), (0.9, 0.2)])
def test_layer2_matches_mc(rho2, r2):
    split = PowerSplit(0.5, 0.5)
    val = p_layer2_miso_analytic(P10, split, rho2, r2)
    assert _mc_layer(P10, split, CorrelationPair(0.0, rho2), 2, r2).contains(val, slack=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 1.0), st.floats(0.3, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.01, 0.3))
def test_layer1_bounded_and_monotone(a, b, rho1, rho2, r1):
    split, corr = PowerSplit(a, b), CorrelationPair(rho1, rho2)
    try:
        lo = p_layer1_miso_analytic(P10, split, corr, r1)
        hi = p_layer1_miso_analytic(P10, split, corr, r1 * 1.2)
    except DomainError:
        return
    assert 0.0 <= hi <= lo + 1e-6 <= 1.0 + 1e-6


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.9), st.floats(0.0, 0.9), st.floats(0.0, 1.0), st.floats(0.01, 3.0))
def test_layer2_bounded_and_monotone(a, b, rho2, r2):
    split = PowerSplit(a, b)
    lo = p_layer2_miso_analytic(P10, split, rho2, r2)
    hi = p_layer2_miso_analytic(P10, split, rho2, r2 * 1.2)
    assert 0.0 <= hi <= lo + 1e-6 <= 1.0 + 1e-6


def test_layer2_bounds_joint_success():
    split, corr, rates = PowerSplit(0.6, 0.7), CorrelationPair(0.2, 0.4), LayerRates(0.3, 1.0)
    counts = decode_counts(P10, split, corr, rates, 200_000)
    p12 = counts.both / counts.n
    se = math.sqrt(p12 * (1 - p12) / counts.n)
    assert p12 <= p_layer2_miso_analytic(P10, split, corr.rho2, rates.r2) + 4 * se


# ---- layering -----------------------------------------------------------------


def test_single_layer_layering_closed_form():
    lay = optimize_siso_layering(math.e, 1)
    assert lay.rates[0] == pytest.approx(1.0, rel=1e-14)
    assert lay.thresholds[0] == pytest.approx((math.e - 1) / math.e, rel=1e-14)
    assert lay.splits == (1.0,)
    assert q_min_layers(math.e, lay) == pytest.approx(q_min_single(math.e), rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_layering_invariants(n):
    lay = optimize_siso_layering(50.0, n)
    assert lay.n_layers == n
    assert sum(lay.splits) == pytest.approx(1.0, abs=1e-12)
    assert all(0.0 <= f <= 1.0 for f in lay.splits)
    assert all(b >= a for a, b in zip(lay.thresholds, lay.thresholds[1:]))
    # each threshold is exactly where its layer becomes decodable
    res = lay.residual_powers
    for i, eta in enumerate(lay.thresholds):
        assert math.log1p(eta * res[i]) - math.log1p(eta * res[i + 1]) == pytest.approx(lay.rates[i], rel=1e-12)
    assert lay.objective == pytest.approx(sum(r * math.exp(-e) for r, e in zip(lay.rates, lay.thresholds)), rel=1e-12)


def test_more_layers_never_hurt():
    objs = [optimize_siso_layering(30.0, n).objective for n in (1, 2, 4)]
    assert objs[0] <= objs[1] <= objs[2]


def test_two_layers_against_grid_oracle():
    p = 100.0
    lay = optimize_siso_layering(p, 2)
    e1 = np.linspace(0.01, 1.0, 400)[:, None, None]
    e2 = np.linspace(0.01, 2.0, 400)[None, :, None]
    i1 = np.geomspace(1e-3, p, 200)[None, None, :]
    obj = np.log((1 + e1 * p) / (1 + e1 * i1)) * np.exp(-e1) + np.log1p(e2 * i1) * np.exp(-e2)
    grid_best = float(obj.max())
    assert lay.objective >= grid_best - 1e-12
    assert lay.objective - grid_best < 1e-3


def test_q_min_two_layers_dominates_single():
    for p in np.geomspace(1.0, 1e4, 9):
        assert q_min_layers(p, optimize_siso_layering(p, 2)) >= q_min_single(p)


def test_q_min_requires_matching_power():
    with pytest.raises(DomainError):
        q_min_layers(5.0, optimize_siso_layering(4.0, 2))


# ---- optimisation ---------------------------------------------------------------


def test_forcing_single_layer_recovers_single_layer_optimum():
    params = ChannelParams(5.0, 5.0, 50.0)
    best = optimize_two_layer_throughput(params, fixed={"alpha": 1.0, "beta": 1.0, "r2": 0.0}, budget=400)
    assert best.value == pytest.approx(maximize_throughput(params)[1], abs=1e-6)


def test_two_layer_beats_single_layer():
    params = ChannelParams(100.0, 100.0, 100.0)
    assert params.q > optimize_siso_layering(100.0, 2).thresholds[-1]
    best = optimize_two_layer_throughput(params)
    assert best.value > maximize_throughput(params)[1] + 0.1
    assert best.corr == CorrelationPair()


def test_oblivious_two_layer_uses_siso_code():
    params = ChannelParams(100.0, 100.0, 100.0)
    obl = oblivious_two_layer(params)
    lay = optimize_siso_layering(100.0, 2)
    assert obl.split.alpha == lay.splits[0]
    assert obl.rates == LayerRates(*lay.rates)
    assert obl.value >= average_throughput_uncorrelated(params, PowerSplit(lay.splits[0], lay.splits[0]), obl.rates).value - 1e-12


def test_unknown_fixed_key():
    with pytest.raises(DomainError):
        optimize_two_layer_throughput(P10, fixed={"gamma": 1.0})


def test_correlated_search_prefers_origin():
    params = ChannelParams.from_db(22.0, 30.0, 40.0)
    best = optimize_two_layer_throughput(
        params, OptimizeMode.CORRELATED_MC, budget=600, rho_grid=6, n_samples=20_000
    )
    assert best.corr.rho1 <= 0.2 and best.corr.rho2 <= 0.2
