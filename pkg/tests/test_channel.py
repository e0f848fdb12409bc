import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmdf.channel import (
    ChannelParams,
    CorrelationPair,
    FadingDraw,
    PowerSplit,
    db_to_linear,
    df_rate_single,
    linear_to_db,
    relay_layer_infos,
    sample_fading,
    two_layer_mutual_infos,
)
from bmdf.errors import DomainError


def test_db_round_trip():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(-3.0) == pytest.approx(0.5011872336272722)
    assert linear_to_db(100.0) == pytest.approx(20.0)
    assert isinstance(db_to_linear(3.0), float)
    np.testing.assert_allclose(linear_to_db(db_to_linear(np.array([-5.0, 0.0, 17.5]))), [-5.0, 0.0, 17.5])


def test_params_from_db():
    p = ChannelParams.from_db(10, 20, 0)
    assert (p.p_s, p.p_r, p.q) == pytest.approx((10.0, 100.0, 1.0))
    assert p.total_power == pytest.approx(110.0)


@pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0), (math.inf, 1, 1), (1, 1, math.nan)])
def test_params_validation(args):
    with pytest.raises(DomainError):
        ChannelParams(*args)


@pytest.mark.parametrize("a, b", [(-0.1, 0.5), (0.5, 1.1)])
def test_split_validation(a, b):
    with pytest.raises(DomainError):
        PowerSplit(a, b)


def test_correlation_validation():
    with pytest.raises(DomainError):
        CorrelationPair(1.2, 0.0)


def test_sample_fading_moments(rng):
    d = sample_fading(rng, 200_000)
    assert len(d) == 200_000
    assert d.nu_s.mean() == pytest.approx(1.0, abs=0.01)
    assert d.nu_r.var() == pytest.approx(1.0, abs=0.02)
    assert 0.0 <= d.phi.min() and d.phi.max() < 2 * math.pi


def test_df_rate_single_uncorrelated():
    p = ChannelParams(2.0, 3.0, 5.0)
    d = FadingDraw(0.5, 1.5, 1.0)
    out = df_rate_single(p, d, 0.0)
    assert out.rate_relay == pytest.approx(math.log(11.0))
    assert out.rate_miso == pytest.approx(math.log(1 + 1.0 + 4.5))
    assert out.rate == pytest.approx(min(out.rate_relay, out.rate_miso))


def test_df_rate_single_coherent_phase():
    p = ChannelParams(1.0, 1.0, 100.0)
    d = FadingDraw(1.0, 1.0, 0.0)
    out = df_rate_single(p, d, 1.0)
    # full correlation, aligned phase: (|h_s| + |h_r|)^2 = 4
    assert out.rate_miso == pytest.approx(math.log(5.0))
    assert out.rate_relay == 0.0


def test_df_rate_rejects_bad_rho():
    with pytest.raises(DomainError):
        df_rate_single(ChannelParams(1, 1, 1), FadingDraw(1, 1, 0), 1.5)


def test_relay_infos_uncorrelated():
    p = ChannelParams(10.0, 10.0, 2.0)
    i1, i2 = relay_layer_infos(p, PowerSplit(0.7, 0.4), CorrelationPair())
    assert i1 + i2 == pytest.approx(math.log(1 + 20.0))
    assert i2 == pytest.approx(math.log(1 + 0.3 * 20.0))


def test_relay_infos_rho2_one_kills_layer2():
    p = ChannelParams(10.0, 10.0, 2.0)
    _, i2 = relay_layer_infos(p, PowerSplit(0.5, 0.5), CorrelationPair(0.0, 1.0))
    assert i2 == 0.0


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
    st.floats(1e-3, 1e4), st.floats(1e-3, 1e4),
)
def test_relay_infos_defined_on_unit_square(a, b, r1, r2, ps, q):
    # sqrt(ab) + sqrt((1-a)(1-b)) <= 1 keeps the covariance determinant positive
    i1, i2 = relay_layer_infos(ChannelParams(ps, 1.0, q), PowerSplit(a, b), CorrelationPair(r1, r2))
    assert math.isfinite(i1) and i2 >= 0.0


def test_two_layer_infos_sum_to_single_layer(rng):
    p = ChannelParams(4.0, 2.0, 3.0)
    d = sample_fading(rng, 1000)
    info = two_layer_mutual_infos(p, d, PowerSplit(0.6, 0.6), CorrelationPair(0.3, 0.3))
    single = df_rate_single(p, d, 0.3).rate_miso
    # equal splits and equal correlations collapse to a single layer
    np.testing.assert_allclose(info.i1_miso + info.i2_miso, single, rtol=1e-12)


def test_two_layer_infos_alpha_one():
    p = ChannelParams(4.0, 2.0, 3.0)
    d = FadingDraw(np.array([0.2, 1.0]), np.array([2.0, 0.1]), np.array([0.0, 2.0]))
    info = two_layer_mutual_infos(p, d, PowerSplit(1.0, 1.0), CorrelationPair())
    np.testing.assert_allclose(info.i2_miso, 0.0)
    np.testing.assert_allclose(info.i1_miso, np.log1p(d.nu_s * 4.0 + d.nu_r * 2.0))


def test_single_layer_examples():
    p = ChannelParams(1.0, 1.0, 10.0)
    assert df_rate_single(p, FadingDraw(0.0, 0.0, 0.3), 0.0).rate == 0.0
    assert df_rate_single(p, FadingDraw(1.0, 1.0, 0.3), 1.0).rate == 0.0
    out = df_rate_single(p, FadingDraw(1.0, 1.0, 0.3), 0.0)
    assert out.rate == pytest.approx(math.log(3.0))
    assert out.rate_relay == pytest.approx(math.log(11.0))


def test_two_layer_example_values():
    p = ChannelParams(10.0, 10.0, 100.0)
    split = PowerSplit(0.8, 0.8)
    info = two_layer_mutual_infos(p, FadingDraw(0.5, 0.5, 1.0), split, CorrelationPair())
    assert info.i2_miso == pytest.approx(math.log(3.0))
    assert info.i1_miso == pytest.approx(math.log(11.0 / 3.0))
    assert info.i1_relay == pytest.approx(math.log(1001.0 / 201.0))
    assert info.i2_relay == pytest.approx(math.log(201.0))


def test_two_layer_rho2_one_equal_split():
    _, i2 = relay_layer_infos(ChannelParams(3.0, 1.0, 7.0), PowerSplit(0.4, 0.4), CorrelationPair(0.2, 1.0))
    assert i2 == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 0.99), st.floats(0.0, 1.0))
def test_i1_relay_non_increasing_in_rho1(a, b, r1, r2):
    p = ChannelParams(5.0, 1.0, 20.0)
    lo, _ = relay_layer_infos(p, PowerSplit(a, b), CorrelationPair(r1, r2))
    hi, _ = relay_layer_infos(p, PowerSplit(a, b), CorrelationPair(r1 + 0.01, r2))
    assert hi <= lo + 1e-12


def test_infos_non_negative_and_additive(rng):
    p = ChannelParams(6.0, 2.0, 3.0)
    d = sample_fading(rng, 5000)
    info = two_layer_mutual_infos(p, d, PowerSplit(0.3, 0.7), CorrelationPair())
    assert min(info.i1_relay, info.i2_relay) >= 0
    assert info.i1_miso.min() >= 0 and info.i2_miso.min() >= 0
    np.testing.assert_allclose(info.i1_miso + info.i2_miso, np.log1p(d.nu_s * 6.0 + d.nu_r * 2.0), rtol=1e-12)
