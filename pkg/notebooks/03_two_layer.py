# %% [markdown]
# # Two code layers with a cooperating relay
#
# The source splits its power `alpha : 1 - alpha` between a base layer and
# a refinement layer, the relay does the same with `beta`.  The layers may
# be correlated with coefficients `rho1`, `rho2`.  The destination's MISO
# link probabilities have semi-analytic forms that integrate the Rayleigh
# magnitude and the arcsine law of the phase.

# %%
from bmdf import ChannelParams
from bmdf.channel import CorrelationPair, PowerSplit, two_layer_mutual_infos
from bmdf.montecarlo import estimate
from bmdf.two_layer import (
    LayerRates,
    average_throughput_mc,
    average_throughput_uncorrelated,
    classify_conic,
    conic_value,
    decode_counts,
    p_layer1_miso_analytic,
    p_layer2_miso_analytic,
    rho2_cap,
)

params = ChannelParams(10.0, 10.0, 100.0)
split, corr, rates = PowerSplit(0.3, 0.5), CorrelationPair(0.2, 0.3), LayerRates(0.5, 0.7)

# %% [markdown]
# ## Layer probabilities against simulation

# %%
p1 = p_layer1_miso_analytic(params, split, corr, rates.r1)
p2 = p_layer2_miso_analytic(params, split, corr.rho2, rates.r2)


def layer(which, rate):
    def pay(d):
        info = two_layer_mutual_infos(params, d, split, corr)
        return (info.i1_miso if which == 1 else info.i2_miso) >= rate

    return estimate(pay, 2_000_000, seed=11)


for name, exact, est in (("layer 1", p1, layer(1, rates.r1)), ("layer 2", p2, layer(2, rates.r2))):
    print(f"{name}: analytic {exact:.5f}  MC {est.value:.5f} +- {est.half_width:.5f}")

# %% [markdown]
# ## Which correlations let the relay decode
# The relay decodes the base layer exactly where the conic is positive.

# %%
info = classify_conic(params, split, rates)
print(f"origin feasible: {info.feasible_at_origin}, rho1 cutoff: {info.rho1_cutoff}, max r1: {info.max_r1:.4f}")
print(f"rho2 cap for r2 = {rates.r2}: {rho2_cap(params, split, rates.r2):.4f}")
for r1_, r2_ in ((0.0, 0.0), (0.5, 0.5), (0.9, 0.9)):
    print(f"conic at ({r1_}, {r2_}) = {conic_value(params, split, rates.r1, r1_, r2_):+.3f}")

# %% [markdown]
# ## Average throughput
# The design above starves the base layer: at zero correlation the relay
# cannot decode it, and the source alone cannot carry it either, so its
# throughput is zero.  A more balanced split is used instead.  Without
# correlation the throughput is a pair of half-plane integrals; with
# correlation it is simulated.  Both agree at the origin.

# %%
split, rates = PowerSplit(0.6, 0.6), LayerRates(0.4, 1.0)
quad = average_throughput_uncorrelated(params, split, rates)
mc = average_throughput_mc(params, split, CorrelationPair(), rates, 2_000_000)
print(f"uncorrelated: quadrature {quad.value:.5f}, MC {mc.value:.5f} +- {mc.half_width:.5f}")
counts = decode_counts(params, split, corr, rates, 100_000)
print(f"counts: layer 1 {counts.layer1}, both {counts.both}, layer 1 only {counts.layer1_only}")
print(f"throughput from counts {counts.throughput(rates):.5f}")
