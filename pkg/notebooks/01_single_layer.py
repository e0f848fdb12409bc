# %% [markdown]
# # Single-layer relaying: thresholds and correlation regions
#
# A source with power `P_s` and a relay with power `P_r` send one code
# layer to a destination over Rayleigh fading.  The relay hears the
# source with a collocation gain `Q`.  This script walks through the
# closed-form quantities the library exposes for that setting.

# %%
import math

import numpy as np

from bmdf import ChannelParams
from bmdf.single_layer import (
    RegionKind,
    ThroughputMode,
    classify_rho_region,
    crossover_x0,
    first_rho_max_rate,
    gamma0,
    maximize_throughput,
    oblivious_bm_throughput,
    direct_throughput,
    p_s_star,
    q_min_single,
    success_prob_pair,
    success_prob_su,
    throughput,
)
from bmdf.sweeps import fig2_gap

# %% [markdown]
# ## Crossover constants
# Two equal-power antennas beat one antenna with the pooled power only at
# rates above `log(1 + x0 p)`.  Both `x0` and `gamma0 = x0 / 2` come from the
# -1 branch of the Lambert W function.

# %%
x0 = crossover_x0()
print(f"x0 = {x0:.10f}, gamma0 = {gamma0():.10f}, (1 + x0) exp(-x0/2) = {(1 + x0) * math.exp(-x0 / 2):.15f}")
p = 1.0
for rate in np.linspace(0.5, 2.5, 5):
    diff = success_prob_pair(rate, p, p) - success_prob_su(rate, 2 * p)
    print(f"R = {rate:.2f}: pair - single = {diff:+.5f}")
print(f"sign change expected at R = {math.log1p(x0 * p):.5f}")

# %% [markdown]
# ## Which correlation to use
# Below `log(1 + gamma0 P)` uncorrelated signalling wins; above
# `log(1 + 3P/2)` maximal correlation wins; in between it depends on `Q`.

# %%
params = ChannelParams.from_db(8.0, 8.0, 10.0)
for rate in (1.0, 2.5, 3.0, 4.0):
    region = classify_rho_region(rate, params)
    print(f"R = {rate}: {region.kind.value:13s} band = [{region.r_low:.3f}, {region.r_high:.3f}]")
assert classify_rho_region(0.1, params).kind is RegionKind.ZERO_OPTIMAL

# %% [markdown]
# The first rate at which the fully correlated scheme overtakes the
# uncorrelated one lies only a few hundredths of a nat above the lower
# band edge.

# %%
print(f"first rho_max rate = {first_rho_max_rate(params, 1e-4):.4f}, gap = {fig2_gap(params):.4f} nats")
r0, t0 = maximize_throughput(params, ThroughputMode.RHO_ZERO)
r1, t1 = maximize_throughput(params, ThroughputMode.RHO_MAX)
print(f"best uncorrelated: R = {r0:.4f}, T = {t0:.4f}; best correlated: R = {r1:.4f}, T = {t1:.4f}")
print(f"throughput at R = 3: rho=0 {throughput(3.0, params):.4f}, rho_max {throughput(3.0, params, ThroughputMode.RHO_MAX):.4f}")

# %% [markdown]
# ## Oblivious cooperation
# The source keeps its single-user optimal rate `W(P_s)`.  The relay helps
# once `Q` exceeds `q_min_single(P_s)`, equivalently once `P_s` exceeds
# `p_s_star(Q)` for `Q < 1`.

# %%
for q in (0.1, 0.5, 0.9):
    ps = p_s_star(q)
    print(f"Q = {q}: P_s* = {ps:.4f} ({10 * math.log10(ps):.2f} dB), q_min_single(P_s*) = {q_min_single(ps):.4f}")
for ps_db in (0, 10, 20, 30):
    prm = ChannelParams.from_db(ps_db, ps_db, 10.0)
    print(f"P_s = {ps_db} dB: direct {direct_throughput(prm.p_s):.3f}, with relay {oblivious_bm_throughput(prm):.3f} nats")
