# %% [markdown]
# # Layered codes and the collocation gain they need
#
# With `N` layers and the relay silent, the source's optimal code is fixed
# by a set of fading thresholds.  The relay can only join if it decodes
# every layer, which sets a minimal collocation gain `Q_min,N`.

# %%
import numpy as np

from bmdf.single_layer import q_min_single
from bmdf.sweeps import figure_spec, run_sweep
from bmdf.two_layer import optimize_siso_layering, q_min_layers

# %%
for n in (1, 2, 4):
    lay = optimize_siso_layering(100.0, n)
    print(f"N = {n}: thresholds {np.round(lay.thresholds, 4)}, rates {np.round(lay.rates, 4)}, "
          f"throughput {lay.objective:.4f}, Q_min {q_min_layers(100.0, lay):.4f}")
print(f"single-layer closed form Q_min = {q_min_single(100.0):.4f}")

# %% [markdown]
# More layers give more throughput but ask more of the relay link.

# %%
tab = run_sweep(figure_spec("fig4", layers=(1, 2, 4)))
n, ps, q = tab.column("n_layers"), tab.column("ps_db"), tab.column("q_min")
for db in (0.0, 10.0, 20.0, 40.0):
    row = [f"N={k}: {q[(n == k) & (ps == db)][0]:.4f}" for k in (1, 2, 4)]
    print(f"P_s = {db:4.1f} dB  " + "  ".join(row))
