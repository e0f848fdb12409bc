# %% [markdown]
# # Figure sweeps and CSV tables
#
# `figure_spec` builds a preset sweep for each figure; `run_sweep`
# evaluates it and returns a `Table` that writes deterministic CSV.

# %%
import numpy as np

from bmdf.sweeps import Axis, FigureId, SweepSpec, Table, figure_spec, gain_over_direct, run_sweep

# %% [markdown]
# ## Cooperation gain at a fixed throughput
# The gain is the horizontal distance in dB between the direct curve and
# the cooperative curve at a given throughput.

# %%
single = run_sweep(figure_spec("fig3", q_db=10.0))
two = run_sweep(figure_spec("fig5", q_db=10.0))
for level in (1.0, 2.0, 3.0):
    print(f"T = {level} nats: single-layer gain {gain_over_direct(single, level):.3f} dB, "
          f"two-layer gain {gain_over_direct(two, level):.3f} dB")

# %% [markdown]
# ## Correlation surface
# A coarse version of the two-layer correlation surface: the best cell
# sits at or next to zero correlation.

# %%
grid = tuple(np.linspace(0.0, 1.0, 6))
spec = figure_spec("fig7", rho1=grid, samples=20_000)
spec = SweepSpec(spec.figure_id, Axis("rho2", grid), spec.fixed, spec.output_columns)
surf = run_sweep(spec, workers=4)
best = int(np.argmax(surf.column("throughput")))
print(f"best cell: rho1 = {surf.column('rho1')[best]}, rho2 = {surf.column('rho2')[best]}")

# %% [markdown]
# ## Custom sweeps and CSV round trip

# %%
custom = SweepSpec(
    FigureId.CUSTOM,
    Axis("ps_db", (0.0, 10.0, 20.0), "db"),
    {"q_db": 10.0},
    ("ps_db", "direct_throughput", "bm_throughput", "q_min_single"),
)
table = run_sweep(custom)
text = table.to_csv()
print(text)
print("round trip exact:", Table.from_csv(text) == table)
