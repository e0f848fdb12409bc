# %% [markdown]
# # Command-line interface
#
# Every command prints CSV to stdout, or writes it to `--out`.  The same
# seed gives byte-identical output for any worker count.

# %%
import subprocess
import sys


def bmdf(*args):
    res = subprocess.run([sys.executable, "-m", "bmdf", *args], capture_output=True, text=True)
    return res.returncode, res.stdout


# %%
print(bmdf("thresholds", "--ps-db", "10", "--q-db", "-3", "--layers", "2")[1])
print(bmdf("audit", "conjecture1", "--ps-db", "10", "--pr-db", "10", "--q-db", "20")[1])
print(bmdf("oracle-check", "--ps-db", "10", "--q-db", "20", "--samples", "200000")[1])

# %% [markdown]
# Usage errors exit with status 2, invalid parameter values with status 1.

# %%
print("unknown flag ->", bmdf("thresholds", "--bogus")[0])
print("negative tolerance ->", bmdf("thresholds", "--tol", "-1")[0])

# %%
a = bmdf("sweep", "--axis", "ps-db", "--grid", "0:20:5", "--columns", "bm_throughput", "--workers", "1")[1]
b = bmdf("sweep", "--axis", "ps-db", "--grid", "0:20:5", "--columns", "bm_throughput", "--workers", "4")[1]
print("byte-identical:", a == b)
