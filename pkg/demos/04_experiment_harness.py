"""
A reproducible coverage experiment
==================================

Run a small Monte Carlo grid through the harness, write plot-ready CSV
files plus a manifest, and read back the aggregates.  The same config can
be run from the shell with ``plantedbisection experiment --config``.
"""

# %%
import csv
import json
import tempfile
from pathlib import Path

from plantedbisection.harness import ExperimentConfig, run_experiment

config = {
    "task": "coverage",
    "n_grid": [3, 4, 5],
    "params": {"kind": "pq", "values": [[0.8, 0.2], [0.6, 0.4]]},
    "replicates": 100,
    "base_seed": 2024,
    "level": {"rule": "bn_fraction", "value": 0.1},
    "k_n": {"rule": "fixed", "value": 1},
}
cfg = ExperimentConfig.from_dict(config)

# %%
out = Path(tempfile.mkdtemp(prefix="pbm-"))
result = run_experiment(cfg, out)
print("wrote", sorted(p.name for p in out.iterdir()))
print("config hash", json.loads((out / "manifest.json").read_text())["config_sha256"][:16])

# %%
# Coverage of the credible set D and its 1-enlargement C, with Wilson intervals.
with open(out / "aggregates.csv") as fh:
    for row in csv.DictReader(fh):
        if row["statistic"] in ("theta0_in_D", "theta0_in_C"):
            print(f"n={row['n']} p={row['p']} q={row['q']} {row['statistic']}: "
                  f"{float(row['mean']):.3f} [{float(row['ci_low']):.3f}, "
                  f"{float(row['ci_high']):.3f}]  bound {float(row['bound']):.3f}")
