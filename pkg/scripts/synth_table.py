"""SYNTH end-to-end: per-seed NMI/ARI of the consensus clustering plus mean +- std.

    python scripts/synth_table.py --seeds 0 1 2 3 4 5 6 7 8 9
"""
import argparse

import numpy as np

from deccs.config import RunConfig
from deccs.experiment import run_seed

ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
ap.add_argument("--config", default="configs/synth.json")
ap.add_argument("--seeds", type=int, nargs="+")
args = ap.parse_args()

cfg = RunConfig.load(args.config)
rows = []
for seed in args.seeds or cfg.seeds:
    row = run_seed(cfg, seed).scores()
    rows.append(row)
    print(f"seed {seed}: nmi {row['nmi']:.4f} ari {row['ari']:.4f} chosen round {row['chosen_round']}", flush=True)
for key in ("nmi", "ari"):
    v = np.array([r[key] for r in rows])
    print(f"{key}: {v.mean():.3f} +- {v.std():.3f}")
