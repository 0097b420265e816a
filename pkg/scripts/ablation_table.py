"""Loss-term ablation on SYNTH: mean +- std NMI for every non-empty term combination.

    python scripts/ablation_table.py --seeds 0 1 2 3 4 --out runs/ablation.csv
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from deccs import metrics
from deccs.config import RunConfig
from deccs.experiment import ablation_overrides, load_data, prepare_autoencoder, run_seed, term_masks

ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
ap.add_argument("--config", default="configs/synth.json")
ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
ap.add_argument("--out", default="runs/ablation.csv")
args = ap.parse_args()

cfg = RunConfig.load(args.config)
masks = term_masks()
nmis = {i: [] for i in range(len(masks))}
for seed in args.seeds:
    data = load_data(cfg.dataset, seed)
    ae, trace = prepare_autoencoder(cfg.autoencoder, data.values, np.random.default_rng(seed))
    for i, mask in enumerate(masks):
        o = run_seed(cfg, seed, ablation_overrides(cfg, mask), pretrained=(data, ae, trace))
        nmis[i].append(metrics.nmi(o.result.labels, data.labels))
        print(f"seed {seed} {'+'.join(t for t in mask if mask[t]):12s} nmi {nmis[i][-1]:.3f}", flush=True)

Path(args.out).parent.mkdir(parents=True, exist_ok=True)
with open(args.out, "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["cons", "ce", "rec", "nmi_mean", "nmi_std"])
    print("\ncons  ce  rec   NMI")
    for i, mask in enumerate(masks):
        v = np.array(nmis[i])
        w.writerow([int(mask["cons"]), int(mask["ce"]), int(mask["rec"]), f"{v.mean():.4f}", f"{v.std():.4f}"])
        flags = "  ".join("x" if mask[t] else "." for t in ("cons", "ce", "rec"))
        print(f" {flags}     {v.mean():.2f} +- {v.std():.2f}")
