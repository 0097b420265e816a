"""Agreement per round on SYNTH for a weak and a strong consensus weight.

Writes one CSV row per (lambda_cons, seed, round).

    python scripts/agreement_trace.py --lambdas 0.1 10 --out runs/agreement.csv
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from deccs.config import RunConfig
from deccs.experiment import load_data, prepare_autoencoder, run_seed

ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
ap.add_argument("--config", default="configs/synth.json")
ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
ap.add_argument("--lambdas", type=float, nargs="+", default=[0.1, 10.0])
ap.add_argument("--out", default="runs/agreement.csv")
args = ap.parse_args()

cfg = RunConfig.load(args.config)
traces = {lam: [] for lam in args.lambdas}
for seed in args.seeds:
    data = load_data(cfg.dataset, seed)
    ae, trace = prepare_autoencoder(cfg.autoencoder, data.values, np.random.default_rng(seed))
    for lam in args.lambdas:
        o = run_seed(cfg, seed, {"lambda_cons_max": lam}, pretrained=(data, ae, trace))
        traces[lam].append([h["agreement"] for h in o.result.history])

Path(args.out).parent.mkdir(parents=True, exist_ok=True)
with open(args.out, "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["lambda_cons", "seed", "t", "agreement"])
    for lam, runs in traces.items():
        for seed, tr in zip(args.seeds, runs):
            w.writerows([lam, seed, t, f"{a:.6f}"] for t, a in enumerate(tr))
        mean = np.mean(runs, axis=0)
        print(f"lambda_cons {lam:5g}: " + " ".join(f"{a:.3f}" for a in mean))
