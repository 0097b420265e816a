"""End-to-end acceptance checks, one test (and one PASS/FAIL line) per criterion.

Thresholds are pinned here; the DECCS runs are cached per (config, seed,
override) so criteria sharing a setting share the work.
"""
import json
import time
from functools import lru_cache

import numpy as np
import pytest

from deccs import metrics
from deccs.cli import main
from deccs.config import RunConfig
from deccs.data import make_blobs, make_two_rings
from deccs.ensemble import agglomerative, default_ensemble, gmm, knn_affinity, normalized_laplacian, run_ensemble, spectral
from deccs.experiment import ablation_overrides, final_member_scores, load_data, prepare_autoencoder, run_seed
from deccs.neural import encode, gradcheck_suite
from oracles import agreement as agreement_oracle
from oracles import anmi as anmi_oracle
from oracles import ari_pairs, nmi as nmi_oracle

SYNTH_SEEDS = list(range(10))
ABLATION_SEEDS = list(range(5))
SMALL_SEEDS = [0, 1, 2]

CONS_CE = {"cons": True, "ce": True, "rec": False}
CONS_ONLY = {"cons": True, "ce": False, "rec": False}


@lru_cache(maxsize=None)
def config(name: str) -> RunConfig:
    return RunConfig.load(f"configs/{name}.json")


@lru_cache(maxsize=None)
def pretrained(name: str, seed: int):
    cfg = config(name)
    data = load_data(cfg.dataset, seed)
    ae, trace = prepare_autoencoder(cfg.autoencoder, data.values, np.random.default_rng(seed))
    return data, ae, trace


@lru_cache(maxsize=None)
def outcome(name: str, seed: int, overrides: tuple = ()):
    return run_seed(config(name), seed, dict(overrides), pretrained=pretrained(name, seed))


def masked(name: str, mask: dict) -> tuple:
    return tuple(sorted(ablation_overrides(config(name), mask).items()))


def nmi_of(o) -> float:
    return metrics.nmi(o.result.labels, o.data.labels)


@pytest.mark.slow
def test_c1_synth_end_to_end(criterion):
    start = time.perf_counter()
    scores = [nmi_of(outcome("synth", s)) for s in SYNTH_SEEDS]
    minutes = (time.perf_counter() - start) / 60
    mean, std = float(np.mean(scores)), float(np.std(scores))
    ok = mean >= 0.95 and minutes < 15
    criterion("C1 SYNTH end-to-end", ok,
              f"mean NMI {mean:.4f} +- {std:.4f} over {len(scores)} seeds (need >= 0.95), {minutes:.1f} min (< 15)")
    assert ok


@pytest.mark.slow
def test_c2_ablation_ordering(criterion):
    start = time.perf_counter()
    full = np.mean([nmi_of(outcome("synth", s)) for s in ABLATION_SEEDS])
    cons_ce = np.mean([nmi_of(outcome("synth", s, masked("synth", CONS_CE))) for s in ABLATION_SEEDS])
    cons_only = np.mean([nmi_of(outcome("synth", s, masked("synth", CONS_ONLY))) for s in ABLATION_SEEDS])
    minutes = (time.perf_counter() - start) / 60
    checks = {
        f"cons+CE {cons_ce:.4f} >= 0.90": cons_ce >= 0.90,
        f"cons-only {cons_only:.4f} <= 0.50": cons_only <= 0.50,
        f"full {full:.4f} >= cons+CE - 0.05": full >= cons_ce - 0.05,
        f"{minutes:.1f} min < 30": minutes < 30,
    }
    ok = all(checks.values())
    criterion("C2 SYNTH ablation ordering", ok,
              "; ".join(f"{k} {'ok' if v else 'MISSED'}" for k, v in checks.items()))
    assert ok


@pytest.mark.slow
def test_c3_center_collision(criterion):
    merged, separated = [], []
    for s in SMALL_SEEDS:
        o = outcome("collision", s, masked("collision", CONS_ONLY))
        merged.append((nmi_of(o), metrics.effective_k(o.result.labels)))
        separated.append(nmi_of(outcome("collision", s, masked("collision", CONS_CE))))
    merge_ok = all(v < 0.2 or k < 2 for v, k in merged)
    sep_ok = all(v >= 0.95 for v in separated)
    criterion("C3 center collision", merge_ok and sep_ok,
              "cons-only (nmi, effective k) " + ", ".join(f"({v:.3f}, {k})" for v, k in merged)
              + " need nmi < 0.2 or k < 2; cons+CE nmi " + ", ".join(f"{v:.3f}" for v in separated)
              + " need >= 0.95")
    assert merge_ok and sep_ok


@pytest.mark.slow
def test_c4_nonlinear_clusters(criterion):
    ensemble = default_ensemble(2, linkage="single")
    rows, ok = [], True
    for s in SMALL_SEEDS:
        o = outcome("two_rings", s)
        Z0 = encode(o.pretrained, o.data.values)
        km, sc, agg, gm = [metrics.nmi(p, o.data.labels)
                           for p in run_ensemble(ensemble, Z0, np.random.default_rng(s))]
        start_ok = km < 0.2 and gm < 0.2 and sc == 1.0 and agg == 1.0
        final, agree = final_member_scores(o, ensemble)
        end_ok = min(final) >= 0.95 and agree >= 0.95
        ok &= start_ok and end_ok
        rows.append(f"seed {s}: start KM {km:.2f} SC {sc:.2f} AGG {agg:.2f} GMM {gm:.2f}, "
                    f"end min member NMI {min(final):.3f} agreement {agree:.3f}")
    criterion("C4 two-rings consensus", ok, "; ".join(rows))
    assert ok


@pytest.mark.slow
def test_c5_agreement_trend(criterion):
    low = (("lambda_cons_max", 0.1),)
    traces = {
        10.0: [[h["agreement"] for h in outcome("synth", s).result.history] for s in ABLATION_SEEDS],
        0.1: [[h["agreement"] for h in outcome("synth", s, low).result.history] for s in ABLATION_SEEDS],
    }
    final = {lam: float(np.mean([t[-1] for t in tr])) for lam, tr in traces.items()}
    first = {lam: float(np.mean([t[0] for t in tr])) for lam, tr in traces.items()}
    ok = final[10.0] > final[0.1] and all(final[l] >= first[l] for l in traces)
    criterion("C5 agreement trend", ok,
              f"final agreement lambda_cons=10: {final[10.0]:.4f} vs 0.1: {final[0.1]:.4f}; "
              f"round 0 -> final: 10: {first[10.0]:.4f} -> {final[10.0]:.4f}, 0.1: {first[0.1]:.4f} -> {final[0.1]:.4f}")
    assert ok


def test_c6_metric_oracles(criterion):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        a = rng.integers(0, int(rng.integers(1, 11)), n)
        b = rng.integers(0, int(rng.integers(1, 11)), n)
        worst = max(worst, abs(metrics.nmi(a, b) - nmi_oracle(a, b)), abs(metrics.ari(a, b) - ari_pairs(a, b)))
    worst_ens, worst_obj = 0.0, 0.0
    for _ in range(200):
        n = int(rng.integers(2, 201))
        parts = [rng.integers(0, int(rng.integers(1, 11)), n) for _ in range(int(rng.integers(2, 6)))]
        worst_ens = max(worst_ens, abs(metrics.agreement(parts) - agreement_oracle(parts)),
                        abs(metrics.anmi(parts[0], parts) - anmi_oracle(parts[0], parts)))
        worst_obj = max(worst_obj, abs(metrics.agreement(parts) - metrics.consensus_objective(parts)))
    ok = max(worst, worst_ens) <= 1e-10 and worst_obj <= 1e-12
    criterion("C6 metric oracles", ok,
              f"max |nmi/ari - oracle| {worst:.1e}, agreement/anmi {worst_ens:.1e} (<= 1e-10); "
              f"agreement vs objective {worst_obj:.1e} (<= 1e-12)")
    assert ok


def test_c7_gradients(criterion):
    start = time.perf_counter()
    reports = gradcheck_suite(restarts=20, seed=0, sizes=(3, 4, 2), tolerance=1e-4, step=1e-5)
    seconds = time.perf_counter() - start
    worst = {term: max(r.max_rel_error for r in runs) for term, runs in reports.items()}
    ok = all(r.passed for runs in reports.values() for r in runs) and seconds < 60
    criterion("C7 gradient verification", ok,
              ", ".join(f"{t} {e:.1e}" for t, e in worst.items()) + f" (< 1e-4, 20 restarts), {seconds:.1f} s")
    assert ok


def test_c8_clusterer_recovery(criterion):
    blob_ok = True
    for seed in range(10):
        data = make_blobs(seed=seed)
        parts = run_ensemble(default_ensemble(4), data.values, np.random.default_rng(seed))
        blob_ok &= all(metrics.nmi(p, data.labels) == 1.0 for p in parts)
    ring_ok = True
    for seed in range(3):
        data = make_two_rings(seed=seed)
        ring_ok &= metrics.nmi(agglomerative(data.values, 2, "single"), data.labels) == 1.0
        ring_ok &= metrics.nmi(spectral(data.values, 2, rng=np.random.default_rng(seed)), data.labels) == 1.0
    ll_ok, eig_ok = True, True
    for seed in range(5):
        data = make_blobs(k=3, std=1.5, spacing=3.0, seed=seed)
        _, trace, _ = gmm(data.values, 3, rng=np.random.default_rng(seed), tol=0.0, max_iter=50, full_output=True)
        ll_ok &= bool(np.all(np.diff(trace) >= -1e-8))
        evals = np.linalg.eigvalsh(normalized_laplacian(knn_affinity(data.values, 10)))
        eig_ok &= bool(evals.min() >= -1e-8 and evals.max() <= 2 + 1e-8)
    ok = blob_ok and ring_ok and ll_ok and eig_ok
    criterion("C8 clusterer recovery", ok,
              f"blobs all members NMI 1 (10 seeds): {blob_ok}; rings SC+AGG(single) NMI 1: {ring_ok}; "
              f"GMM log-likelihood monotone: {ll_ok}; Laplacian spectrum in [0, 2]: {eig_ok}")
    assert ok


def test_c9_determinism(criterion, tmp_path):
    args = ["run", "--config", "configs/synth.json", "--seeds", "3", "--out", str(tmp_path / "run"),
            "--set", "deccs.max_rounds=2"]
    outputs = []
    for _ in range(2):
        assert main(args) == 0
        outputs.append(tuple((tmp_path / "run" / f).read_bytes()
                             for f in ("report.json", "seed_3/partition.csv")))
    ok = outputs[0] == outputs[1]
    report = json.loads(outputs[0][0])
    criterion("C9 determinism", ok,
              f"report.json and partition.csv byte-identical across two runs (nmi {report['seeds'][0]['nmi']})")
    assert ok
