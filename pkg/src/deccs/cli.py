"""Command-line front end: ``deccs {synth,pretrain,run,ablate,eval,gradcheck}``."""
from __future__ import annotations

import argparse
import csv
import inspect
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .config import ConfigError, RunConfig, merge
from .data import GENERATORS, DataMatrix, save_dataset
from .experiment import (
    ablation_overrides,
    load_data,
    prepare_autoencoder,
    round_floats,
    run_seed,
    summarise,
    term_masks,
)
from .neural import TrainingError, gradcheck_suite, reconstruction_loss, save_checkpoint, encode, decode
from .plotting import write_scatter

log = logging.getLogger("deccs")


# ---------------------------------------------------------------------------
# helpers

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _dotted(assignments: list[str]) -> dict:
    """``["deccs.max_rounds=3", ...]`` -> nested override dict."""
    out: dict = {}
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = _parse_value(value)
    return out


def load_config(args) -> RunConfig:
    blob = {}
    if getattr(args, "config", None):
        try:
            blob = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
    overrides = _dotted(getattr(args, "set", None) or [])
    if getattr(args, "seeds", None):
        overrides["seeds"] = args.seeds
    if getattr(args, "out", None):
        overrides["out"] = args.out
    return RunConfig.from_dict(merge(blob, overrides))


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(round_floats(obj), indent=2, sort_keys=True) + "\n")


def _write_matrix(path: Path, M: np.ndarray, prefix: str) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{prefix}{j}" for j in range(M.shape[1])])
        for row in M:
            w.writerow([repr(float(v)) for v in row])


def _write_labels(path: Path, labels: np.ndarray) -> None:
    path.write_text("label\n" + "".join(f"{int(v)}\n" for v in labels))


def read_labels(path: str | Path) -> np.ndarray:
    """One label per row; with several columns the last one is used."""
    rows = [r for r in csv.reader(Path(path).read_text().splitlines()) if r]
    if rows and not rows[0][-1].strip().lstrip("-").isdigit():
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no labels")
    try:
        return np.array([int(r[-1]) for r in rows], dtype=np.int64)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# commands

def cmd_synth(args) -> int:
    gen = GENERATORS[args.gen]
    accepted = inspect.signature(gen).parameters
    params = {"seed": args.seed}
    if args.n is not None:
        key = next(k for k in accepted if k.startswith("n_per"))
        params[key] = args.n
    if args.noise is not None:
        if "noise" not in accepted:
            raise ConfigError(f"generator {args.gen!r} has no noise parameter")
        params["noise"] = args.noise
    if args.k is not None:
        if "k" not in accepted:
            raise ConfigError(f"generator {args.gen!r} has a fixed cluster count")
        params["k"] = args.k
    data = gen(**params)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(data, out)
    print(f"wrote {out}: N={data.N} D={data.D} k={data.k}")
    return 0


def cmd_pretrain(args) -> int:
    cfg = load_config(args)
    out = Path(cfg.out)
    status = 0
    for seed in cfg.seeds:
        data = load_data(cfg.dataset, seed)
        rng = np.random.default_rng(seed)
        try:
            ae, trace = prepare_autoencoder(cfg.autoencoder, data.values, rng)
        except TrainingError as exc:
            print(f"seed {seed}: pretraining failed: {exc}", file=sys.stderr)
            status = 1
            continue
        seed_dir = out / f"seed_{seed}"
        seed_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(ae, seed_dir / "checkpoint.json", seed_lineage=[seed],
                        extra={"sizes": cfg.autoencoder.sizes(data.D)})
        with (seed_dir / "pretrain_trace.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "eval_loss", "lr"])
            for rec in trace:
                w.writerow([rec.epoch, f"{rec.train_loss:.6g}", f"{rec.eval_loss:.6g}", f"{rec.lr:.6g}"])
        mse = reconstruction_loss(data.values, decode(ae, encode(ae, data.values)))
        print(f"seed {seed}: reconstruction MSE {mse:.6g} after {len(trace)} epochs")
    return status


def _seed_artifacts(seed_dir: Path, outcome, plot: bool) -> None:
    res = outcome.result
    seed_dir.mkdir(parents=True, exist_ok=True)
    with (seed_dir / "rounds.jsonl").open("w") as fh:
        for h in res.history:
            fh.write(json.dumps(round_floats(h), sort_keys=True) + "\n")
    _write_matrix(seed_dir / "embedding.csv", res.Z, "z")
    _write_labels(seed_dir / "partition.csv", res.labels)
    save_checkpoint(res.encoder, seed_dir / "checkpoint.json", seed_lineage=[outcome.seed],
                    extra={"chosen_round": res.chosen_round})
    if plot:
        if res.Z.shape[1] == 2:
            write_scatter(seed_dir / "scatter.svg", res.Z, res.labels, f"seed {outcome.seed}")
        else:
            log.info("embedding is %d-dimensional; skipping scatter plot", res.Z.shape[1])


def cmd_run(args) -> int:
    cfg = load_config(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    per_seed, failed = [], []
    for seed in cfg.seeds:
        try:
            outcome = run_seed(cfg, seed, on_round=lambda h, s=seed: log.info(
                "seed %d round %d agreement %.4f", s, h["t"], h["agreement"]))
        except Exception as exc:  # a failing seed is reported, the others still run
            log.error("seed %d failed: %s", seed, exc)
            failed.append({"seed": seed, "error": str(exc)})
            continue
        _seed_artifacts(out / f"seed_{seed}", outcome, cfg.plot)
        row = outcome.scores()
        per_seed.append(row)
        print(f"seed {seed}: " + " ".join(f"{k} {row[k]:.4f}" for k in ("nmi", "ari") if k in row)
              + f" rounds {row['rounds']} chosen {row['chosen_round']}")
    report = {"config": cfg.to_dict(), "seeds": per_seed, "failed": failed, "aggregate": {}}
    for key in ("nmi", "ari"):
        values = [r[key] for r in per_seed if key in r]
        if values:
            report["aggregate"][key] = summarise(values)
    _dump_json(out / "report.json", report)
    for key, agg in report["aggregate"].items():
        print(f"{key}: {agg['mean']:.4f} +- {agg['std']:.4f} over {agg['n']} seeds")
    return 1 if failed else 0


def cmd_ablate(args) -> int:
    cfg = load_config(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    masks = term_masks()
    scores = {i: {"nmi": [], "ari": [], "effective_k": []} for i in range(len(masks))}
    status = 0
    for seed in cfg.seeds:
        data = load_data(cfg.dataset, seed)
        rng = np.random.default_rng(seed)
        ae, trace = prepare_autoencoder(cfg.autoencoder, data.values, rng)
        for i, mask in enumerate(masks):
            try:
                outcome = run_seed(cfg, seed, ablation_overrides(cfg, mask), pretrained=(data, ae, trace))
            except Exception as exc:
                log.error("seed %d mask %s failed: %s", seed, mask, exc)
                status = 1
                continue
            row = outcome.scores()
            for key in scores[i]:
                if key in row:
                    scores[i][key].append(row[key])
            log.info("seed %d %s nmi %.4f", seed, mask, row.get("nmi", float("nan")))
    with (out / "ablation.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cons", "ce", "rec", "nmi_mean", "nmi_std", "ari_mean", "ari_std", "effective_k_mean", "n_seeds"])
        for i, mask in enumerate(masks):
            s = scores[i]
            cells = [int(mask[t]) for t in ("cons", "ce", "rec")]
            for key in ("nmi", "ari", "effective_k"):
                if s[key]:
                    agg = summarise(s[key])
                    cells += [f"{agg['mean']:.6g}"] + ([f"{agg['std']:.6g}"] if key != "effective_k" else [])
                else:
                    cells += [""] + ([""] if key != "effective_k" else [])
            cells.append(len(s["effective_k"]))
            w.writerow(cells)
            print(",".join(str(c) for c in cells))
    return status


def cmd_eval(args) -> int:
    parts = [read_labels(p) for p in args.files]
    n = parts[0].size
    for path, p in zip(args.files, parts):
        if p.size != n:
            raise ValueError(f"{path} has {p.size} labels, {args.files[0]} has {n}")
    ref = parts[0]
    for path, p in zip(args.files[1:], parts[1:]):
        print(f"{path}: nmi {metrics.nmi(ref, p):.6f} ari {metrics.ari(ref, p):.6f}")
    if len(parts) >= 2:
        print(f"agreement {metrics.agreement(parts):.6f}")
    return 0


def cmd_gradcheck(args) -> int:
    reports = gradcheck_suite(restarts=args.restarts, seed=args.seed, tolerance=args.tolerance,
                              flip_sign=args.inject_fault)
    ok = True
    for term, runs in reports.items():
        worst = max(r.max_rel_error for r in runs)
        passed = all(r.passed for r in runs)
        ok &= passed
        print(f"{term:9s} {'PASS' if passed else 'FAIL'} max rel error {worst:.3e} over {len(runs)} restarts")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="store_true")

    configured = argparse.ArgumentParser(add_help=False, parents=[common])
    configured.add_argument("--config", help="JSON run config")
    configured.add_argument("--seeds", "--seed", type=int, nargs="+", help="override config seeds")
    configured.add_argument("--out", help="output directory")
    configured.add_argument("--set", action="append", metavar="KEY=VALUE",
                            help="override a config value, e.g. deccs.max_rounds=5")

    p = argparse.ArgumentParser(prog="deccs", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic data set as CSV")
    s.add_argument("--gen", required=True, choices=sorted(GENERATORS))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int, help="points per cluster")
    s.add_argument("--k", type=int, help="cluster count (blobs only)")
    s.add_argument("--noise", type=float)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("pretrain", parents=[configured], help="pretrain and checkpoint the autoencoder")
    s.set_defaults(func=cmd_pretrain)
    s = sub.add_parser("run", parents=[configured], help="run DECCS for every seed")
    s.set_defaults(func=cmd_run)
    s = sub.add_parser("ablate", parents=[configured], help="loss-term ablation table")
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("eval", parents=[common], help="compare label files")
    s.add_argument("files", nargs="+")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient checks")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--restarts", type=int, default=20)
    s.add_argument("--tolerance", type=float, default=1e-4)
    s.add_argument("--inject-fault", action="store_true", help="flip the analytic gradient's sign")
    s.set_defaults(func=cmd_gradcheck)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
