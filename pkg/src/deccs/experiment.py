"""Per-seed experiment plumbing shared by the CLI, scripts and acceptance tests."""
from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product
from pathlib import Path
from typing import Callable

import numpy as np

from . import metrics
from .algorithm import TERMS, DeccsResult, ablation_config, run_deccs
from .config import AutoencoderConfig, DatasetConfig, RunConfig
from .data import GENERATORS, DataMatrix, load_dataset, z_transform
from .ensemble import EnsembleSpec, run_ensemble
from .neural import AutoEncoder, EpochRecord, TrainConfig, load_checkpoint, pretrain_autoencoder


def load_data(cfg: DatasetConfig, seed: int) -> DataMatrix:
    """Generate or read the data set. Generators get ``seed`` unless the
    config pins one."""
    if cfg.generator is not None:
        params = {"seed": seed, **cfg.params}
        data = GENERATORS[cfg.generator](**params)
    else:
        data = load_dataset(cfg.path, has_labels=cfg.has_labels)
    return z_transform(data) if cfg.z_score else data


def pretrain_config(cfg: AutoencoderConfig) -> TrainConfig:
    return TrainConfig(lr=cfg.lr, momentum=cfg.momentum, batch_size=cfg.batch_size,
                       max_epochs=cfg.max_epochs, patience=cfg.patience)


def prepare_autoencoder(cfg: AutoencoderConfig, X: np.ndarray,
                        rng: np.random.Generator) -> tuple[AutoEncoder, list[EpochRecord]]:
    if cfg.checkpoint is not None and Path(cfg.checkpoint).exists():
        ae, _ = load_checkpoint(cfg.checkpoint)
        if ae.input_dim != X.shape[1]:
            raise ValueError(f"checkpoint expects {ae.input_dim} features, data has {X.shape[1]}")
        return ae, []
    ae = AutoEncoder(cfg.sizes(X.shape[1]), rng)
    return pretrain_autoencoder(ae, X, pretrain_config(cfg), rng)


@dataclass
class SeedOutcome:
    seed: int
    data: DataMatrix
    pretrained: AutoEncoder
    pretrain_trace: list[EpochRecord]
    result: DeccsResult

    def scores(self) -> dict:
        res = self.result
        row = {
            "seed": self.seed,
            "chosen_round": res.chosen_round,
            "stop_reason": res.stop_reason,
            "rounds": len(res.history),
            "agreement": [h["agreement"] for h in res.history],
            "effective_k": metrics.effective_k(res.labels),
        }
        if self.data.labels is not None:
            row["nmi"] = metrics.nmi(res.labels, self.data.labels)
            row["ari"] = metrics.ari(res.labels, self.data.labels)
            row["nmi_per_round"] = [h.get("nmi") for h in res.history]
        return row


def run_seed(cfg: RunConfig, seed: int, deccs_overrides: dict | None = None,
             on_round: Callable[[dict], None] | None = None,
             pretrained: tuple[DataMatrix, AutoEncoder, list[EpochRecord]] | None = None) -> SeedOutcome:
    """Data, pretrained autoencoder and one DECCS run for ``seed``.

    ``pretrained`` lets callers reuse the (deterministic) first two stages
    across several DECCS settings.
    """
    if pretrained is None:
        data = load_data(cfg.dataset, seed)
        rng = np.random.default_rng(seed)
        ae, trace = prepare_autoencoder(cfg.autoencoder, data.values, rng)
    else:
        data, ae, trace = pretrained
    labels = data.labels
    k_default = None if labels is None else data.k
    ensemble = cfg.ensemble.build(k_default)
    deccs_cfg = replace(cfg.deccs, seed=seed, **(deccs_overrides or {}))
    result = run_deccs(data.values, ae, ensemble, deccs_cfg, labels=labels, on_round=on_round)
    return SeedOutcome(seed, data, ae, trace, result)


def initial_member_nmi(outcome: SeedOutcome) -> list[float]:
    """Member NMIs against ground truth in round 0 (the pretrained embedding)."""
    return list(outcome.result.history[0]["member_nmi"])


def final_member_scores(outcome: SeedOutcome, ensemble: EnsembleSpec,
                        rng: np.random.Generator | None = None) -> tuple[list[float], float]:
    """Re-run every member on the full consensus embedding.

    Returns the members' NMI against ground truth and their pairwise agreement.
    """
    rng = np.random.default_rng(outcome.seed) if rng is None else rng
    parts = run_ensemble(ensemble, outcome.result.Z, rng)
    return [metrics.nmi(p, outcome.data.labels) for p in parts], metrics.agreement(parts)


def summarise(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "std": float(v.std()), "n": int(v.size)}


def term_masks() -> list[dict[str, bool]]:
    """The seven non-empty combinations of the three loss terms."""
    masks = []
    for flags in product([False, True], repeat=len(TERMS)):
        if any(flags):
            masks.append(dict(zip(TERMS, flags)))
    return sorted(masks, key=lambda m: (sum(m.values()), [not m[t] for t in TERMS]))


def ablation_overrides(cfg: RunConfig, mask: dict[str, bool]) -> dict:
    ab = ablation_config(cfg.deccs, mask)
    return {"lambda_cons_max": ab.lambda_cons_max, "ce_weight": ab.ce_weight, "lambda_rec": ab.lambda_rec}


def round_floats(obj, digits: int = 6):
    """Recursively round floats to ``digits`` significant digits."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.{digits}g}")
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist(), digits)
    return obj
