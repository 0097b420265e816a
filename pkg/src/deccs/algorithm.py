"""The DECCS loop: sample, cluster, approximate with classifiers, update the embedding.

One round embeds a random sample, runs every ensemble member on it, fits a
linear softmax classifier per base partition and then trains encoder and
classifiers jointly on

    sum_i lambda_i (CE_i + w(t) cons_i) + lambda_rec rec

over mini-batches of the full data set. Rounds repeat until the ensemble
agreement stabilises or ``max_rounds`` is reached.
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from . import metrics
from .data import resolve_sample_size, sample_without_replacement, split_train_eval
from .ensemble import EnsembleSpec, compute_centers, kmeans, run_ensemble
from .neural import (
    AutoEncoder,
    LinearClassifier,
    LossWeights,
    OptimizerState,
    PartitionTarget,
    TrainConfig,
    TrainingError,
    classifier_forward,
    combined_loss,
    encode,
    pretrain_classifiers,
    sgd_step,
    sigmoid_rampup,
)

log = logging.getLogger(__name__)

STOP_CONVERGED = "agreement_converged"
STOP_MAX_ROUNDS = "max_rounds"


@dataclass
class DeccsConfig:
    tau: float | None = None
    n: int | float | None = None
    lambda_rec: float = 1.0
    lambda_cons_max: float = 10.0
    ramp_length: int | None = None
    max_rounds: int = 10
    max_iters: int = 500
    batch_size: int = 256
    rep_lr: float = 0.01
    rep_lr_decay: float = 0.9
    classifier_lr: float = 0.01
    classifier_epochs: int = 200
    momentum: float = 0.9
    patience: int = 10
    eval_every: int = 20
    eval_fraction: float = 0.1
    use_alpha: bool = True
    propagate_labels: bool = True
    ce_weight: float = 1.0
    consensus_k: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_rounds < 1 or self.max_iters < 1 or self.batch_size < 1:
            raise ValueError("max_rounds, max_iters and batch_size must be positive")
        if self.tau is not None and self.tau < 0:
            raise ValueError("tau must be non-negative")

    @property
    def ramp(self) -> int:
        return self.ramp_length or self.max_rounds

    def classifier_train_config(self) -> TrainConfig:
        return TrainConfig(lr=self.classifier_lr, momentum=self.momentum, batch_size=self.batch_size,
                           max_epochs=self.classifier_epochs, patience=self.patience,
                           eval_fraction=self.eval_fraction)


@dataclass
class RoundState:
    t: int
    sample: np.ndarray
    Z_sample: np.ndarray
    partitions: list[np.ndarray]
    classifiers: list[LinearClassifier]
    centers: list[np.ndarray]
    lambdas: np.ndarray
    agreement: float
    propagated: list[np.ndarray]
    encoder_params: list[np.ndarray]
    metrics: dict = field(default_factory=dict)
    losses: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def summary(self) -> dict:
        return {
            "t": self.t,
            "agreement": self.agreement,
            "lambda_i": [float(v) for v in self.lambdas],
            "k_i": [int(p.max()) + 1 for p in self.partitions],
            "losses": self.losses,
            **self.metrics,
            "wall_time": self.wall_time,
        }


@dataclass
class DeccsResult:
    encoder: AutoEncoder
    Z: np.ndarray
    labels: np.ndarray
    history: list[dict]
    stop_reason: str
    chosen_round: int
    final_state: RoundState


def should_stop(agreements: list[float], t: int, config: DeccsConfig) -> bool:
    """(t > 0) and (|a_t - a_{t-1}| < tau or t == T)."""
    if t <= 0:
        return False
    if t >= config.max_rounds:
        return True
    if config.tau is None or len(agreements) < 2:
        return False
    return abs(agreements[t] - agreements[t - 1]) < config.tau


def _ground_truth_metrics(partitions, sample, labels, consensus=None) -> dict:
    if labels is None:
        return {}
    truth = labels[sample]
    out = {"member_nmi": [metrics.nmi(p, truth) for p in partitions]}
    if consensus is not None:
        out["nmi"] = metrics.nmi(consensus, labels)
        out["ari"] = metrics.ari(consensus, labels)
    return out


def prepare_round(t: int, X: np.ndarray, ae: AutoEncoder, ensemble: EnsembleSpec,
                  config: DeccsConfig, rng: np.random.Generator,
                  labels: np.ndarray | None = None) -> RoundState:
    """Sample, embed, cluster and fit the per-partition classifiers."""
    start = time.perf_counter()
    N = X.shape[0]
    sample = sample_without_replacement(N, resolve_sample_size(N, config.n), rng)
    Z_sample = encode(ae, X[sample])
    partitions = run_ensemble(ensemble, Z_sample, rng)
    d = ae.embedding_dim
    classifiers = [LinearClassifier(d, int(p.max()) + 1, rng) for p in partitions]
    pretrain_classifiers(classifiers, Z_sample, partitions, config.classifier_train_config(), rng)
    centers = [compute_centers(Z_sample, p) for p in partitions]
    Z_all = encode(ae, X)
    propagated = []
    for g, p in zip(classifiers, partitions):
        full = g.predict(Z_all)
        full[sample] = p
        propagated.append(full)
    state = RoundState(
        t=t,
        sample=sample,
        Z_sample=Z_sample,
        partitions=partitions,
        classifiers=classifiers,
        centers=centers,
        lambdas=metrics.lambda_weights(partitions),
        agreement=metrics.agreement(partitions),
        propagated=propagated,
        encoder_params=[p.copy() for p in ae.encoder.params],
    )
    if labels is not None:
        state.metrics = _ground_truth_metrics(partitions, sample, labels,
                                              metrics.canonical_labels(classifiers[0].predict(Z_all)))
    state.wall_time = time.perf_counter() - start
    return state


def _batch_targets(state: RoundState, rows: np.ndarray, Z: np.ndarray, in_sample: np.ndarray,
                   config: DeccsConfig) -> list[PartitionTarget]:
    """Labels, CE mask and frozen confidences for one mini-batch.

    Sampled rows keep their base labels; the rest take the current classifier
    argmax (refreshed every batch).
    """
    sampled = in_sample[rows]
    targets = []
    for g, full, centers in zip(state.classifiers, state.propagated, state.centers):
        probs = classifier_forward(g, Z)
        lab = full[rows].copy()
        if config.propagate_labels:
            free = ~sampled
            lab[free] = probs[free].argmax(axis=1)
            full[rows[free]] = lab[free]
            cons_rows = np.ones(rows.size, bool)
        else:
            cons_rows = sampled
        alphas = probs[np.arange(rows.size), lab] if config.use_alpha else np.ones(rows.size)
        alphas = np.where(cons_rows, alphas, 0.0)
        targets.append(PartitionTarget(lab, centers, sampled, alphas))
    return targets


def loss_weights(state: RoundState, config: DeccsConfig) -> LossWeights:
    ramp = sigmoid_rampup(state.t, config.ramp, config.lambda_cons_max)
    return LossWeights(lambda_rec=config.lambda_rec, lambda_cons_max=config.lambda_cons_max,
                       lambdas=state.lambdas, ramp=ramp, ce_weight=config.ce_weight)


def update_representation(state: RoundState, X: np.ndarray, ae: AutoEncoder, config: DeccsConfig,
                          rng: np.random.Generator) -> dict:
    """Up to ``max_iters`` joint SGD steps on encoder, decoder and classifiers.

    Early stopping checks the loss on a held-out slice of rows every
    ``eval_every`` iterations and restores the best parameters.
    """
    N = X.shape[0]
    weights = loss_weights(state, config)
    in_sample = np.zeros(N, bool)
    in_sample[state.sample] = True
    train_rows, eval_rows = split_train_eval(np.arange(N), config.eval_fraction, rng)
    params = ae.params + [p for g in state.classifiers for p in g.params]
    opt = OptimizerState(config.rep_lr * config.rep_lr_decay ** state.t, config.momentum)

    def eval_loss() -> float:
        Z = encode(ae, X[eval_rows])
        targets = _batch_targets(state, eval_rows, Z, in_sample, config)
        return combined_loss(X[eval_rows], ae, state.classifiers, targets, weights)[0]

    best = eval_loss()
    best_params = [p.copy() for p in params]
    checks_since_best = 0
    it = 0
    sums = {"total": 0.0, "ce": 0.0, "cons": 0.0, "rec": 0.0}
    stopped_early = False
    while it < config.max_iters and not stopped_early:
        perm = train_rows[rng.permutation(train_rows.size)]
        for start in range(0, perm.size, config.batch_size):
            rows = perm[start:start + config.batch_size]
            Xb = X[rows]
            targets = _batch_targets(state, rows, encode(ae, Xb), in_sample, config)
            total, parts, ae_grads, clf_grads = combined_loss(Xb, ae, state.classifiers, targets, weights,
                                                              with_grads=True)
            if not np.isfinite(total):
                raise TrainingError(f"round {state.t}: loss diverged at iteration {it}")
            sgd_step(params, ae_grads + [g for pair in clf_grads for g in pair], opt)
            sums["total"] += total
            sums["ce"] += float(np.dot(weights.lambdas, parts.ce))
            sums["cons"] += float(np.dot(weights.lambdas, parts.cons))
            sums["rec"] += parts.rec
            it += 1
            if it % config.eval_every == 0:
                current = eval_loss()
                if current < best - 1e-12:
                    best, checks_since_best = current, 0
                    best_params = [p.copy() for p in params]
                else:
                    checks_since_best += 1
                    if checks_since_best >= config.patience:
                        stopped_early = True
                        break
            if it >= config.max_iters:
                break
    final = eval_loss()
    if final > best:
        for p, b in zip(params, best_params):
            p[...] = b
    stats = {k: v / max(it, 1) for k, v in sums.items()}
    stats.update(iterations=it, ramp=weights.ramp, lr=opt.lr, eval_loss=min(best, final))
    return stats


def run_round(state_t: int, X: np.ndarray, ae: AutoEncoder, ensemble: EnsembleSpec, config: DeccsConfig,
              rng: np.random.Generator, labels: np.ndarray | None = None) -> RoundState:
    """Prepare round ``state_t`` and run its representation update (mutates ``ae``)."""
    state = prepare_round(state_t, X, ae, ensemble, config, rng, labels)
    start = time.perf_counter()
    state.losses = update_representation(state, X, ae, config, rng)
    state.wall_time += time.perf_counter() - start
    return state


def extract_consensus(ae: AutoEncoder, X: np.ndarray, state: RoundState, ensemble: EnsembleSpec,
                      config: DeccsConfig, rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Embed all of X and label it with the first member's classifier (or k-means
    on the embedding when the members disagree on k)."""
    Z = encode(ae, X)
    ks = ensemble.ks
    if all(k == ks[0] for k in ks):
        return Z, metrics.canonical_labels(state.classifiers[0].predict(Z))
    if config.consensus_k is None:
        raise ValueError("members use different k; set consensus_k")
    rng = np.random.default_rng(config.seed) if rng is None else rng
    return Z, kmeans(Z, config.consensus_k, rng=rng)[0]


def run_deccs(X: np.ndarray, ae: AutoEncoder, ensemble: EnsembleSpec, config: DeccsConfig,
              rng: np.random.Generator | None = None, labels: np.ndarray | None = None,
              on_round: Callable[[dict], None] | None = None) -> DeccsResult:
    """Run the full loop on a copy of ``ae``.

    Without ``tau`` all ``max_rounds + 1`` rounds run and the round with the
    highest agreement (latest on ties) supplies the result.
    """
    X = np.asarray(X, dtype=np.float64)
    rng = np.random.default_rng(config.seed) if rng is None else rng
    ae = ae.copy()
    history: list[dict] = []
    agreements: list[float] = []
    states: list[tuple[RoundState, list[np.ndarray]]] = []
    stop_reason = STOP_MAX_ROUNDS
    t = 0
    while t <= config.max_rounds:
        try:
            state = prepare_round(t, X, ae, ensemble, config, rng, labels)
        except Exception as exc:
            raise RuntimeError(f"round {t}: {exc}") from exc
        agreements.append(state.agreement)
        snapshot = [p.copy() for p in ae.params]
        if should_stop(agreements, t, config):
            if t < config.max_rounds or (config.tau is not None and abs(agreements[t] - agreements[t - 1]) < config.tau):
                stop_reason = STOP_CONVERGED
            states.append((state, snapshot))
            history.append(state.summary())
            if on_round:
                on_round(history[-1])
            break
        start = time.perf_counter()
        try:
            state.losses = update_representation(state, X, ae, config, rng)
        except TrainingError as exc:
            raise TrainingError(f"round {t}: {exc}") from exc
        state.wall_time += time.perf_counter() - start
        states.append((state, snapshot))
        history.append(state.summary())
        log.info("round %d agreement %.4f", t, state.agreement)
        if on_round:
            on_round(history[-1])
        t += 1

    if config.tau is None:
        chosen = len(agreements) - 1 - int(np.argmax(agreements[::-1]))
    else:
        chosen = len(states) - 1
    chosen_state, chosen_params = states[chosen]
    ae.set_params(chosen_params)
    Z, pred = extract_consensus(ae, X, chosen_state, ensemble, config, rng)
    return DeccsResult(ae, Z, pred, history, stop_reason, chosen, chosen_state)


TERMS = ("cons", "ce", "rec")


def ablation_config(config: DeccsConfig, mask: dict[str, bool]) -> DeccsConfig:
    unknown = set(mask) - set(TERMS)
    if unknown:
        raise ValueError(f"unknown loss terms: {sorted(unknown)}")
    if not any(mask.get(term, False) for term in TERMS):
        raise ValueError("at least one loss term must stay enabled")
    return replace(
        config,
        lambda_cons_max=config.lambda_cons_max if mask.get("cons") else 0.0,
        ce_weight=config.ce_weight if mask.get("ce") else 0.0,
        lambda_rec=config.lambda_rec if mask.get("rec") else 0.0,
    )


def run_ablation(X: np.ndarray, ae: AutoEncoder, ensemble: EnsembleSpec, config: DeccsConfig,
                 term_mask: dict[str, bool], rng: np.random.Generator | None = None,
                 labels: np.ndarray | None = None) -> dict:
    """Run DECCS with the masked-out loss terms weighted by zero."""
    result = run_deccs(X, ae, ensemble, ablation_config(config, term_mask), rng, labels)
    row = {term: bool(term_mask.get(term, False)) for term in TERMS}
    row["effective_k"] = metrics.effective_k(result.labels)
    row["agreement"] = result.history[result.chosen_round]["agreement"]
    if labels is not None:
        row["nmi"] = metrics.nmi(result.labels, labels)
        row["ari"] = metrics.ari(result.labels, labels)
    return row


def config_dict(config: DeccsConfig) -> dict:
    return asdict(config)
