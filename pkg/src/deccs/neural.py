"""Feed-forward autoencoder and linear softmax classifiers with hand-written backprop.

Everything is plain numpy in float64: the networks used here are tiny
(D-20-20-2 and friends), so a framework would add nothing but dependencies.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data import split_train_eval


class TrainingError(RuntimeError):
    pass


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class MLP:
    """Dense stack, ReLU on hidden layers and a linear output layer.

    Weights are stored as (fan_in, fan_out) so a layer computes ``X @ W + b``.
    """

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator | None = None,
                 dropout: float = 0.0):
        if len(sizes) < 2:
            raise ValueError("an MLP needs at least an input and an output size")
        self.sizes = [int(s) for s in sizes]
        self.dropout = float(dropout)
        rng = np.random.default_rng(0) if rng is None else rng
        self.weights = [glorot_uniform(a, b, rng) for a, b in zip(self.sizes[:-1], self.sizes[1:])]
        self.biases = [np.zeros(b) for b in self.sizes[1:]]

    @property
    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "MLP":
        other = MLP.__new__(MLP)
        other.sizes = list(self.sizes)
        other.dropout = self.dropout
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    def forward(self, X: np.ndarray, rng: np.random.Generator | None = None):
        """Return the output and a cache for :meth:`backward`.

        Dropout on hidden activations is applied only when ``rng`` is given.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.sizes[0]:
            raise ValueError(f"expected input with {self.sizes[0]} columns, got shape {X.shape}")
        inputs, masks = [], []
        h = X
        last = len(self.weights) - 1
        for layer, (W, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            a = h @ W + b
            if layer < last:
                mask = a > 0
                if rng is not None and self.dropout > 0:
                    keep = rng.random(a.shape) >= self.dropout
                    mask = mask / (1.0 - self.dropout) * keep
                masks.append(mask)
                h = a * mask
            else:
                h = a
        return h, (inputs, masks)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)[0]

    def backward(self, cache, grad_out: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Gradient w.r.t. the input and the parameters (same order as ``params``)."""
        inputs, masks = cache
        grads: list[np.ndarray] = []
        g = grad_out
        for layer in range(len(self.weights) - 1, -1, -1):
            if layer < len(self.weights) - 1:
                g = g * masks[layer]
            grads.append(g.sum(axis=0))
            grads.append(inputs[layer].T @ g)
            g = g @ self.weights[layer].T
        grads.reverse()
        return g, grads


class AutoEncoder:
    """Encoder ``[D, ..., d]`` and mirrored decoder ``[d, ..., D]``."""

    def __init__(self, encoder_sizes: Sequence[int], rng: np.random.Generator | None = None,
                 dropout: float = 0.0, decoder_sizes: Sequence[int] | None = None):
        encoder_sizes = list(encoder_sizes)
        decoder_sizes = list(decoder_sizes) if decoder_sizes is not None else encoder_sizes[::-1]
        # d == D is allowed: 2-d toy data keeps a 2-d embedding
        if encoder_sizes[-1] > encoder_sizes[0]:
            raise ValueError("embedding width must not exceed the input width")
        if decoder_sizes[0] != encoder_sizes[-1] or decoder_sizes[-1] != encoder_sizes[0]:
            raise ValueError("decoder must map the embedding width back to the input width")
        rng = np.random.default_rng(0) if rng is None else rng
        self.encoder = MLP(encoder_sizes, rng, dropout)
        self.decoder = MLP(decoder_sizes, rng, dropout)

    @property
    def input_dim(self) -> int:
        return self.encoder.sizes[0]

    @property
    def embedding_dim(self) -> int:
        return self.encoder.sizes[-1]

    @property
    def params(self) -> list[np.ndarray]:
        return self.encoder.params + self.decoder.params

    def copy(self) -> "AutoEncoder":
        other = AutoEncoder.__new__(AutoEncoder)
        other.encoder = self.encoder.copy()
        other.decoder = self.decoder.copy()
        return other

    def set_params(self, values: Sequence[np.ndarray]) -> None:
        for p, v in zip(self.params, values):
            p[...] = v


def encode(ae: AutoEncoder, X: np.ndarray, batch_size: int = 4096) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] <= batch_size:
        return ae.encoder(X)
    return np.vstack([ae.encoder(X[i:i + batch_size]) for i in range(0, X.shape[0], batch_size)])


def decode(ae: AutoEncoder, Z: np.ndarray) -> np.ndarray:
    return ae.decoder(Z)


class LinearClassifier:
    """softmax(W z + b) with W of shape (k, d)."""

    def __init__(self, d: int, k: int, rng: np.random.Generator | None = None):
        rng = np.random.default_rng(0) if rng is None else rng
        self.W = glorot_uniform(d, k, rng).T.copy()
        self.b = np.zeros(k)

    @property
    def k(self) -> int:
        return self.W.shape[0]

    @property
    def params(self) -> list[np.ndarray]:
        return [self.W, self.b]

    def copy(self) -> "LinearClassifier":
        other = LinearClassifier.__new__(LinearClassifier)
        other.W, other.b = self.W.copy(), self.b.copy()
        return other

    def logits(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[1] != self.W.shape[1]:
            raise ValueError(f"expected embeddings of width {self.W.shape[1]}, got shape {Z.shape}")
        return Z @ self.W.T + self.b

    def predict(self, Z: np.ndarray) -> np.ndarray:
        return self.logits(Z).argmax(axis=1)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def classifier_forward(g: LinearClassifier, Z: np.ndarray) -> np.ndarray:
    return softmax(g.logits(Z))


# ---------------------------------------------------------------------------
# losses

def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def reconstruction_loss(X: np.ndarray, X_hat: np.ndarray) -> float:
    X, X_hat = np.asarray(X, float), np.asarray(X_hat, float)
    _same_shape(X, X_hat)
    return float(((X_hat - X) ** 2).mean())


def reconstruction_grad(X: np.ndarray, X_hat: np.ndarray) -> np.ndarray:
    return 2.0 * (X_hat - X) / X.size


def cross_entropy_loss(probs: np.ndarray, targets) -> float:
    probs = np.asarray(probs, float)
    targets = np.asarray(targets)
    if probs.shape[0] != targets.shape[0]:
        raise ValueError("probability rows and targets differ in length")
    if targets.size and (targets.min() < 0 or targets.max() >= probs.shape[1]):
        raise ValueError("target label out of range")
    picked = probs[np.arange(targets.size), targets]
    return float(-np.log(np.maximum(picked, np.finfo(float).tiny)).mean())


def consensus_loss(Z: np.ndarray, partitions_with_centers: Sequence[tuple[np.ndarray, np.ndarray]],
                   alphas: Sequence[np.ndarray] | None = None) -> float:
    """Mean over points of the (alpha-weighted) squared distance to the assigned centers,
    summed over partitions."""
    Z = np.asarray(Z, float)
    total = 0.0
    for i, (labels, centers) in enumerate(partitions_with_centers):
        total += _consensus_term(Z, labels, centers, None if alphas is None else alphas[i])[0]
    return total


def _consensus_term(Z, labels, centers, alpha):
    centers = np.asarray(centers, float)
    if centers.shape[1] != Z.shape[1]:
        raise ValueError(f"centers have width {centers.shape[1]}, embeddings {Z.shape[1]}")
    labels = np.asarray(labels)
    if labels.size and labels.max() >= centers.shape[0]:
        raise ValueError("label without a center")
    diff = Z - centers[labels]
    sq = (diff * diff).sum(axis=1)
    weight = np.ones(Z.shape[0]) if alpha is None else np.asarray(alpha, float)
    n = max(Z.shape[0], 1)
    value = float((weight * sq).sum() / n)
    grad = 2.0 * weight[:, None] * diff / n
    return value, grad


def _cross_entropy_term(g: LinearClassifier, Z, probs, labels, mask):
    """CE over the rows selected by ``mask``; grads w.r.t. Z, W and b."""
    m = int(mask.sum())
    if m == 0:
        return 0.0, np.zeros_like(Z), [np.zeros_like(g.W), np.zeros_like(g.b)]
    rows = np.flatnonzero(mask)
    value = cross_entropy_loss(probs[rows], labels[rows])
    dlogits = np.zeros_like(probs)
    dlogits[rows] = probs[rows]
    dlogits[rows, labels[rows]] -= 1.0
    dlogits /= m
    return value, dlogits @ g.W, [dlogits.T @ Z, dlogits.sum(axis=0)]


@dataclass
class PartitionTarget:
    """What one partition asks of one mini-batch.

    ``labels`` are base labels on sampled rows and propagated labels elsewhere;
    ``ce_mask`` marks rows whose labels come from the base partition; ``alphas``
    are the (frozen) classifier confidences for the assigned labels.
    """

    labels: np.ndarray
    centers: np.ndarray
    ce_mask: np.ndarray
    alphas: np.ndarray | None = None


@dataclass
class LossWeights:
    lambda_rec: float = 1.0
    lambda_cons_max: float = 10.0
    lambdas: np.ndarray = field(default_factory=lambda: np.ones(0))
    ramp: float = 0.0
    ce_weight: float = 1.0

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        if self.ramp > self.lambda_cons_max + 1e-12:
            raise ValueError("ramp weight exceeds lambda_cons_max")


@dataclass
class LossBreakdown:
    ce: list[float]
    cons: list[float]
    rec: float

    def total(self, weights: LossWeights) -> float:
        terms = [lam * (weights.ce_weight * ce + weights.ramp * cons)
                 for lam, ce, cons in zip(weights.lambdas, self.ce, self.cons)]
        return float(sum(terms) + weights.lambda_rec * self.rec)


def combined_loss(X: np.ndarray, ae: AutoEncoder, classifiers: Sequence[LinearClassifier],
                  targets: Sequence[PartitionTarget], weights: LossWeights,
                  with_grads: bool = False):
    """sum_i lambda_i (CE_i + w * cons_i) + lambda_rec * rec on one batch.

    Returns ``(total, breakdown)``; with ``with_grads`` additionally the
    autoencoder gradients and one ``[dW, db]`` pair per classifier.
    """
    if not len(classifiers) == len(targets) == len(weights.lambdas):
        raise ValueError("classifiers, targets and lambda weights must align")
    Z, enc_cache = ae.encoder.forward(X)
    X_hat, dec_cache = ae.decoder.forward(Z)
    rec = reconstruction_loss(X, X_hat)
    dZ = np.zeros_like(Z)
    ce_terms, cons_terms, clf_grads = [], [], []
    for lam, g, tgt in zip(weights.lambdas, classifiers, targets):
        probs = classifier_forward(g, Z)
        ce, dZ_ce, g_grads = _cross_entropy_term(g, Z, probs, np.asarray(tgt.labels), np.asarray(tgt.ce_mask, bool))
        cons, dZ_cons = _consensus_term(Z, tgt.labels, tgt.centers, tgt.alphas)
        ce_terms.append(ce)
        cons_terms.append(cons)
        if with_grads:
            scale_ce = lam * weights.ce_weight
            dZ += scale_ce * dZ_ce + lam * weights.ramp * dZ_cons
            clf_grads.append([scale_ce * gr for gr in g_grads])
    breakdown = LossBreakdown(ce_terms, cons_terms, rec)
    total = breakdown.total(weights)
    if not with_grads:
        return total, breakdown
    dZ_rec, dec_grads = ae.decoder.backward(dec_cache, weights.lambda_rec * reconstruction_grad(X, X_hat))
    _, enc_grads = ae.encoder.backward(enc_cache, dZ + dZ_rec)
    return total, breakdown, enc_grads + dec_grads, clf_grads


def sigmoid_rampup(t: int, ramp_length: int, lambda_cons_max: float) -> float:
    """lambda_cons * exp(-5 (1 - min(t, R)/R)^2)."""
    if ramp_length < 1:
        raise ValueError("ramp_length must be at least 1")
    phase = 1.0 - min(max(t, 0), ramp_length) / ramp_length
    return float(lambda_cons_max * np.exp(-5.0 * phase * phase))


# ---------------------------------------------------------------------------
# optimisation

@dataclass
class OptimizerState:
    lr: float
    momentum: float = 0.9
    velocities: list[np.ndarray] | None = None


def sgd_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: OptimizerState) -> None:
    """Heavy-ball update in place: v <- m v + g; p <- p - lr v."""
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    if state.velocities is None:
        state.velocities = [np.zeros_like(p) for p in params]
    for p, g, v in zip(params, grads, state.velocities):
        if p.shape != g.shape or p.shape != v.shape:
            raise ValueError(f"shape mismatch in sgd_step: {p.shape}, {g.shape}, {v.shape}")
        v *= state.momentum
        v += g
        p -= state.lr * v


@dataclass
class TrainConfig:
    lr: float = 0.001
    momentum: float = 0.9
    batch_size: int = 256
    max_epochs: int = 200
    patience: int = 10
    eval_fraction: float = 0.1
    plateau_patience: int = 5
    plateau_factor: float = 0.5
    min_lr: float = 1e-6


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    eval_loss: float
    lr: float


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start:start + batch_size]


def _fit(params: list[np.ndarray], loss_and_grads: Callable, eval_loss: Callable,
         n_train: int, config: TrainConfig, rng: np.random.Generator) -> list[EpochRecord]:
    """Mini-batch SGD with early stopping and plateau lr decay.

    Best parameters (by eval loss) are restored before returning.
    """
    state = OptimizerState(config.lr, config.momentum)
    best = eval_loss()
    best_params = [p.copy() for p in params]
    trace = [EpochRecord(0, float("nan"), best, config.lr)]
    since_best = since_plateau = 0
    for epoch in range(1, config.max_epochs + 1):
        losses = []
        for batch in _batches(n_train, config.batch_size, rng):
            loss, grads = loss_and_grads(batch)
            if not np.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {epoch}")
            sgd_step(params, grads, state)
            losses.append(loss)
        current = eval_loss()
        if not np.isfinite(current):
            raise TrainingError(f"evaluation loss diverged at epoch {epoch}")
        trace.append(EpochRecord(epoch, float(np.mean(losses)), current, state.lr))
        if current < best - 1e-12:
            best = current
            best_params = [p.copy() for p in params]
            since_best = since_plateau = 0
        else:
            since_best += 1
            since_plateau += 1
            if since_best >= config.patience:
                break
            if since_plateau >= config.plateau_patience:
                state.lr = max(state.lr * config.plateau_factor, config.min_lr)
                since_plateau = 0
    for p, b in zip(params, best_params):
        p[...] = b
    return trace


def pretrain_autoencoder(ae: AutoEncoder, X: np.ndarray, config: TrainConfig | None = None,
                         rng: np.random.Generator | None = None) -> tuple[AutoEncoder, list[EpochRecord]]:
    """Minimise the reconstruction loss on a train split, early-stopping on the eval split."""
    config = config or TrainConfig()
    rng = np.random.default_rng(0) if rng is None else rng
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("need at least two rows to pretrain")
    train_idx, eval_idx = split_train_eval(np.arange(X.shape[0]), config.eval_fraction, rng)
    X_train, X_eval = X[train_idx], X[eval_idx]
    params = ae.params

    def loss_and_grads(batch):
        Xb = X_train[batch]
        Z, enc_cache = ae.encoder.forward(Xb, rng if ae.encoder.dropout else None)
        X_hat, dec_cache = ae.decoder.forward(Z, rng if ae.decoder.dropout else None)
        dZ, dec_grads = ae.decoder.backward(dec_cache, reconstruction_grad(Xb, X_hat))
        _, enc_grads = ae.encoder.backward(enc_cache, dZ)
        return reconstruction_loss(Xb, X_hat), enc_grads + dec_grads

    def eval_loss():
        return reconstruction_loss(X_eval, decode(ae, encode(ae, X_eval)))

    trace = _fit(params, loss_and_grads, eval_loss, X_train.shape[0], config, rng)
    return ae, trace


def fit_classifier(g: LinearClassifier, Z: np.ndarray, labels: np.ndarray, config: TrainConfig,
                   rng: np.random.Generator) -> list[EpochRecord]:
    labels = np.asarray(labels)
    train_idx, eval_idx = split_train_eval(np.arange(Z.shape[0]), config.eval_fraction, rng)
    Z_train, y_train = Z[train_idx], labels[train_idx]
    Z_eval, y_eval = Z[eval_idx], labels[eval_idx]

    def loss_and_grads(batch):
        Zb, yb = Z_train[batch], y_train[batch]
        probs = classifier_forward(g, Zb)
        loss, _, grads = _cross_entropy_term(g, Zb, probs, yb, np.ones(len(batch), bool))
        return loss, grads

    def eval_loss():
        return cross_entropy_loss(classifier_forward(g, Z_eval), y_eval)

    return _fit(g.params, loss_and_grads, eval_loss, Z_train.shape[0], config, rng)


def pretrain_classifiers(classifiers: Sequence[LinearClassifier], Z: np.ndarray,
                         partitions: Sequence[np.ndarray], config: TrainConfig | None = None,
                         rng: np.random.Generator | None = None) -> tuple[list[LinearClassifier], list]:
    """Fit one classifier per partition on a frozen embedding."""
    config = config or TrainConfig(lr=0.01)
    rng = np.random.default_rng(0) if rng is None else rng
    if len(classifiers) != len(partitions):
        raise ValueError("need one classifier per partition")
    Z = np.asarray(Z, dtype=np.float64)
    traces = [fit_classifier(g, Z, p, config, rng) for g, p in zip(classifiers, partitions)]
    return list(classifiers), traces


# ---------------------------------------------------------------------------
# gradient verification

@dataclass
class GradcheckReport:
    max_rel_error: float
    n_checked: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_rel_error < self.tolerance)


def gradcheck(loss_and_grads: Callable[[], tuple[float, Sequence[np.ndarray]]],
              params: Sequence[np.ndarray], step: float = 1e-5, tolerance: float = 1e-4,
              max_checks: int | None = 200, rng: np.random.Generator | None = None,
              atol: float = 1e-7) -> GradcheckReport:
    """Compare analytic gradients with central differences.

    ``loss_and_grads`` must read the current values of ``params`` (which are
    perturbed in place). The relative error of each entry is
    ``|a - f| / max(|a|, |f|, atol)``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    _, analytic = loss_and_grads()
    analytic = [np.array(g, dtype=float, copy=True) for g in analytic]
    entries = [(i, j) for i, p in enumerate(params) for j in range(p.size)]
    if max_checks is not None and len(entries) > max_checks:
        pick = rng.choice(len(entries), size=max_checks, replace=False)
        entries = [entries[k] for k in sorted(pick)]
    worst = 0.0
    for i, j in entries:
        flat = params[i].reshape(-1)
        original = flat[j]
        flat[j] = original + step
        plus = loss_and_grads()[0]
        flat[j] = original - step
        minus = loss_and_grads()[0]
        flat[j] = original
        numeric = (plus - minus) / (2 * step)
        a = analytic[i].reshape(-1)[j]
        err = abs(a - numeric) / max(abs(a), abs(numeric), atol)
        worst = max(worst, err)
    return GradcheckReport(float(worst), len(entries), tolerance)


GRADCHECK_TERMS = ("rec", "ce", "cons", "combined")


def _term_weights(term: str, lambdas: np.ndarray) -> LossWeights:
    if term == "rec":
        return LossWeights(lambda_rec=1.0, lambda_cons_max=0.0, lambdas=lambdas, ramp=0.0, ce_weight=0.0)
    if term == "ce":
        return LossWeights(lambda_rec=0.0, lambda_cons_max=0.0, lambdas=lambdas, ramp=0.0, ce_weight=1.0)
    if term == "cons":
        return LossWeights(lambda_rec=0.0, lambda_cons_max=1.0, lambdas=lambdas, ramp=1.0, ce_weight=0.0)
    if term == "combined":
        return LossWeights(lambda_rec=0.7, lambda_cons_max=2.0, lambdas=lambdas, ramp=1.3, ce_weight=1.0)
    raise ValueError(f"unknown loss term {term!r}")


def gradcheck_suite(restarts: int = 20, seed: int = 0, sizes: Sequence[int] = (3, 4, 2),
                    n_points: int = 12, n_partitions: int = 2, k: int = 3, tolerance: float = 1e-4,
                    step: float = 1e-5, flip_sign: bool = False) -> dict[str, list[GradcheckReport]]:
    """Finite-difference checks of every loss term on random small stacks.

    Each restart draws a fresh autoencoder, classifiers, batch, labels, centers
    and confidences. ``flip_sign`` negates the analytic gradient (fault injection).
    """
    rng = np.random.default_rng(seed)
    out: dict[str, list[GradcheckReport]] = {term: [] for term in GRADCHECK_TERMS}
    d = sizes[-1]
    for _ in range(restarts):
        ae = AutoEncoder(sizes, rng)
        # nudge biases so few pre-activations sit near the ReLU kink
        for b in ae.params[1::2]:
            b += rng.uniform(-0.1, 0.1, size=b.shape)
        clfs = [LinearClassifier(d, k, rng) for _ in range(n_partitions)]
        X = rng.standard_normal((n_points, sizes[0]))
        targets = [PartitionTarget(labels=rng.integers(0, k, n_points),
                                   centers=rng.standard_normal((k, d)),
                                   ce_mask=rng.random(n_points) < 0.7,
                                   alphas=rng.random(n_points))
                   for _ in range(n_partitions)]
        lambdas = rng.uniform(0.2, 1.0, n_partitions)
        params = ae.params + [p for g in clfs for p in g.params]
        sign = -1.0 if flip_sign else 1.0
        for term in GRADCHECK_TERMS:
            weights = _term_weights(term, lambdas)

            def loss_and_grads():
                total, _, ae_grads, clf_grads = combined_loss(X, ae, clfs, targets, weights, with_grads=True)
                return total, [sign * g for g in ae_grads + [g for pair in clf_grads for g in pair]]

            out[term].append(gradcheck(loss_and_grads, params, step=step, tolerance=tolerance,
                                       max_checks=None, rng=rng))
    return out


# ---------------------------------------------------------------------------
# checkpoints

CHECKPOINT_FORMAT = "deccs-autoencoder/1"


def _dump_mlp(mlp: MLP) -> dict:
    return {
        "sizes": mlp.sizes,
        "dropout": mlp.dropout,
        "weights": [W.tolist() for W in mlp.weights],
        "biases": [b.tolist() for b in mlp.biases],
    }


def _load_mlp(blob: dict) -> MLP:
    mlp = MLP.__new__(MLP)
    mlp.sizes = [int(s) for s in blob["sizes"]]
    mlp.dropout = float(blob.get("dropout", 0.0))
    mlp.weights = [np.array(W, dtype=np.float64).reshape(a, b)
                   for W, a, b in zip(blob["weights"], mlp.sizes[:-1], mlp.sizes[1:])]
    mlp.biases = [np.array(b, dtype=np.float64) for b in blob["biases"]]
    return mlp


def save_checkpoint(ae: AutoEncoder, path: str | Path, seed_lineage: Sequence[int] = (),
                    extra: dict | None = None) -> None:
    """JSON checkpoint; Python's float repr makes the round trip bit-exact."""
    blob = {
        "format": CHECKPOINT_FORMAT,
        "encoder": _dump_mlp(ae.encoder),
        "decoder": _dump_mlp(ae.decoder),
        "seed_lineage": [int(s) for s in seed_lineage],
    }
    if extra:
        blob["extra"] = extra
    Path(path).write_text(json.dumps(blob))


def load_checkpoint(path: str | Path) -> tuple[AutoEncoder, dict]:
    blob = json.loads(Path(path).read_text())
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    ae = AutoEncoder.__new__(AutoEncoder)
    ae.encoder = _load_mlp(blob["encoder"])
    ae.decoder = _load_mlp(blob["decoder"])
    return ae, {"seed_lineage": blob.get("seed_lineage", []), "extra": blob.get("extra", {})}
