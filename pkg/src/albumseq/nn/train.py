"""Training loop: Adam over per-batch cross-entropy, fresh shuffles per epoch.

Every album gets a new random permutation each epoch.  Batches group albums
of equal length so no padding is needed.  Validation uses one fixed
permutation per album (drawn once up front) so the per-epoch validation loss
is comparable across epochs; the parameters with the best validation loss
are restored at the end.

All randomness derives from ``TrainConfig.seed`` through independent
substreams, so repeated runs produce bit-identical loss histories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..domain import Album, invert, random_permutation
from ..errors import DivergenceError, ValidationError
from ..ingest import Corpus, split_corpus, standardization_stats
from .model import OrderingModel, quantize32


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    resample_sigma_each_epoch: bool = True
    val_fraction: float = 0.1  # used only when no validation corpus is supplied


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = math.inf

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)


class Adam:
    """Adam with bias correction; parameters re-quantized to float32 after each step."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v.data) for k, v in params.items()}
        self.v = {k: np.zeros_like(v.data) for k, v in params.items()}

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            update = self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
            p.data = quantize32(p.data - update)


def uniform_loss_baseline(albums) -> float:
    """Mean per-step loss of the guess-uniformly-among-unused policy (nats)."""
    vals = [sum(math.log(k) for k in range(1, a.n_tracks + 1)) / a.n_tracks for a in albums]
    return float(np.mean(vals))


def _mean_album_loss(model: OrderingModel, pairs) -> float:
    losses = [model.sequence_loss(album, sigma) for album, sigma in pairs]
    return float(np.mean(losses))


def train(
    model: OrderingModel,
    corpus: Corpus,
    config: TrainConfig,
    val_corpus: Corpus | None = None,
) -> TrainHistory:
    """Train in place; returns the loss history.

    The model's normalization statistics are recomputed from the training
    albums before the first epoch.  On return the model carries the
    parameters of the epoch with the lowest validation loss.
    """
    if corpus.n_albums == 0:
        raise ValidationError("training corpus is empty")
    too_long = [a.album_id for a in corpus.albums if a.n_tracks > model.cfg.max_len]
    if too_long:
        raise ValidationError(f"albums exceed model max_len: {too_long[:5]}")

    if val_corpus is None:
        parts = split_corpus(
            corpus,
            {"train": 1.0 - config.val_fraction, "val": config.val_fraction},
            seed=config.seed,
        )
        train_part, val_part = parts["train"], parts["val"]
    else:
        train_part, val_part = corpus, val_corpus

    mean, std = standardization_stats(train_part)
    model.set_normalization(mean, std)

    # independent, order-stable random substreams
    ss = np.random.SeedSequence(config.seed)
    sigma_rng, shuffle_rng, drop_rng, val_rng = [np.random.default_rng(s) for s in ss.spawn(4)]

    feats_std = [model.standardize(a.feature_matrix()) for a in train_part.albums]
    by_len: dict[int, list[int]] = {}
    for i, a in enumerate(train_part.albums):
        by_len.setdefault(a.n_tracks, []).append(i)

    val_pairs = [
        (a, random_permutation(a.n_tracks, val_rng)) for a in val_part.albums
    ]

    fixed_sigmas = None
    if not config.resample_sigma_each_epoch:
        fixed_sigmas = [
            random_permutation(a.n_tracks, sigma_rng) for a in train_part.albums
        ]

    opt = Adam(model.params, config.learning_rate, config.beta1, config.beta2, config.eps)
    history = TrainHistory()
    best_state = model.parameter_state()

    for epoch in range(config.epochs):
        if config.resample_sigma_each_epoch:
            sigmas = [random_permutation(a.n_tracks, sigma_rng) for a in train_part.albums]
        else:
            sigmas = fixed_sigmas

        batches: list[list[int]] = []
        for m in sorted(by_len):
            idx = list(by_len[m])
            shuffle_rng.shuffle(idx)
            batches.extend(idx[i : i + config.batch_size] for i in range(0, len(idx), config.batch_size))
        shuffle_rng.shuffle(batches)

        epoch_loss_sum = 0.0
        for batch_no, batch in enumerate(batches):
            x = np.stack([feats_std[i][list(sigmas[i].mapping)] for i in batch])
            y = np.stack([np.array(invert(sigmas[i]).mapping, dtype=np.intp) for i in batch])
            model.zero_grad()
            loss = model._loss_tensor(x, y, mask_used=True, drop_rng=drop_rng)
            if not np.isfinite(loss.data):
                raise DivergenceError(
                    f"non-finite training loss at epoch {epoch}, batch {batch_no}"
                )
            loss.backward()
            opt.step()
            epoch_loss_sum += float(loss.data) * len(batch)

        train_loss = epoch_loss_sum / train_part.n_albums
        val_loss = _mean_album_loss(model, val_pairs) if val_pairs else train_loss
        if not np.isfinite(val_loss):
            raise DivergenceError(f"non-finite validation loss at epoch {epoch}")
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        if val_loss < history.best_val_loss:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best_state = model.parameter_state()

    model.load_parameter_state(best_state)
    model.meta.update(
        {
            "train_seed": config.seed,
            "epochs": history.epochs_run,
            "best_epoch": history.best_epoch,
            "best_val_loss": history.best_val_loss,
            "final_train_loss": history.train_loss[-1] if history.train_loss else None,
        }
    )
    return history
