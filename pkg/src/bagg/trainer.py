"""Minibatch training in three modes, plus evaluation.

Modes differ in the sampling unit: "baseline" and "standard" train on
individual texts (originals only vs. originals plus augmentations), "bagg"
trains on whole groups with the pooled loss.  Batch sizes count sampling
units: texts for baseline/standard, groups for bagg.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from random import Random

import numpy as np

from .dataset import LabeledCorpus
from .model import (
    EncodedGroup,
    Gradients,
    ModelParams,
    NonFiniteLossError,
    PARAM_FIELDS,
    init_params,
    loss_bagg,
    loss_standard,
    predict,
)
from .seeding import derive_np_rng, derive_rng
from .textproc import Vocab, build_vocab, encode, tokenize

logger = logging.getLogger(__name__)

MODES = ("baseline", "standard", "bagg")

# Default sampling-unit batch sizes: groups under bagg, texts otherwise.
DEFAULT_BATCH_BAGG = 8
DEFAULT_BATCH_TEXTS = 32


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "standard"
    epochs: int = 30
    batch_size: int | None = None  # None resolves by mode
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    pool_space: str = "prob"
    embed_dim: int = 64
    hidden_dim: int = 128
    min_count: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be sgd or adam, got {self.optimizer!r}")
        if self.pool_space not in ("prob", "logit"):
            raise ValueError(f"pool_space must be prob or logit, got {self.pool_space!r}")

    def resolved_batch_size(self) -> int:
        if self.batch_size is not None:
            return self.batch_size
        return DEFAULT_BATCH_BAGG if self.mode == "bagg" else DEFAULT_BATCH_TEXTS


@dataclass
class TrainedModel:
    params: ModelParams
    vocab: Vocab
    config: TrainConfig
    epoch_losses: list[float] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Optimizers
# ---------------------------------------------------------------------------


class Sgd:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, params: ModelParams, grads: Gradients) -> None:
        for name in PARAM_FIELDS:
            getattr(params, name)[...] -= self.learning_rate * getattr(grads, name)


class Adam:
    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: dict[str, np.ndarray] | None = None
        self._v: dict[str, np.ndarray] | None = None

    def step(self, params: ModelParams, grads: Gradients) -> None:
        if self._m is None:
            self._m = {n: np.zeros_like(getattr(params, n)) for n in PARAM_FIELDS}
            self._v = {n: np.zeros_like(getattr(params, n)) for n in PARAM_FIELDS}
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name in PARAM_FIELDS:
            g = getattr(grads, name)
            m = self._m[name]
            v = self._v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            getattr(params, name)[...] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(config: TrainConfig):
    if config.optimizer == "sgd":
        return Sgd(config.learning_rate)
    return Adam(config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps)


# ---------------------------------------------------------------------------
# Batching and training
# ---------------------------------------------------------------------------


def encode_corpus(corpus: LabeledCorpus, vocab: Vocab, mode: str) -> list[EncodedGroup]:
    """Tokenize and encode every group; baseline keeps originals only."""
    groups = []
    for obs in corpus.observations:
        texts = [obs.original] if mode == "baseline" else obs.texts()
        groups.append(EncodedGroup.make([encode(tokenize(t), vocab) for t in texts], obs.label))
    return groups


def make_batches(
    groups: list[EncodedGroup], mode: str, batch_size: int, rng: Random
) -> list[list[EncodedGroup]]:
    """Shuffle sampling units and chunk them into minibatches.

    baseline/standard flatten every text into a singleton group first, so a
    batch holds batch_size texts; bagg keeps groups whole, so a batch holds
    batch_size groups.
    """
    if mode == "bagg":
        units = list(groups)
    else:
        units = [
            EncodedGroup(texts=(ids,), label=g.label) for g in groups for ids in g.texts
        ]
    rng.shuffle(units)
    return [units[i : i + batch_size] for i in range(0, len(units), batch_size)]


def train(corpus: LabeledCorpus, vocab: Vocab, config: TrainConfig) -> TrainedModel:
    """Run the configured optimization and return params plus loss trace.

    Deterministic given (corpus, vocab, config): initialization and every
    epoch's shuffle come from streams derived from config.seed.
    """
    if not corpus.observations:
        raise ValueError("cannot train on an empty corpus")
    params = init_params(
        vocab_size=len(vocab),
        embed_dim=config.embed_dim,
        hidden_dim=config.hidden_dim,
        num_classes=len(corpus.categories),
        rng=derive_np_rng(config.seed, "init"),
    )
    optimizer = make_optimizer(config)
    groups = encode_corpus(corpus, vocab, config.mode)
    batch_size = config.resolved_batch_size()
    epoch_losses: list[float] = []
    for epoch in range(config.epochs):
        rng = derive_rng(config.seed, "epoch", epoch)
        batches = make_batches(groups, config.mode, batch_size, rng)
        batch_losses = []
        for batch_index, batch in enumerate(batches):
            try:
                if config.mode == "bagg":
                    loss, grads = loss_bagg(batch, params, pool_space=config.pool_space)
                else:
                    loss, grads = loss_standard(batch, params)
            except NonFiniteLossError as exc:
                raise NonFiniteLossError(
                    f"epoch {epoch}, batch {batch_index}: {exc}"
                ) from exc
            optimizer.step(params, grads)
            batch_losses.append(loss)
        epoch_losses.append(float(np.mean(batch_losses)))
    return TrainedModel(params=params, vocab=vocab, config=config, epoch_losses=epoch_losses)


def train_from_observations(corpus: LabeledCorpus, config: TrainConfig) -> TrainedModel:
    """Convenience wrapper: build the vocabulary from the train corpus
    (originals plus any attached augmentations) and train."""
    texts: list[list[str]] = []
    for obs in corpus.observations:
        sources = [obs.original] if config.mode == "baseline" else obs.texts()
        texts.extend(tokenize(t) for t in sources)
    vocab = build_vocab(texts, min_count=config.min_count)
    return train(corpus, vocab, config)


def evaluate(model: TrainedModel, test: LabeledCorpus) -> float:
    """Accuracy of argmax predictions over original test texts only."""
    if not test.observations:
        raise ValueError("cannot evaluate on an empty corpus")
    correct = 0
    for obs in test.observations:
        _, label = predict(encode(tokenize(obs.original), model.vocab), model.params)
        if label == obs.label:
            correct += 1
    return correct / len(test.observations)
