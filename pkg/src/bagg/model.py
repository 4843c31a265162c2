"""Compact text classifier with per-text and group-pooled losses.

The classifier is a mean-of-embeddings encoder, one tanh hidden layer and a
softmax head.  Two training losses are provided:

* standard: one cross-entropy term per text, texts of a group weighted so
  each observation contributes equally;
* bagg: the group's per-text class distributions are pooled (mean) into a
  single prediction, giving one cross-entropy term per observation.

All arithmetic is float64 and backpropagation is written out by hand, so
gradients can be validated against central finite differences.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .textproc import Vocab

PARAM_FIELDS = ("embed", "w_hidden", "b_hidden", "w_out", "b_out")

CHECKPOINT_MAGIC = b"BAGG1"


class NonFiniteLossError(RuntimeError):
    """Loss or intermediate value became inf/nan (exploding parameters)."""


@dataclass
class ModelParams:
    """All trainable tensors.  pool_params stays empty under mean pooling."""

    embed: np.ndarray     # (V, d)
    w_hidden: np.ndarray  # (d, H)
    b_hidden: np.ndarray  # (H,)
    w_out: np.ndarray     # (H, C)
    b_out: np.ndarray     # (C,)
    pool_params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        v, d = self.embed.shape
        d2, h = self.w_hidden.shape
        h2, c = self.w_out.shape
        if d != d2 or h != h2 or self.b_hidden.shape != (h,) or self.b_out.shape != (c,):
            raise ValueError("parameter shapes are inconsistent")
        for name in PARAM_FIELDS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"parameter tensor {name!r} contains non-finite values")

    @property
    def vocab_size(self) -> int:
        return self.embed.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.embed.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_hidden.shape[1]

    @property
    def num_classes(self) -> int:
        return self.w_out.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(*(getattr(self, name).copy() for name in PARAM_FIELDS))


@dataclass
class Gradients:
    """Per-minibatch gradient accumulator, shape-congruent with ModelParams."""

    embed: np.ndarray
    w_hidden: np.ndarray
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "Gradients":
        return cls(*(np.zeros_like(getattr(params, name)) for name in PARAM_FIELDS))


@dataclass(frozen=True)
class EncodedGroup:
    """One observation after tokenization/encoding: id lists plus label.

    The original text comes first; order within the rest is irrelevant to
    the pooled loss.
    """

    texts: tuple[tuple[int, ...], ...]
    label: int

    @classmethod
    def make(cls, texts: list[list[int]], label: int) -> "EncodedGroup":
        return cls(texts=tuple(tuple(t) for t in texts), label=label)


def init_params(
    vocab_size: int,
    embed_dim: int,
    hidden_dim: int,
    num_classes: int,
    rng: np.random.Generator,
) -> ModelParams:
    """Glorot-uniform weights, uniform(-0.05, 0.05) embeddings, zero biases."""

    def glorot(fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    return ModelParams(
        embed=rng.uniform(-0.05, 0.05, size=(vocab_size, embed_dim)),
        w_hidden=glorot(embed_dim, hidden_dim),
        b_hidden=np.zeros(hidden_dim),
        w_out=glorot(hidden_dim, num_classes),
        b_out=np.zeros(num_classes),
    )


# ---------------------------------------------------------------------------
# Forward pieces
# ---------------------------------------------------------------------------


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stabilized softmax (max subtraction)."""
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def encode_text(ids: list[int] | tuple[int, ...], params: ModelParams) -> np.ndarray:
    """Mean of embedding rows, then affine map and tanh.

    An empty id list encodes as the zero embedding mean, so the hidden
    vector is tanh(bias).  Order of ids does not matter.
    """
    if ids:
        ids = list(ids)
        if max(ids) >= params.vocab_size or min(ids) < 0:
            raise ValueError(f"token id out of range for vocab size {params.vocab_size}")
        xbar = params.embed[ids].mean(axis=0)
    else:
        xbar = np.zeros(params.embed_dim)
    return np.tanh(xbar @ params.w_hidden + params.b_hidden)


def head(hidden: np.ndarray, params: ModelParams) -> np.ndarray:
    """Class distribution from a hidden vector."""
    return softmax(hidden @ params.w_out + params.b_out)


def predict(ids: list[int] | tuple[int, ...], params: ModelParams) -> tuple[np.ndarray, int]:
    """Single-text forward pass; argmax ties break toward the lowest index."""
    probs = head(encode_text(ids, params), params)
    return probs, int(np.argmax(probs))


def pool(outputs: list[np.ndarray], space: str = "prob") -> np.ndarray:
    """Summarize a group's per-text outputs into one class distribution.

    "prob": element-wise mean of probability vectors.  "logit": mean of
    pre-softmax logit vectors followed by softmax.
    """
    if not outputs:
        raise ValueError("cannot pool an empty list of outputs")
    stacked = np.stack(outputs)
    if space == "prob":
        return stacked.mean(axis=0)
    if space == "logit":
        return softmax(stacked.mean(axis=0))
    raise ValueError(f"unknown pool space {space!r}")


# ---------------------------------------------------------------------------
# Losses with manual backpropagation
# ---------------------------------------------------------------------------


@dataclass
class _TextCache:
    ids: tuple[int, ...]
    xbar: np.ndarray
    hidden: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


def _forward_text(ids: tuple[int, ...], params: ModelParams) -> _TextCache:
    if ids:
        id_list = list(ids)
        if max(id_list) >= params.vocab_size or min(id_list) < 0:
            raise ValueError(f"token id out of range for vocab size {params.vocab_size}")
        xbar = params.embed[id_list].mean(axis=0)
    else:
        xbar = np.zeros(params.embed_dim)
    hidden = np.tanh(xbar @ params.w_hidden + params.b_hidden)
    logits = hidden @ params.w_out + params.b_out
    return _TextCache(ids=ids, xbar=xbar, hidden=hidden, logits=logits, probs=softmax(logits))


def _backward_text(cache: _TextCache, dlogits: np.ndarray, params: ModelParams, grads: Gradients) -> None:
    grads.w_out += np.outer(cache.hidden, dlogits)
    grads.b_out += dlogits
    dhidden = params.w_out @ dlogits
    dz1 = dhidden * (1.0 - cache.hidden**2)
    grads.w_hidden += np.outer(cache.xbar, dz1)
    grads.b_hidden += dz1
    if cache.ids:
        dxbar = params.w_hidden @ dz1
        np.add.at(grads.embed, list(cache.ids), dxbar / len(cache.ids))


def loss_standard(
    batch: list[EncodedGroup],
    params: ModelParams,
    inner_norm: str = "group",
) -> tuple[float, Gradients]:
    """Per-text cross-entropy, each observation weighted equally.

    With inner_norm="group" a group's texts share weight 1 / (n * m_i)
    where m_i is the full group size.  inner_norm="aug-count" instead
    divides by the augmentation count n_i = m_i - 1 (falling back to 1 for
    singleton groups), for comparison experiments.
    """
    if inner_norm not in ("group", "aug-count"):
        raise ValueError(f"unknown inner_norm {inner_norm!r}")
    if not batch:
        raise ValueError("empty batch")
    n = len(batch)
    grads = Gradients.zeros_like(params)
    total = 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for group in batch:
            m = len(group.texts)
            denom = m if inner_norm == "group" else max(m - 1, 1)
            weight = 1.0 / (n * denom)
            for ids in group.texts:
                cache = _forward_text(ids, params)
                total += weight * -np.log(cache.probs[group.label])
                dlogits = weight * cache.probs
                dlogits[group.label] -= weight
                _backward_text(cache, dlogits, params, grads)
    if not np.isfinite(total):
        raise NonFiniteLossError(f"standard loss is {total}")
    return float(total), grads


def loss_bagg(
    batch: list[EncodedGroup],
    params: ModelParams,
    pool_space: str = "prob",
) -> tuple[float, Gradients]:
    """One pooled cross-entropy term per observation.

    Every text of a group (original included) is classified, the outputs
    are pooled, and the loss is the cross-entropy of the pooled
    distribution.  Gradients flow through the pooling mean into every group
    member.
    """
    if pool_space not in ("prob", "logit"):
        raise ValueError(f"unknown pool space {pool_space!r}")
    if not batch:
        raise ValueError("empty batch")
    n = len(batch)
    grads = Gradients.zeros_like(params)
    total = 0.0
    weight = 1.0 / n
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for group in batch:
            m = len(group.texts)
            caches = [_forward_text(ids, params) for ids in group.texts]
            if pool_space == "prob":
                pooled = np.mean([c.probs for c in caches], axis=0)
                total += weight * -np.log(pooled[group.label])
                dprobs = np.zeros(params.num_classes)
                dprobs[group.label] = -weight / (pooled[group.label] * m)
                for cache in caches:
                    # softmax vector-Jacobian product
                    dlogits = cache.probs * (dprobs - np.dot(dprobs, cache.probs))
                    _backward_text(cache, dlogits, params, grads)
            else:
                mean_logits = np.mean([c.logits for c in caches], axis=0)
                pooled = softmax(mean_logits)
                total += weight * -np.log(pooled[group.label])
                dmean = weight * pooled.copy()
                dmean[group.label] -= weight
                for cache in caches:
                    _backward_text(cache, dmean / m, params, grads)
    if not np.isfinite(total):
        raise NonFiniteLossError(f"bagg loss is {total}")
    return float(total), grads


# ---------------------------------------------------------------------------
# Finite-difference verification
# ---------------------------------------------------------------------------


def check_gradients(
    params: ModelParams,
    batch: list[EncodedGroup],
    epsilon: float = 1e-4,
) -> float:
    """Max relative error of analytic vs central-difference gradients.

    Checks every parameter of every tensor, for the standard loss and for
    the pooled loss in both pooling spaces.  Intended for tiny instances.
    """
    losses = [
        lambda p: loss_standard(batch, p),
        lambda p: loss_bagg(batch, p, pool_space="prob"),
        lambda p: loss_bagg(batch, p, pool_space="logit"),
    ]
    worst = 0.0
    for loss_fn in losses:
        _, grads = loss_fn(params)
        for name in PARAM_FIELDS:
            tensor = getattr(params, name)
            analytic = getattr(grads, name)
            for idx in np.ndindex(tensor.shape):
                orig = tensor[idx]
                tensor[idx] = orig + epsilon
                plus, _ = loss_fn(params)
                tensor[idx] = orig - epsilon
                minus, _ = loss_fn(params)
                tensor[idx] = orig
                numeric = (plus - minus) / (2.0 * epsilon)
                denom = max(abs(analytic[idx]) + abs(numeric), 1e-6)
                worst = max(worst, abs(analytic[idx] - numeric) / denom)
    return worst


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def vocab_hash(vocab: Vocab) -> str:
    return vocab.content_hash()


def save_checkpoint(path: str | Path, params: ModelParams, pool_space: str, vocab: Vocab) -> None:
    """Write magic, JSON header, then raw little-endian float64 tensors.

    The header records dims, pool space and the vocab hash; the token list
    is included so a checkpoint is self-contained for prediction.
    """
    header = {
        "dims": {
            "vocab": params.vocab_size,
            "embed": params.embed_dim,
            "hidden": params.hidden_dim,
            "classes": params.num_classes,
        },
        "pool_space": pool_space,
        "vocab_hash": vocab.content_hash(),
        "tokens": vocab.id_to_token,
        "min_count": vocab.min_count,
        "params": [[name, list(getattr(params, name).shape)] for name in PARAM_FIELDS],
    }
    header_bytes = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(header_bytes)))
        f.write(header_bytes)
        for name in PARAM_FIELDS:
            arr = np.ascontiguousarray(getattr(params, name), dtype="<f8")
            f.write(arr.tobytes())


def load_checkpoint(path: str | Path) -> tuple[ModelParams, str, Vocab]:
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a model checkpoint (bad magic {magic!r})")
        (header_len,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(header_len).decode("utf-8"))
        arrays = {}
        for name, shape in header["params"]:
            count = int(np.prod(shape))
            buf = f.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"{path}: truncated tensor {name!r}")
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    params = ModelParams(**{name: arrays[name] for name in PARAM_FIELDS})
    vocab = Vocab(
        token_to_id={tok: i for i, tok in enumerate(header["tokens"])},
        min_count=header.get("min_count", 1),
    )
    if vocab.content_hash() != header["vocab_hash"]:
        raise ValueError(f"{path}: vocab hash mismatch")
    return params, header["pool_space"], vocab
