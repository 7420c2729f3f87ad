"""Edit-script representations and the three distance families.

A change key is a projection of one atomic action under an equality scheme;
the four schemes form a refinement ladder (kind; + node type; + label;
+ parent type). Distances: multiset Jaccard over change keys, cosine over
bag-of-words count vectors, and cosine over autoencoder embeddings, all
mapped into [0, 1].
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatch, SchemeMismatch
from .tree import fnv1a_64
from .treediff import EditAction, EditScript


class EqualityScheme(Enum):
    KIND = "kind"
    KIND_TYPE = "kind_type"
    KIND_TYPE_LABEL = "kind_type_label"
    KIND_TYPE_LABEL_PARENT = "kind_type_label_parent"


class MetricFamily(Enum):
    JACCARD = "jaccard"
    BOW_COSINE = "bow_cosine"
    AE_COSINE = "ae_cosine"


@dataclass(frozen=True)
class ChangeKey:
    """Scheme-projected token of one atomic action; totally ordered."""

    kind: str
    node_type: Optional[str] = None
    label: Optional[str] = None
    parent_type: Optional[str] = None

    def sort_key(self) -> tuple:
        return tuple((f is not None, f or "") for f in
                     (self.kind, self.node_type, self.label, self.parent_type))

    def to_string(self) -> str:
        return json.dumps(
            [self.kind, self.node_type, self.label, self.parent_type],
            ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_string(cls, text: str) -> "ChangeKey":
        kind, node_type, label, parent_type = json.loads(text)
        return cls(kind, node_type, label, parent_type)


def project_action(action: EditAction, scheme: EqualityScheme) -> ChangeKey:
    if scheme is EqualityScheme.KIND:
        return ChangeKey(action.kind)
    if scheme is EqualityScheme.KIND_TYPE:
        return ChangeKey(action.kind, action.node_type)
    if scheme is EqualityScheme.KIND_TYPE_LABEL:
        return ChangeKey(action.kind, action.node_type, action.label)
    return ChangeKey(action.kind, action.node_type, action.label,
                     action.parent_type)


def project(script: EditScript, scheme: EqualityScheme) -> Counter:
    """Multiset of change keys, one per action (multiplicities preserved)."""
    return Counter(project_action(a, scheme) for a in script.actions)


def jaccard_distance(a: Counter, b: Counter) -> float:
    """1 - |a n b| / |a u b| with multiset intersection/union; d(0,0) = 0."""
    if not a and not b:
        return 0.0
    inter = 0
    union = 0
    for key in a.keys() | b.keys():
        ca = a.get(key, 0)
        cb = b.get(key, 0)
        inter += min(ca, cb)
        union += max(ca, cb)
    return 1.0 - inter / union


# ---------------------------------------------------------------------------
# Bag of words

@dataclass(frozen=True)
class Vocabulary:
    keys: tuple[ChangeKey, ...]
    scheme: EqualityScheme
    index: dict = field(compare=False, repr=False, default_factory=dict)
    vocab_id: str = ""

    @classmethod
    def build(cls, keys: Sequence[ChangeKey], scheme: EqualityScheme) -> "Vocabulary":
        ordered = tuple(sorted(set(keys), key=ChangeKey.sort_key))
        digest = fnv1a_64(
            (scheme.value + "|" + "|".join(k.to_string() for k in ordered))
            .encode("utf-8"))
        return cls(keys=ordered, scheme=scheme,
                   index={k: i for i, k in enumerate(ordered)},
                   vocab_id=f"{digest:016x}")

    def __len__(self) -> int:
        return len(self.keys)


def build_vocabulary(scripts: Sequence[EditScript], scheme: EqualityScheme,
                     min_df: int = 1) -> Vocabulary:
    """Keys occurring in at least min_df distinct scripts, in total key order."""
    if min_df < 1:
        raise ConfigError("min_df must be >= 1")
    df: Counter = Counter()
    for script in scripts:
        df.update(set(project(script, scheme)))
    return Vocabulary.build([k for k, n in df.items() if n >= min_df], scheme)


@dataclass(frozen=True)
class BowVector:
    counts: dict  # vocabulary index -> count (>= 1)
    dim: int
    vocab_ref: str
    oov: int = 0  # out-of-vocabulary keys dropped during vectorization

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim, dtype=np.float64)
        for i, c in self.counts.items():
            dense[i] = c
        return dense

    def total(self) -> int:
        return sum(self.counts.values())


def vectorize(script: EditScript, scheme: EqualityScheme,
              vocab: Vocabulary) -> BowVector:
    if scheme is not vocab.scheme:
        raise SchemeMismatch(
            f"vocabulary was built under {vocab.scheme.value}, not {scheme.value}")
    counts: dict[int, int] = {}
    oov = 0
    for key, n in project(script, scheme).items():
        idx = vocab.index.get(key)
        if idx is None:
            oov += n
        else:
            counts[idx] = n
    return BowVector(counts=counts, dim=len(vocab), vocab_ref=vocab.vocab_id,
                     oov=oov)


def cosine_distance(a: np.ndarray, b: np.ndarray, signed: bool = False) -> float:
    """1 - cosine similarity, mapped to [0, 1].

    Conventions: both zero -> 0, exactly one zero -> 1, equal vectors -> 0
    exactly. With signed=True (embedding inputs may have negative
    coordinates) the raw value in [0, 2] is halved.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a_zero = not a.any()
    b_zero = not b.any()
    if a_zero and b_zero:
        return 0.0
    if a_zero or b_zero:
        return 1.0
    if a.shape == b.shape and np.array_equal(a, b):
        return 0.0
    cos = float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
    raw = 1.0 - cos
    if signed:
        raw *= 0.5
    return min(1.0, max(0.0, raw))


# ---------------------------------------------------------------------------
# Autoencoder

@dataclass
class AutoencoderConfig:
    hidden_dim: int = 32
    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0

    def validate(self) -> None:
        if self.hidden_dim < 1:
            raise ConfigError("hidden_dim must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


@dataclass
class Autoencoder:
    """Single hidden layer, ReLU hidden activation, linear output, untied
    weights; trained with mini-batch SGD on MSE over L2-normalized inputs."""

    encoder_weights: np.ndarray  # d x V
    encoder_bias: np.ndarray     # d
    decoder_weights: np.ndarray  # V x d
    decoder_bias: np.ndarray     # V
    hidden_dim: int
    vocab_size: int
    final_loss: float = 0.0


@dataclass(frozen=True)
class Embedding:
    values: np.ndarray


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return x / norms


def _init_params(vocab_size: int, config: AutoencoderConfig,
                 rng: np.random.Generator) -> Autoencoder:
    bound = 1.0 / np.sqrt(vocab_size)
    d, v = config.hidden_dim, vocab_size
    return Autoencoder(
        encoder_weights=rng.uniform(-bound, bound, (d, v)),
        encoder_bias=np.zeros(d),
        decoder_weights=rng.uniform(-bound, bound, (v, d)),
        decoder_bias=np.zeros(v),
        hidden_dim=d,
        vocab_size=v,
    )


def init_autoencoder(vocab_size: int, config: AutoencoderConfig) -> Autoencoder:
    """Seeded uniform init in [-1/sqrt(V), 1/sqrt(V)] for weights, zero biases."""
    config.validate()
    if vocab_size < 1:
        raise ConfigError("vocab_size must be >= 1")
    return _init_params(vocab_size, config, np.random.default_rng(config.seed))


def _forward(model: Autoencoder, x: np.ndarray):
    """x: batch * V. Returns (hidden_pre, hidden, reconstruction)."""
    h_pre = x @ model.encoder_weights.T + model.encoder_bias
    h = np.maximum(h_pre, 0.0)
    recon = h @ model.decoder_weights.T + model.decoder_bias
    return h_pre, h, recon


def reconstruction_loss(model: Autoencoder, x: np.ndarray) -> float:
    """Mean over samples and coordinates of the squared reconstruction error."""
    _, _, recon = _forward(model, x)
    diff = recon - x
    return float(np.mean(diff * diff))


def loss_gradients(model: Autoencoder, x: np.ndarray):
    """Analytic gradients of reconstruction_loss wrt all four parameters."""
    h_pre, h, recon = _forward(model, x)
    b, v = x.shape
    g_out = 2.0 * (recon - x) / (b * v)            # b x V
    grad_dec_w = g_out.T @ h                       # V x d
    grad_dec_b = g_out.sum(axis=0)                 # V
    g_h = g_out @ model.decoder_weights            # b x d
    g_pre = g_h * (h_pre > 0.0)                    # b x d
    grad_enc_w = g_pre.T @ x                       # d x V
    grad_enc_b = g_pre.sum(axis=0)                 # d
    return grad_enc_w, grad_enc_b, grad_dec_w, grad_dec_b


def train_autoencoder(vectors: Sequence[BowVector],
                      config: AutoencoderConfig) -> Autoencoder:
    """Mini-batch SGD, deterministic given the seed (epoch shuffles come from
    the same generator as the weight init)."""
    config.validate()
    if not vectors:
        raise ConfigError("training set must be nonempty")
    dims = {vec.dim for vec in vectors}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed vector dimensions {sorted(dims)}")
    vocab_size = dims.pop()
    if vocab_size < 1:
        raise ConfigError("cannot train on an empty vocabulary")

    x_all = _normalize_rows(np.stack([vec.to_dense() for vec in vectors]))
    rng = np.random.default_rng(config.seed)
    model = _init_params(vocab_size, config, rng)
    n = x_all.shape[0]
    lr = config.learning_rate
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = x_all[order[start:start + config.batch_size]]
            gew, geb, gdw, gdb = loss_gradients(model, batch)
            model.encoder_weights -= lr * gew
            model.encoder_bias -= lr * geb
            model.decoder_weights -= lr * gdw
            model.decoder_bias -= lr * gdb
    model.final_loss = reconstruction_loss(model, x_all)
    return model


def embed(vector: BowVector, model: Autoencoder) -> Embedding:
    """Hidden-layer activation of the L2-normalized input."""
    if vector.dim != model.vocab_size:
        raise DimensionMismatch(
            f"vector has dimension {vector.dim}, model expects {model.vocab_size}")
    x = vector.to_dense()
    norm = np.linalg.norm(x)
    if norm > 0.0:
        x = x / norm
    return Embedding(np.maximum(x @ model.encoder_weights.T + model.encoder_bias,
                                0.0))


# ---------------------------------------------------------------------------
# Dispatch

@dataclass
class DistanceConfig:
    family: MetricFamily
    scheme: EqualityScheme
    vocabulary: Optional[Vocabulary] = None
    autoencoder: Optional[Autoencoder] = None

    def require_vocabulary(self) -> Vocabulary:
        if self.vocabulary is None:
            raise ConfigError(f"{self.family.value} requires a fitted vocabulary")
        return self.vocabulary

    def require_autoencoder(self) -> Autoencoder:
        if self.autoencoder is None:
            raise ConfigError("ae_cosine requires a trained autoencoder")
        return self.autoencoder


def script_distance(a: EditScript, b: EditScript, config: DistanceConfig) -> float:
    """Distance in [0, 1] under the configured family; symmetric, d(x,x)=0."""
    if config.family is MetricFamily.JACCARD:
        return jaccard_distance(project(a, config.scheme),
                                project(b, config.scheme))
    vocab = config.require_vocabulary()
    va = vectorize(a, config.scheme, vocab)
    vb = vectorize(b, config.scheme, vocab)
    if config.family is MetricFamily.BOW_COSINE:
        return cosine_distance(va.to_dense(), vb.to_dense())
    model = config.require_autoencoder()
    ea = embed(va, model)
    eb = embed(vb, model)
    return cosine_distance(ea.values, eb.values, signed=True)
