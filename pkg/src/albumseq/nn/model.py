"""The ordering model: a track encoder feeding an encoder-decoder transformer.

The encoder is a two-layer fully connected network mapping each track's
D-dimensional feature vector to a low-dimensional value ``z`` (one scalar per
track by default, which doubles as the per-track narrative value).  The
transformer consumes the ``z`` sequence in an arbitrary order and decodes,
step by step, the index of the input slot whose track comes next in the
restored order.  Output logits live in a fixed vocabulary of ``max_len``
slot indices; slots beyond the current album's length are masked to -inf,
and during constrained decoding already-used slots are masked as well.

Shapes are batch-first throughout: features ``(B, M, D)``, encodings
``(B, M, D_z)``, logits ``(B, T, max_len)``.  Albums within a batch must
share the same length ``M``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..domain import Album, Permutation, invert
from ..errors import ValidationError
from . import autodiff as ad
from .autodiff import Tensor

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class ModelConfig:
    feature_dim: int
    encoder_hidden: int = 256
    z_dim: int = 1
    d_model: int = 64
    n_heads: int = 4
    d_ff: int = 128
    max_len: int = 20
    dropout_rate: float = 0.1
    activation: str = "relu"
    n_blocks: int = 2  # encoder and decoder depth; the architecture is a 2+2 transformer

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValidationError("d_model must be divisible by n_heads")
        if min(self.feature_dim, self.encoder_hidden, self.z_dim, self.max_len) < 1:
            raise ValidationError("dimensions must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValidationError("dropout_rate must lie in [0, 1)")


def quantize32(a: np.ndarray) -> np.ndarray:
    """Round to the nearest float32-representable values (kept as float64).

    Model parameters are always held at float32 precision so that writing a
    checkpoint (which stores raw float32 blocks) is lossless and reloading
    reproduces forward passes bit for bit.
    """
    return np.asarray(a, dtype=np.float32).astype(np.float64)


def sinusoidal_encoding(max_len: int, d_model: int) -> np.ndarray:
    pe = np.zeros((max_len, d_model))
    position = np.arange(max_len)[:, None].astype(np.float64)
    div = np.exp(np.arange(0, d_model, 2) / d_model * -math.log(10000.0))
    pe[:, 0::2] = np.sin(position * div)
    pe[:, 1::2] = np.cos(position * div[: pe[:, 1::2].shape[1]])
    return quantize32(pe)


def _attention_param_names(prefix: str):
    return [f"{prefix}.{w}" for w in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")]


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Names and shapes of every trainable array, in checkpoint block order."""
    d, dff, dz, L = cfg.d_model, cfg.d_ff, cfg.z_dim, cfg.max_len
    shapes: dict[str, tuple[int, ...]] = {
        "enc.w1": (cfg.feature_dim, cfg.encoder_hidden),
        "enc.b1": (cfg.encoder_hidden,),
        "enc.w2": (cfg.encoder_hidden, dz),
        "enc.b2": (dz,),
        "tr.embed.w": (dz, d),
        "tr.embed.b": (d,),
        "tr.start": (d,),
    }

    def ln(prefix):
        shapes[f"{prefix}.g"] = (d,)
        shapes[f"{prefix}.b"] = (d,)

    def attn(prefix):
        for name in _attention_param_names(prefix):
            shapes[name] = (d,) if name.rsplit(".", 1)[1].startswith("b") else (d, d)

    def ff(prefix):
        shapes[f"{prefix}.w1"] = (d, dff)
        shapes[f"{prefix}.b1"] = (dff,)
        shapes[f"{prefix}.w2"] = (dff, d)
        shapes[f"{prefix}.b2"] = (d,)

    for i in range(cfg.n_blocks):
        ln(f"tr.enc{i}.ln1")
        attn(f"tr.enc{i}.attn")
        ln(f"tr.enc{i}.ln2")
        ff(f"tr.enc{i}.ff")
    ln("tr.enc_ln")
    for i in range(cfg.n_blocks):
        ln(f"tr.dec{i}.ln1")
        attn(f"tr.dec{i}.self")
        ln(f"tr.dec{i}.ln2")
        attn(f"tr.dec{i}.cross")
        ln(f"tr.dec{i}.ln3")
        ff(f"tr.dec{i}.ff")
    ln("tr.dec_ln")
    shapes["tr.out.w"] = (d, L)
    shapes["tr.out.b"] = (L,)
    return shapes


def _init_array(name: str, shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    leaf = name.rsplit(".", 1)[1]
    if leaf == "g":
        return np.ones(shape)
    if leaf.startswith("b") or leaf == "b":
        return np.zeros(shape)
    if name == "tr.start":
        bound = 1.0 / math.sqrt(shape[0])
        return rng.uniform(-bound, bound, size=shape)
    fan_in, fan_out = shape[0], shape[-1]
    bound = math.sqrt(6.0 / (fan_in + fan_out))  # Xavier-uniform
    return rng.uniform(-bound, bound, size=shape)


class OrderingModel:
    """Joint track encoder + ordering transformer with its preprocessing stats."""

    def __init__(self, cfg: ModelConfig, params: dict[str, Tensor],
                 norm_mean: np.ndarray, norm_std: np.ndarray, meta: dict | None = None):
        self.cfg = cfg
        self.params = params
        self.pe = sinusoidal_encoding(cfg.max_len, cfg.d_model)
        self.norm_mean = np.asarray(norm_mean, dtype=np.float64)
        self.norm_std = np.asarray(norm_std, dtype=np.float64)
        if self.norm_mean.shape != (cfg.feature_dim,) or self.norm_std.shape != (cfg.feature_dim,):
            raise ValidationError("normalization statistics must have shape (feature_dim,)")
        if np.any(self.norm_std <= 0):
            raise ValidationError("normalization std must be positive")
        self.meta = dict(meta or {})

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------
    @classmethod
    def initialize(cls, cfg: ModelConfig, seed: int = 0) -> "OrderingModel":
        rng = np.random.default_rng(seed)
        params = {
            name: Tensor(quantize32(_init_array(name, shape, rng)))
            for name, shape in parameter_shapes(cfg).items()
        }
        return cls(cfg, params, np.zeros(cfg.feature_dim), np.ones(cfg.feature_dim),
                   meta={"init_seed": seed})

    def set_normalization(self, mean: np.ndarray, std: np.ndarray) -> None:
        mean = np.asarray(mean, dtype=np.float64)
        std = np.asarray(std, dtype=np.float64)
        if np.any(std <= 0):
            raise ValidationError("normalization std must be positive")
        self.norm_mean = mean
        self.norm_std = std

    def parameter_state(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_parameter_state(self, state: dict[str, np.ndarray]) -> None:
        for k, v in self.params.items():
            v.data = np.array(state[k], dtype=np.float64)

    def n_parameters(self) -> int:
        return sum(v.data.size for v in self.params.values())

    # ------------------------------------------------------------------
    # preprocessing and encoder
    # ------------------------------------------------------------------
    def standardize(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.shape[-1] != self.cfg.feature_dim:
            raise ValidationError(
                f"feature dimension {features.shape[-1]} != model dimension {self.cfg.feature_dim}"
            )
        return (features - self.norm_mean) / self.norm_std

    def _activation(self, x: Tensor) -> Tensor:
        return ad.relu(x) if self.cfg.activation == "relu" else ad.tanh(x)

    def _encode(self, feats_std) -> Tensor:
        """(..., D) standardized features -> (..., D_z) encodings."""
        p = self.params
        h = self._activation(ad.add(ad.matmul(feats_std, p["enc.w1"]), p["enc.b1"]))
        return ad.add(ad.matmul(h, p["enc.w2"]), p["enc.b2"])

    def encode_tracks(self, features: np.ndarray) -> np.ndarray:
        """Raw (M, D) track features -> (M, D_z) encodings.

        Standardization with the model's stored statistics is applied here,
        so callers always pass raw corpus features.
        """
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ValidationError("encode_tracks expects an (M, D) matrix")
        with ad.no_grad():
            z = self._encode(Tensor(self.standardize(features))).data
        if not np.all(np.isfinite(z)):
            raise ValidationError("encoder produced non-finite values")
        return z

    def encode_album(self, album: Album) -> np.ndarray:
        return self.encode_tracks(album.feature_matrix())

    # ------------------------------------------------------------------
    # transformer
    # ------------------------------------------------------------------
    def _heads(self, x: Tensor, length: int) -> Tensor:
        b = x.shape[0]
        h, dh = self.cfg.n_heads, self.cfg.d_model // self.cfg.n_heads
        return ad.transpose(ad.reshape(x, (b, length, h, dh)), (0, 2, 1, 3))

    def _merge_heads(self, x: Tensor, length: int) -> Tensor:
        b = x.shape[0]
        return ad.reshape(ad.transpose(x, (0, 2, 1, 3)), (b, length, self.cfg.d_model))

    def _attn(self, prefix: str, q_in: Tensor, kv_in: Tensor, causal: bool,
              drop_rng) -> Tensor:
        p = self.params
        t_len, s_len = q_in.shape[1], kv_in.shape[1]
        q = self._heads(ad.add(ad.matmul(q_in, p[f"{prefix}.wq"]), p[f"{prefix}.bq"]), t_len)
        k = self._heads(ad.add(ad.matmul(kv_in, p[f"{prefix}.wk"]), p[f"{prefix}.bk"]), s_len)
        v = self._heads(ad.add(ad.matmul(kv_in, p[f"{prefix}.wv"]), p[f"{prefix}.bv"]), s_len)
        dh = self.cfg.d_model // self.cfg.n_heads
        scores = ad.scale(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
        if causal:
            valid = np.tril(np.ones((t_len, s_len), dtype=bool))
        else:
            valid = np.ones((t_len, s_len), dtype=bool)
        weights = ad.exp(ad.masked_log_softmax(scores, valid))
        out = self._merge_heads(ad.matmul(weights, v), t_len)
        out = ad.add(ad.matmul(out, p[f"{prefix}.wo"]), p[f"{prefix}.bo"])
        return self._dropout(out, drop_rng)

    def _ff(self, prefix: str, x: Tensor, drop_rng) -> Tensor:
        p = self.params
        h = self._activation(ad.add(ad.matmul(x, p[f"{prefix}.w1"]), p[f"{prefix}.b1"]))
        return self._dropout(ad.add(ad.matmul(h, p[f"{prefix}.w2"]), p[f"{prefix}.b2"]), drop_rng)

    def _ln(self, prefix: str, x: Tensor) -> Tensor:
        return ad.layer_norm(x, self.params[f"{prefix}.g"], self.params[f"{prefix}.b"])

    def _dropout(self, x: Tensor, drop_rng) -> Tensor:
        if drop_rng is None or self.cfg.dropout_rate <= 0.0:
            return x
        return ad.dropout(x, self.cfg.dropout_rate, drop_rng)

    def _encoder_stack(self, z: Tensor, m: int, drop_rng) -> Tensor:
        """z: (B, M, D_z) -> encoder memory (B, M, d_model)."""
        if m > self.cfg.max_len:
            raise ValidationError(f"album length {m} exceeds model max_len {self.cfg.max_len}")
        p = self.params
        x = ad.add(ad.matmul(z, p["tr.embed.w"]), p["tr.embed.b"])
        x = ad.add(x, self.pe[:m])
        x = self._dropout(x, drop_rng)
        for i in range(self.cfg.n_blocks):
            normed = self._ln(f"tr.enc{i}.ln1", x)
            x = ad.add(x, self._attn(f"tr.enc{i}.attn", normed, normed, False, drop_rng))
            x = ad.add(x, self._ff(f"tr.enc{i}.ff", self._ln(f"tr.enc{i}.ln2", x), drop_rng))
        return self._ln("tr.enc_ln", x)

    def _decoder_stack(self, z: Tensor, memory: Tensor, prefix: np.ndarray, drop_rng) -> Tensor:
        """Teacher-forced decoder: prefix (B, T) of already-chosen slot indices.

        Returns (B, T+1, max_len) raw output-head logits (no masking yet).
        """
        p = self.params
        b = z.shape[0]
        t_len = prefix.shape[1] + 1
        ones = Tensor(np.ones((b, 1, 1)))
        start = ad.matmul(ones, ad.reshape(p["tr.start"], (1, self.cfg.d_model)))
        if prefix.shape[1] > 0:
            chosen = ad.gather_axis1(z, prefix)
            tokens = ad.add(ad.matmul(chosen, p["tr.embed.w"]), p["tr.embed.b"])
            x = ad.concat([start, tokens], axis=1)
        else:
            x = start
        x = ad.add(x, self.pe[:t_len])
        x = self._dropout(x, drop_rng)
        for i in range(self.cfg.n_blocks):
            normed = self._ln(f"tr.dec{i}.ln1", x)
            x = ad.add(x, self._attn(f"tr.dec{i}.self", normed, normed, True, drop_rng))
            x = ad.add(x, self._attn(f"tr.dec{i}.cross", self._ln(f"tr.dec{i}.ln2", x),
                                     memory, False, drop_rng))
            x = ad.add(x, self._ff(f"tr.dec{i}.ff", self._ln(f"tr.dec{i}.ln3", x), drop_rng))
        x = self._ln("tr.dec_ln", x)
        return ad.add(ad.matmul(x, p["tr.out.w"]), p["tr.out.b"])

    # ------------------------------------------------------------------
    # masks, logits, loss
    # ------------------------------------------------------------------
    def step_valid_mask(self, m: int, prefix: np.ndarray, mask_used: bool = True) -> np.ndarray:
        """Boolean (B, T+1, max_len) validity of each slot at each decode step."""
        prefix = np.asarray(prefix, dtype=np.intp)
        if prefix.ndim != 2:
            raise ValidationError("prefix must be (B, T)")
        b, t = prefix.shape
        if m > self.cfg.max_len:
            raise ValidationError(f"album length {m} exceeds model max_len {self.cfg.max_len}")
        valid = np.zeros((b, t + 1, self.cfg.max_len), dtype=bool)
        valid[:, :, :m] = True
        if mask_used:
            rows = np.arange(b)
            for s in range(t):
                valid[rows[:, None], np.arange(s + 1, t + 1)[None, :], prefix[:, s, None]] = False
        return valid

    def _check_prefix(self, m: int, prefix) -> np.ndarray:
        prefix = np.asarray(prefix, dtype=np.intp)
        if prefix.ndim == 1:
            prefix = prefix[None, :]
        if prefix.shape[1] >= m:
            raise ValidationError("teacher prefix must be shorter than the album")
        for row in prefix:
            if len(set(row.tolist())) != row.shape[0]:
                raise ValidationError(f"teacher prefix contains repeats: {row.tolist()}")
            if row.size and (row.min() < 0 or row.max() >= m):
                raise ValidationError(f"teacher prefix index out of range: {row.tolist()}")
        return prefix

    def forward_logits(self, z: np.ndarray, teacher_prefix, mask_used: bool = True) -> np.ndarray:
        """Masked logits for decode steps 0..t given a length-t teacher prefix.

        ``z`` is one album's (M, D_z) encoding; returns (t+1, max_len) with
        -inf at slots >= M and, when ``mask_used``, at already-used slots.
        """
        z = np.asarray(z, dtype=np.float64)
        if z.ndim != 2 or z.shape[1] != self.cfg.z_dim:
            raise ValidationError("z must be (M, D_z)")
        m = z.shape[0]
        prefix = self._check_prefix(m, teacher_prefix)
        with ad.no_grad():
            memory = self._encoder_stack(Tensor(z[None]), m, None)
            raw = self._decoder_stack(Tensor(z[None]), memory, prefix, None).data[0]
        valid = self.step_valid_mask(m, prefix, mask_used)[0]
        out = np.where(valid, raw, -np.inf)
        if not np.all(np.isfinite(out[valid])):
            raise ValidationError("forward pass produced non-finite logits")
        return out

    def _loss_tensor(self, feats_std: np.ndarray, targets: np.ndarray,
                     mask_used: bool = True, drop_rng=None) -> Tensor:
        """Mean per-step cross-entropy (nats) for a batch of equal-length albums.

        ``feats_std`` is (B, M, D) standardized shuffled features; ``targets``
        is (B, M) inverse-permutation slot indices.
        """
        b, m, _ = feats_std.shape
        targets = np.asarray(targets, dtype=np.intp)
        z = self._encode(Tensor(feats_std))
        memory = self._encoder_stack(z, m, drop_rng)
        logits = self._decoder_stack(z, memory, targets[:, :-1], drop_rng)
        valid = self.step_valid_mask(m, targets[:, :-1], mask_used)
        log_p = ad.masked_log_softmax(logits, valid)
        picked = ad.take_pairs(log_p, targets)
        return ad.scale(ad.mean_all(picked), -1.0)

    def album_inputs(self, album: Album, sigma: Permutation) -> tuple[np.ndarray, np.ndarray]:
        """Standardized shuffled features and the target slot sequence."""
        if album.n_tracks != len(sigma):
            raise ValidationError("permutation size != album size")
        feats = self.standardize(album.feature_matrix())
        shuffled = feats[list(sigma.mapping)]
        target = np.array(invert(sigma).mapping, dtype=np.intp)
        return shuffled, target

    def sequence_loss(self, album: Album, sigma: Permutation, mask_used: bool = True) -> float:
        """Mean decode-step cross-entropy in nats for one album and shuffle."""
        return float(-np.mean(self.step_log_probs(album, sigma, mask_used)))

    def step_log_probs(self, album: Album, sigma: Permutation, mask_used: bool = True) -> np.ndarray:
        """Natural-log model probability of the true slot at each decode step."""
        shuffled, target = self.album_inputs(album, sigma)
        with ad.no_grad():
            lt = self._log_probs_of_targets(shuffled[None], target[None], mask_used)
        out = lt[0]
        if not np.all(np.isfinite(out)):
            raise ValidationError("non-finite step log-probability")
        return out

    def _log_probs_of_targets(self, feats_std, targets, mask_used: bool = True) -> np.ndarray:
        b, m, _ = feats_std.shape
        targets = np.asarray(targets, dtype=np.intp)
        z = self._encode(Tensor(feats_std))
        memory = self._encoder_stack(z, m, None)
        logits = self._decoder_stack(z, memory, targets[:, :-1], None)
        valid = self.step_valid_mask(m, targets[:, :-1], mask_used)
        log_p = ad.masked_log_softmax(logits, valid)
        return ad.take_pairs(log_p, targets).data

    # ------------------------------------------------------------------
    # gradients
    # ------------------------------------------------------------------
    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def backward(self, album: Album, sigma: Permutation, mask_used: bool = True) -> dict[str, np.ndarray]:
        """Gradients of ``sequence_loss`` w.r.t. every parameter array."""
        shuffled, target = self.album_inputs(album, sigma)
        self.zero_grad()
        loss = self._loss_tensor(shuffled[None], target[None], mask_used)
        loss.backward()
        grads = {}
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                raise ValidationError(f"non-finite gradient in parameter block {name!r}")
            grads[name] = g
        return grads

    # ------------------------------------------------------------------
    # misc
    # ------------------------------------------------------------------
    def config_dict(self) -> dict:
        return asdict(self.cfg)

    def __repr__(self):
        return (f"OrderingModel(D={self.cfg.feature_dim}, H={self.cfg.encoder_hidden}, "
                f"D_z={self.cfg.z_dim}, d_model={self.cfg.d_model}, params={self.n_parameters()})")
