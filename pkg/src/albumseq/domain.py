"""Core value types: track features, albums, and permutation algebra.

Conventions used throughout the package:

* A permutation ``p`` of size ``M`` is a list of the integers ``0..M-1``.
* ``apply(p, items)`` returns ``out`` with ``out[j] = items[p[j]]``, i.e.
  ``p[j]`` names which input item lands at position ``j``.
* ``invert(p)`` returns ``q`` with ``q[p[j]] == j``.  If an album is shuffled
  with ``apply(sigma, tracks)``, then ``invert(sigma)[t]`` is the slot within
  the shuffled sequence holding the track that is t-th in the original order.
  That index sequence is the model's prediction target.

All values are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DEFAULT_FEATURE_DIM = 525
TRAIN_MIN_TRACKS = 3
TRAIN_MAX_TRACKS = 20


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TrackFeatures:
    """One track: an opaque id plus its D-dimensional feature vector."""

    track_id: str
    features: np.ndarray
    display_title: str = ""

    def __post_init__(self):
        object.__setattr__(self, "features", _freeze(np.atleast_1d(self.features)))
        if self.features.ndim != 1:
            raise ValidationError(f"track {self.track_id!r}: features must be 1-D")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError(f"track {self.track_id!r}: non-finite feature value")

    @property
    def dim(self) -> int:
        return self.features.shape[0]

    @property
    def title(self) -> str:
        return self.display_title or self.track_id


@dataclass(frozen=True)
class Album:
    """An ordered list of tracks; the stored order is the ground truth."""

    album_id: str
    tracks: tuple[TrackFeatures, ...]

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))
        if not self.tracks:
            raise ValidationError(f"album {self.album_id!r}: no tracks")
        ids = [t.track_id for t in self.tracks]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"album {self.album_id!r}: duplicate track_id")
        dims = {t.dim for t in self.tracks}
        if len(dims) != 1:
            raise ValidationError(
                f"album {self.album_id!r}: inconsistent feature dimensions {sorted(dims)}"
            )

    @property
    def n_tracks(self) -> int:
        return len(self.tracks)

    @property
    def dim(self) -> int:
        return self.tracks[0].dim

    @property
    def track_ids(self) -> tuple[str, ...]:
        return tuple(t.track_id for t in self.tracks)

    def feature_matrix(self) -> np.ndarray:
        """Stack features into an (M, D) array in the album's stored order."""
        return np.stack([t.features for t in self.tracks])


class Permutation:
    """A bijection on ``{0..M-1}`` stored as a tuple of target indices."""

    __slots__ = ("mapping",)

    def __init__(self, mapping):
        m = tuple(int(x) for x in mapping)
        if sorted(m) != list(range(len(m))):
            raise ValidationError(f"not a permutation of 0..{len(m) - 1}: {m}")
        self.mapping = m

    def __len__(self):
        return len(self.mapping)

    def __iter__(self):
        return iter(self.mapping)

    def __getitem__(self, j):
        return self.mapping[j]

    def __eq__(self, other):
        if isinstance(other, Permutation):
            return self.mapping == other.mapping
        return NotImplemented

    def __hash__(self):
        return hash(self.mapping)

    def __repr__(self):
        return f"Permutation({list(self.mapping)})"

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(n))


def invert(p: Permutation) -> Permutation:
    """Return q with q[p[j]] == j for all j."""
    q = [0] * len(p)
    for j, pj in enumerate(p):
        q[pj] = j
    return Permutation(q)


def apply(p: Permutation, items):
    """Reorder ``items`` so that output position j holds ``items[p[j]]``."""
    if len(items) != len(p):
        raise ValidationError(f"cannot apply size-{len(p)} permutation to {len(items)} items")
    if isinstance(items, np.ndarray):
        return items[list(p.mapping)]
    return type(items)(items[j] for j in p)


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Return the permutation r with apply(r, x) == apply(q, apply(p, x))."""
    if len(p) != len(q):
        raise ValidationError("size mismatch in composition")
    return Permutation(p[j] for j in q)


def random_permutation(n: int, rng: np.random.Generator) -> Permutation:
    """Uniform random permutation of size n (Fisher-Yates via numpy)."""
    if n < 1:
        raise ValidationError("permutation size must be >= 1")
    return Permutation(rng.permutation(n))


def as_rng(seed_or_rng) -> np.random.Generator:
    """Accept either a seed or an existing Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


# An essence series is one scalar narrative value per track, in a stated
# track order.  Represented as a plain 1-D float array.
EssenceSeries = np.ndarray


def check_essence(values, n: int | None = None) -> np.ndarray:
    """Validate and return an essence series as a read-only float array."""
    v = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if v.ndim != 1:
        raise ValidationError("essence series must be 1-D")
    if n is not None and v.shape[0] != n:
        raise ValidationError(f"essence length {v.shape[0]} != expected {n}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("non-finite essence value")
    return _freeze(v)
