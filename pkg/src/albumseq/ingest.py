"""Corpus loading, serialization, synthetic generation, and splitting.

Corpus file format (CSV, UTF-8, ``.`` decimal separator, LF or CRLF):

    album_id,track_id,track_position,title,f0,...,f{D-1}

``D`` is inferred from the header.  Rows belonging to one album are grouped
by ``album_id`` and ordered by ``track_position``; albums keep the order of
their first appearance in the file.  A ``.json`` file with the same fields
(an array of row objects, ``features`` as a list) is accepted as an
equivalent.

Non-finite feature values are a hard error, never imputed.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .domain import (
    TRAIN_MAX_TRACKS,
    TRAIN_MIN_TRACKS,
    Album,
    TrackFeatures,
    as_rng,
)
from .errors import CorpusFormatError, ValidationError

CSV_FIXED_COLUMNS = ("album_id", "track_id", "track_position", "title")


@dataclass(frozen=True)
class Corpus:
    """A validated collection of albums sharing one feature dimension."""

    dimension: int
    albums: tuple[Album, ...]
    provenance: str = ""
    dropped: int = 0  # albums removed by the size filter at load time

    def __post_init__(self):
        object.__setattr__(self, "albums", tuple(self.albums))
        for album in self.albums:
            if album.dim != self.dimension:
                raise ValidationError(
                    f"album {album.album_id!r} has dimension {album.dim}, corpus has {self.dimension}"
                )

    @property
    def n_albums(self) -> int:
        return len(self.albums)

    @property
    def n_tracks(self) -> int:
        return sum(a.n_tracks for a in self.albums)

    def album(self, album_id: str) -> Album:
        for a in self.albums:
            if a.album_id == album_id:
                return a
        raise KeyError(album_id)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a desk-scale corpus with a plantable order signal.

    Features are ``base + signal_strength * latent * direction + noise``
    where ``base`` is isotropic Gaussian with its component along
    ``direction`` removed, ``latent`` increases with track position, and
    ``direction`` is one fixed random unit vector for the whole corpus.
    With ``signal_strength=1, noise_scale=0`` sorting tracks by their
    projection onto ``direction`` recovers the original order exactly.
    """

    seed: int
    n_albums: int
    m_range: tuple[int, int] = (TRAIN_MIN_TRACKS, TRAIN_MAX_TRACKS)
    dimension: int = 32
    signal_strength: float = 1.0
    noise_scale: float = 0.0

    def __post_init__(self):
        lo, hi = self.m_range
        if not (1 <= lo <= hi):
            raise ValidationError(f"bad m_range {self.m_range}")
        if self.n_albums < 1 or self.dimension < 1:
            raise ValidationError("n_albums and dimension must be >= 1")
        if not (0.0 <= self.signal_strength <= 1.0):
            raise ValidationError("signal_strength must lie in [0, 1]")
        if self.noise_scale < 0:
            raise ValidationError("noise_scale must be >= 0")


def latent_positions(m: int) -> np.ndarray:
    """Per-position latent values, strictly increasing, spread over [-1, 1]."""
    if m == 1:
        return np.zeros(1)
    return -1.0 + 2.0 * np.arange(m) / (m - 1)


def generate_synthetic(spec: SyntheticSpec) -> Corpus:
    """Deterministically generate a synthetic corpus from ``spec``."""
    rng = as_rng(spec.seed)
    d = spec.dimension
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)

    lo, hi = spec.m_range
    albums = []
    for a in range(spec.n_albums):
        m = int(rng.integers(lo, hi + 1))
        base = rng.normal(size=(m, d))
        base -= np.outer(base @ direction, direction)  # kill base component along the signal axis
        noise = rng.normal(size=(m, d)) * spec.noise_scale
        feats = base + spec.signal_strength * np.outer(latent_positions(m), direction) + noise
        tracks = [
            TrackFeatures(
                track_id=f"a{a:04d}t{i:02d}",
                features=feats[i],
                display_title=f"Track {i + 1} of album {a}",
            )
            for i in range(m)
        ]
        albums.append(Album(album_id=f"a{a:04d}", tracks=tracks))
    return Corpus(dimension=d, albums=tuple(albums), provenance=f"synthetic:{spec.seed}")


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------


def _parse_header(header: list[str]) -> int:
    if len(header) < len(CSV_FIXED_COLUMNS) + 1:
        raise CorpusFormatError(f"header too short: {header}", line=1)
    if tuple(header[: len(CSV_FIXED_COLUMNS)]) != CSV_FIXED_COLUMNS:
        raise CorpusFormatError(
            f"header must start with {','.join(CSV_FIXED_COLUMNS)}", line=1
        )
    feat_cols = header[len(CSV_FIXED_COLUMNS):]
    for i, name in enumerate(feat_cols):
        if name != f"f{i}":
            raise CorpusFormatError(f"expected feature column f{i}, found {name!r}", line=1)
    return len(feat_cols)


def _parse_float(text: str, what: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise CorpusFormatError(f"malformed {what}: {text!r}", line=line) from None
    if not math.isfinite(v):
        raise CorpusFormatError(f"non-finite {what}: {text!r}", line=line)
    return v


def _rows_from_csv(stream: io.TextIOBase):
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise CorpusFormatError("empty file", line=1) from None
    d = _parse_header(header)
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_FIXED_COLUMNS) + d:
            raise CorpusFormatError(
                f"expected {len(CSV_FIXED_COLUMNS) + d} fields, found {len(row)}", line=line_no
            )
        album_id, track_id, pos_text, title = row[:4]
        try:
            position = int(pos_text)
        except ValueError:
            raise CorpusFormatError(f"malformed track_position: {pos_text!r}", line=line_no) from None
        feats = np.array(
            [_parse_float(x, f"feature f{i}", line_no) for i, x in enumerate(row[4:])]
        )
        rows.append((line_no, album_id, track_id, position, title, feats))
    return d, rows


def _rows_from_json(stream: io.TextIOBase):
    try:
        payload = json.load(stream)
    except json.JSONDecodeError as e:
        raise CorpusFormatError(f"invalid JSON: {e}", line=e.lineno) from None
    if not isinstance(payload, list):
        raise CorpusFormatError("JSON corpus must be an array of row objects")
    d = None
    rows = []
    for i, obj in enumerate(payload):
        line = i + 1  # row index; JSON has no meaningful line mapping
        if not isinstance(obj, dict):
            raise CorpusFormatError("row is not an object", line=line)
        try:
            album_id = str(obj["album_id"])
            track_id = str(obj["track_id"])
            position = int(obj["track_position"])
            title = str(obj.get("title", ""))
            raw = obj["features"]
        except KeyError as e:
            raise CorpusFormatError(f"missing field {e.args[0]!r}", line=line) from None
        feats = np.array([_parse_float(str(x), f"feature f{j}", line) for j, x in enumerate(raw)])
        if d is None:
            d = feats.shape[0]
        elif feats.shape[0] != d:
            raise CorpusFormatError(
                f"feature length {feats.shape[0]} != corpus dimension {d}", line=line
            )
        rows.append((line, album_id, track_id, position, title, feats))
    if d is None:
        raise CorpusFormatError("JSON corpus contains no rows")
    return d, rows


def load_corpus(
    path,
    m_min: int = TRAIN_MIN_TRACKS,
    m_max: int = TRAIN_MAX_TRACKS,
    expected_dimension: int | None = None,
) -> Corpus:
    """Load a corpus file, group rows into albums, and apply the size filter.

    Albums with fewer than ``m_min`` or more than ``m_max`` tracks are
    dropped; the count of dropped albums is recorded on the returned corpus.
    """
    path = os.fspath(path)
    fmt = "json" if path.lower().endswith(".json") else "csv"
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return _parse_corpus_stream(fh, fmt, m_min, m_max, path, expected_dimension)


def parse_corpus_text(
    text: str,
    fmt: str = "csv",
    m_min: int = TRAIN_MIN_TRACKS,
    m_max: int = TRAIN_MAX_TRACKS,
    provenance: str = "inline",
    expected_dimension: int | None = None,
) -> Corpus:
    """Parse corpus content already in memory (uploads); same rules as load_corpus."""
    return _parse_corpus_stream(io.StringIO(text), fmt, m_min, m_max, provenance, expected_dimension)


def _parse_corpus_stream(stream, fmt, m_min, m_max, provenance, expected_dimension=None) -> Corpus:
    if fmt == "json":
        d, rows = _rows_from_json(stream)
    else:
        d, rows = _rows_from_csv(stream)
    if expected_dimension is not None and d != expected_dimension:
        raise CorpusFormatError(f"corpus dimension {d} != expected {expected_dimension}", line=1)

    by_album: dict[str, dict[int, tuple]] = {}
    order: list[str] = []
    for line_no, album_id, track_id, position, title, feats in rows:
        slots = by_album.setdefault(album_id, {})
        if position in slots:
            raise CorpusFormatError(
                f"duplicate (album_id, track_position) = ({album_id!r}, {position})", line=line_no
            )
        if not slots:
            order.append(album_id)
        slots[position] = (line_no, track_id, title, feats)

    albums = []
    dropped = 0
    for album_id in order:
        slots = by_album[album_id]
        m = len(slots)
        if not (m_min <= m <= m_max):
            dropped += 1
            continue
        tracks = []
        for position in sorted(slots):
            line_no, track_id, title, feats = slots[position]
            try:
                tracks.append(TrackFeatures(track_id, feats, title))
            except ValidationError as e:
                raise CorpusFormatError(str(e), line=line_no) from None
        try:
            albums.append(Album(album_id, tracks))
        except ValidationError as e:
            raise CorpusFormatError(str(e)) from None
    return Corpus(dimension=d, albums=tuple(albums), provenance=provenance, dropped=dropped)


def _format_float(x: float) -> str:
    return repr(float(x))


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus to ``path`` (CSV, or JSON if the extension is .json).

    Track positions are re-indexed 0..M-1, so load(save(load(f))) is
    identical to load(f).
    """
    path = os.fspath(path)
    if path.lower().endswith(".json"):
        rows = [
            {
                "album_id": album.album_id,
                "track_id": t.track_id,
                "track_position": i,
                "title": t.display_title,
                "features": [float(x) for x in t.features],
            }
            for album in corpus.albums
            for i, t in enumerate(album.tracks)
        ]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=1)
            fh.write("\n")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(CSV_FIXED_COLUMNS) + [f"f{i}" for i in range(corpus.dimension)])
        for album in corpus.albums:
            for i, t in enumerate(album.tracks):
                writer.writerow(
                    [album.album_id, t.track_id, i, t.display_title]
                    + [_format_float(x) for x in t.features]
                )


def split_corpus(
    corpus: Corpus, fractions: dict[str, float], seed: int
) -> dict[str, Corpus]:
    """Album-level split into named parts; deterministic given ``seed``.

    ``fractions`` maps part name to fraction; fractions must sum to 1.
    Counts are floors of the fractions with the remainder assigned to the
    last part.  A part with positive fraction but zero albums is an error.
    """
    names = list(fractions)
    vals = [fractions[n] for n in names]
    if any(v < 0 for v in vals) or abs(sum(vals) - 1.0) > 1e-9:
        raise ValidationError(f"fractions must be >= 0 and sum to 1, got {fractions}")
    n = corpus.n_albums
    idx = as_rng(seed).permutation(n)
    counts = [int(math.floor(v * n)) for v in vals]
    counts[-1] += n - sum(counts)
    parts: dict[str, Corpus] = {}
    start = 0
    for name, count, frac in zip(names, counts, vals):
        if frac > 0 and count == 0:
            raise ValidationError(
                f"corpus with {n} albums too small for split {fractions} (part {name!r} empty)"
            )
        chosen = sorted(idx[start : start + count])
        start += count
        parts[name] = replace(
            corpus,
            albums=tuple(corpus.albums[i] for i in chosen),
            provenance=f"{corpus.provenance}:{name}",
            dropped=0,
        )
    return parts


def standardization_stats(corpus: Corpus) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and standard deviation over every track.

    Dimensions with zero variance get a standard deviation of 1 so that
    standardization is always defined.
    """
    feats = np.concatenate([a.feature_matrix() for a in corpus.albums], axis=0)
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std == 0.0] = 1.0
    return mean, std
