"""Metrics, baselines, and the evaluation sweep.

The headline metric is the string edit score of a proposal set T against the
ground-truth order o:

    score(T, o) = max over proposals of 1 - levenshtein(proposal, o) / |o|

which is 1 exactly when the true order is among the proposals.  The mutual
information estimate measures, per album, how much knowing the track set
tells the model about the order:

    I(A) = log2(M!) - total cross-entropy in bits

where the cross-entropy is the model's summed per-step masked cross-entropy
on a shuffled album, averaged over fresh shuffles.  A model that guesses
uniformly among unused slots scores exactly 0; a model that is certain of
every step scores log2(M!).
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .domain import Album, Permutation, apply, as_rng, random_permutation
from .errors import ValidationError
from .ingest import Corpus
from .sequencer import (
    ProposedOrder,
    builtin_templates,
    default_sample_count,
    extract_essence,
    fit_to_template,
    top_n_orders,
    sample_orders,
)

METHODS = ("direct", "template", "random")


def levenshtein(a, b) -> int:
    """Minimum insertions + deletions + substitutions turning ``a`` into ``b``."""
    a, b = list(a), list(b)
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def _as_sequence(item):
    if isinstance(item, ProposedOrder):
        return list(item.order.mapping)
    if isinstance(item, Permutation):
        return list(item.mapping)
    return list(item)


def edit_score(proposals, truth) -> float:
    """Best normalized edit similarity over the proposal set; in [0, 1]."""
    truth = _as_sequence(truth)
    if not truth:
        raise ValidationError("ground-truth order is empty")
    seqs = [_as_sequence(p) for p in proposals]
    if not seqs:
        raise ValidationError("empty proposal set")
    m = len(truth)
    for s in seqs:
        if len(s) != m:
            raise ValidationError(f"proposal length {len(s)} != ground truth length {m}")
    return max(1.0 - levenshtein(s, truth) / m for s in seqs)


def random_baseline(m: int, k: int, rng, trials: int = 1000) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the k-random-orders edit score."""
    if m < 1 or k < 1 or trials < 1:
        raise ValidationError("m, k, trials must all be >= 1")
    rng = as_rng(rng)
    truth = list(range(m))
    scores = np.empty(trials)
    for t in range(trials):
        proposals = [random_permutation(m, rng) for _ in range(k)]
        scores[t] = edit_score(proposals, truth)
    stderr = float(scores.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(scores.mean()), stderr


def exact_random_expectation(m: int, k: int) -> float:
    """Exact E[edit score of k uniform orders] by enumerating all m! orders.

    Independent check for the Monte Carlo baseline; practical for m <= 7.
    """
    import itertools

    if m > 7:
        raise ValidationError("exact enumeration limited to m <= 7")
    truth = list(range(m))
    scores = sorted(
        1.0 - levenshtein(list(p), truth) / m for p in itertools.permutations(range(m))
    )
    n = len(scores)
    # E[max of k iid draws] via the CDF of the single-draw score distribution
    values = sorted(set(scores))
    cdf_below = 0.0
    expectation = 0.0
    for v in values:
        count = sum(1 for s in scores if s == v)
        cdf_at = cdf_below + count / n
        expectation += v * (cdf_at**k - cdf_below**k)
        cdf_below = cdf_at
    return expectation


def log2_factorial(m: int) -> float:
    return float(sum(math.log2(k) for k in range(2, m + 1)))


class UniformScorer:
    """Stub scorer: uniform among unused slots (the no-knowledge policy)."""

    def step_log_probs(self, album: Album, sigma: Permutation) -> np.ndarray:
        m = album.n_tracks
        return np.array([-math.log(m - t) for t in range(m)])


class OracleScorer:
    """Stub scorer: probability 1 on the true slot at every step."""

    def step_log_probs(self, album: Album, sigma: Permutation) -> np.ndarray:
        return np.zeros(album.n_tracks)


@dataclass
class MIEstimate:
    mean_bits: float
    stderr_bits: float
    raw_mean_bits: float
    per_album_bits: list[float]
    per_album_raw_bits: list[float]
    n_sigma_samples: int

    def to_dict(self) -> dict:
        return {
            "mean_bits": self.mean_bits,
            "stderr_bits": self.stderr_bits,
            "raw_mean_bits": self.raw_mean_bits,
            "n_albums": len(self.per_album_bits),
            "n_sigma_samples": self.n_sigma_samples,
        }


def mutual_information_estimate(
    scorer, corpus: Corpus, n_sigma_samples: int = 4, rng=0
) -> MIEstimate:
    """Estimate bits of mutual information between track sets and their order.

    ``scorer`` is anything with ``step_log_probs(album, sigma)`` returning
    natural-log probabilities of the true slot per decode step (an
    ``OrderingModel`` qualifies).  Per-album values are clipped below at 0
    for reporting; the unclipped mean is retained alongside.
    """
    if corpus.n_albums == 0:
        raise ValidationError("corpus is empty")
    if n_sigma_samples < 1:
        raise ValidationError("n_sigma_samples must be >= 1")
    master = as_rng(rng)
    album_seeds = master.integers(0, 2**63 - 1, size=corpus.n_albums)
    raw = []
    for album, seed in zip(corpus.albums, album_seeds):
        album_rng = np.random.default_rng(int(seed))
        ce_bits = []
        for _ in range(n_sigma_samples):
            sigma = random_permutation(album.n_tracks, album_rng)
            lp = np.asarray(scorer.step_log_probs(album, sigma), dtype=np.float64)
            if not np.all(np.isfinite(lp)):
                raise ValidationError(f"scorer produced non-finite log-probs on {album.album_id}")
            ce_bits.append(-lp.sum() / math.log(2))
        raw.append(log2_factorial(album.n_tracks) - float(np.mean(ce_bits)))
    raw_arr = np.array(raw)
    clipped = np.maximum(raw_arr, 0.0)
    stderr = float(clipped.std(ddof=1) / math.sqrt(len(clipped))) if len(clipped) > 1 else 0.0
    return MIEstimate(
        mean_bits=float(clipped.mean()),
        stderr_bits=stderr,
        raw_mean_bits=float(raw_arr.mean()),
        per_album_bits=[float(x) for x in clipped],
        per_album_raw_bits=[float(x) for x in raw_arr],
        n_sigma_samples=n_sigma_samples,
    )


# ---------------------------------------------------------------------------
# the k-sweep
# ---------------------------------------------------------------------------


@dataclass
class EvalReport:
    k_values: list[int]
    methods: list[str]
    seed: int
    per_album: list[dict] = field(default_factory=list)
    aggregates: list[dict] = field(default_factory=list)
    mi: dict | None = None
    notes: list[str] = field(default_factory=list)

    def aggregate(self, method: str, k: int) -> dict:
        for row in self.aggregates:
            if row["method"] == method and row["k"] == k:
                return row
        raise KeyError((method, k))

    def to_json_dict(self) -> dict:
        return {
            "k_values": self.k_values,
            "methods": self.methods,
            "seed": self.seed,
            "aggregates": self.aggregates,
            "mi": self.mi,
            "notes": self.notes,
            "per_album": self.per_album,
        }

    def plot_data(self) -> dict:
        """k on the x axis, mean +- stderr per method: ready for plotting."""
        series = []
        for method in self.methods:
            rows = [self.aggregate(method, k) for k in self.k_values]
            series.append(
                {
                    "method": method,
                    "mean": [r["mean"] for r in rows],
                    "stderr": [r["stderr"] for r in rows],
                }
            )
        return {"k": self.k_values, "series": series}

    def write_files(self, out_dir) -> list[str]:
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        p = os.path.join(out_dir, "report.json")
        with open(p, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")
        paths.append(p)
        p = os.path.join(out_dir, "per_album.csv")
        with open(p, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["album_id", "M", "k", "method", "edit_score"], lineterminator="\n"
            )
            writer.writeheader()
            writer.writerows(self.per_album)
        paths.append(p)
        p = os.path.join(out_dir, "plot.json")
        with open(p, "w", encoding="utf-8") as fh:
            json.dump(self.plot_data(), fh, indent=1)
            fh.write("\n")
        paths.append(p)
        return paths


def run_evaluation(
    model,
    corpus: Corpus,
    k_values,
    seed: int = 0,
    methods=METHODS,
    random_trials: int = 100,
    n_sigma_samples: int = 4,
    m_samples: int | None = None,
) -> EvalReport:
    """Score every album under each method at each k; aggregate over albums.

    Albums are presented to the model in a fresh random order (the model
    never sees the ground truth).  The direct method draws one sample pool
    per album and takes nested top-k cuts from it; the template method uses
    the first k built-in templates; the random baseline averages
    ``random_trials`` resampled proposal sets.  Deterministic given ``seed``.
    """
    k_values = sorted(set(int(k) for k in k_values))
    if not k_values or k_values[0] < 1:
        raise ValidationError("k_values must be positive integers")
    if corpus.n_albums == 0:
        raise ValidationError("corpus is empty")
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValidationError(f"unknown methods: {sorted(unknown)}")

    templates = builtin_templates()
    report = EvalReport(k_values=list(k_values), methods=list(methods), seed=seed)
    if "template" in methods and max(k_values) > len(templates):
        report.notes.append(
            f"template method truncated at {len(templates)} built-in templates "
            f"for k > {len(templates)}"
        )

    max_k = max(k_values)
    pool_size = m_samples if m_samples is not None else default_sample_count(max_k)
    master = as_rng(seed)
    album_seeds = master.integers(0, 2**63 - 1, size=corpus.n_albums)

    scores: dict[tuple[str, int], list[float]] = {
        (method, k): [] for method in methods for k in k_values
    }
    for album, aseed in zip(corpus.albums, album_seeds):
        ss = np.random.SeedSequence(int(aseed))
        sigma_rng, sample_rng, base_rng = [np.random.default_rng(s) for s in ss.spawn(3)]
        m = album.n_tracks
        sigma = random_permutation(m, sigma_rng)
        shuffled = Album(album.album_id, tuple(apply(sigma, list(album.tracks))))
        truth_ids = list(album.track_ids)
        shuffled_ids = list(shuffled.track_ids)

        per_method_orders: dict[str, list] = {}
        if "direct" in methods:
            samples = sample_orders(model, shuffled, pool_size, rng=sample_rng)
            ranked, _ = top_n_orders(samples, pool_size)
            per_method_orders["direct"] = ranked
        if "template" in methods:
            essence = extract_essence(model, shuffled)
            per_method_orders["template"] = [fit_to_template(essence, t) for t in templates]

        for k in k_values:
            for method in methods:
                if method == "random":
                    identity = list(range(m))  # uniform orders vs any fixed truth, by symmetry
                    vals = [
                        edit_score([random_permutation(m, base_rng) for _ in range(k)], identity)
                        for _ in range(random_trials)
                    ]
                    score = float(np.mean(vals))
                else:
                    chosen = per_method_orders[method][: min(k, len(per_method_orders[method]))]
                    id_seqs = [[shuffled_ids[j] for j in p.order] for p in chosen]
                    score = edit_score(id_seqs, truth_ids)
                scores[(method, k)].append(score)
                report.per_album.append(
                    {
                        "album_id": album.album_id,
                        "M": m,
                        "k": k,
                        "method": method,
                        "edit_score": score,
                    }
                )

    for method in methods:
        for k in k_values:
            vals = np.array(scores[(method, k)])
            stderr = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            report.aggregates.append(
                {
                    "method": method,
                    "k": k,
                    "mean": float(vals.mean()),
                    "stderr": stderr,
                    "n_albums": int(len(vals)),
                }
            )

    if "direct" in methods and hasattr(model, "step_log_probs"):
        mi_rng = np.random.default_rng(np.random.SeedSequence([seed, corpus.n_albums]))
        report.mi = mutual_information_estimate(
            model, corpus, n_sigma_samples=n_sigma_samples, rng=mi_rng
        ).to_dict()
    return report
