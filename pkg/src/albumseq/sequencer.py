"""Proposal generation: direct model sampling and narrative-template fitting.

A proposed order is a pointer sequence: entry ``j`` is the index, within the
album's given track list, of the track to play at position ``j`` (so the
proposed playback sequence is ``apply(order, tracks)``).

The template route fits each track's scalar narrative value to a target
curve shape.  The fit minimizes the total L1 distance between the rescaled
narrative values, read in proposed order, and the template sampled at the
position midpoints (i + 0.5)/M.  Sorting both sides and pairing by rank is
exact for this cost (rearrangement inequality), which keeps the fit at
O(M log M) while staying brute-force verifiable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Album, EssenceSeries, Permutation, as_rng, check_essence
from .errors import ValidationError
from .nn import OrderingModel, no_grad
from .nn.autodiff import Tensor

DEFAULT_TEMPERATURE = 1.0


def default_sample_count(n: int) -> int:
    """How many samples to draw when the caller wants the top n orders."""
    return max(10 * n, 100)


@dataclass(frozen=True)
class ProposedOrder:
    """One proposed ordering with the score its method assigned to it.

    Exactly one of ``log_likelihood`` (direct method, nats) and ``fit_cost``
    (template method, L1 cost) is present.
    """

    order: Permutation
    log_likelihood: float | None = None
    fit_cost: float | None = None
    narrative_values: EssenceSeries | None = None
    template_name: str | None = None

    def __post_init__(self):
        if (self.log_likelihood is None) == (self.fit_cost is None):
            raise ValidationError(
                "exactly one of log_likelihood / fit_cost must be present"
            )
        if self.narrative_values is not None:
            object.__setattr__(
                self, "narrative_values", check_essence(self.narrative_values, len(self.order))
            )


@dataclass(frozen=True)
class TemplateCurve:
    """A target narrative-arc shape as a piecewise-linear curve on [0, 1]."""

    name: str
    control_points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.control_points)
        object.__setattr__(self, "control_points", pts)
        xs = [x for x, _ in pts]
        ys = [y for _, y in pts]
        if len(pts) < 2 or xs[0] != 0.0 or xs[-1] != 1.0:
            raise ValidationError(f"template {self.name!r}: fractions must run from 0 to 1")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValidationError(f"template {self.name!r}: fractions must strictly increase")
        if not all(np.isfinite(ys)) or min(ys) < 0.0 or max(ys) > 1.0:
            raise ValidationError(f"template {self.name!r}: values must lie in [0, 1]")

    def value_at(self, fraction) -> np.ndarray:
        xs = [x for x, _ in self.control_points]
        ys = [y for _, y in self.control_points]
        return np.interp(np.clip(fraction, 0.0, 1.0), xs, ys)

    def sample_midpoints(self, m: int) -> np.ndarray:
        """Template values at the m position midpoints (i + 0.5) / m."""
        if m < 1:
            raise ValidationError("m must be >= 1")
        return self.value_at((np.arange(m) + 0.5) / m)

    def polyline(self, n_points: int = 64) -> np.ndarray:
        xs = np.linspace(0.0, 1.0, n_points)
        return np.column_stack([xs, self.value_at(xs)])


def builtin_templates() -> list[TemplateCurve]:
    return [
        TemplateCurve("rising", ((0.0, 0.0), (1.0, 1.0))),
        TemplateCurve("falling", ((0.0, 1.0), (1.0, 0.0))),
        TemplateCurve("arch", ((0.0, 0.0), (0.5, 1.0), (1.0, 0.0))),
        TemplateCurve("valley", ((0.0, 1.0), (0.5, 0.0), (1.0, 1.0))),
        TemplateCurve("late-peak", ((0.0, 0.2), (0.8, 1.0), (1.0, 0.6))),
    ]


def template_by_name(name: str) -> TemplateCurve:
    for t in builtin_templates():
        if t.name == name:
            return t
    raise ValidationError(
        f"unknown template {name!r}; valid names: {[t.name for t in builtin_templates()]}"
    )


def rescale_unit(values: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1]; a constant series maps to all 0.5."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.full_like(values, 0.5)
    return (values - lo) / (hi - lo)


def fit_to_template(essence, template: TemplateCurve, m: int | None = None) -> ProposedOrder:
    """Order tracks so their narrative values trace the template.

    Exact minimizer of sum_i |rescaled_essence[order[i]] - template_mid[i]|.
    Ties (equal template values) assign tracks in input order, so a constant
    template returns the input order unchanged.
    """
    essence = check_essence(essence, m)
    m = essence.shape[0]
    targets = template.sample_midpoints(m)
    rescaled = rescale_unit(essence)

    track_rank = np.argsort(rescaled, kind="stable")
    pos_rank = np.argsort(targets, kind="stable")
    order = np.empty(m, dtype=np.intp)
    order[pos_rank] = track_rank

    # within a run of equal template values any assignment costs the same;
    # put the lower input indices first so degenerate templates are stable
    sorted_targets = targets[pos_rank]
    start = 0
    for end in range(1, m + 1):
        if end == m or sorted_targets[end] != sorted_targets[start]:
            group_positions = np.sort(pos_rank[start:end])
            order[group_positions] = np.sort(order[group_positions])
            start = end

    cost = float(np.abs(rescaled[order] - targets).sum())
    return ProposedOrder(
        order=Permutation(order),
        fit_cost=cost,
        narrative_values=essence[order],
        template_name=template.name,
    )


def extract_essence(model: OrderingModel, album: Album) -> EssenceSeries:
    """Per-track narrative value (the 1-D encoding), in the album's track order."""
    if model.cfg.z_dim != 1:
        raise ValidationError(
            f"narrative values need a 1-D encoder; this model has z_dim={model.cfg.z_dim} "
            "(load a z_dim=1 checkpoint)"
        )
    return check_essence(model.encode_album(album)[:, 0])


# ---------------------------------------------------------------------------
# direct sampling from the ordering model
# ---------------------------------------------------------------------------


def _categorical_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one index per row from row-normalized probabilities."""
    cdf = np.cumsum(probs, axis=1)
    cdf /= cdf[:, -1:]
    u = rng.random(probs.shape[0])
    idx = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def sample_orders(
    model: OrderingModel,
    album: Album,
    m_samples: int,
    temperature: float = DEFAULT_TEMPERATURE,
    rng=0,
    greedy: bool = False,
) -> list[ProposedOrder]:
    """Draw orders autoregressively from the model's masked distribution.

    Slots beyond the album and already-used slots are masked out, so every
    sample is a valid permutation.  Log-likelihoods are recorded at
    temperature 1 regardless of the sampling temperature.  With
    ``greedy=True`` a single stepwise-argmax order is returned.
    """
    if album.n_tracks > model.cfg.max_len:
        raise ValidationError(
            f"album has {album.n_tracks} tracks, model max_len is {model.cfg.max_len}"
        )
    if m_samples < 1:
        raise ValidationError("m_samples must be >= 1")
    if temperature <= 0:
        raise ValidationError("temperature must be > 0 (use greedy=True for the argmax order)")
    rng = as_rng(rng)
    m = album.n_tracks
    n_rows = 1 if greedy else m_samples

    z = model.encode_album(album)
    with no_grad():
        z_t = Tensor(np.repeat(z[None], n_rows, axis=0))
        memory = model._encoder_stack(z_t, m, None)
        prefix = np.zeros((n_rows, 0), dtype=np.intp)
        total_lp = np.zeros(n_rows)
        for _ in range(m):
            raw = model._decoder_stack(z_t, memory, prefix, None).data[:, -1, :]
            valid = model.step_valid_mask(m, prefix, mask_used=True)[:, -1, :]
            neg = np.where(valid, raw, -np.inf)
            shift = neg - neg.max(axis=1, keepdims=True)
            ex = np.exp(shift)
            log_z = np.log(ex.sum(axis=1, keepdims=True))
            if greedy:
                chosen = np.argmax(neg, axis=1)
            else:
                if temperature != 1.0:
                    ex_t = np.exp(np.where(valid, shift / temperature, -np.inf))
                else:
                    ex_t = ex
                chosen = _categorical_rows(ex_t, rng)
                bad = ~valid[np.arange(n_rows), chosen]
                if bad.any():  # float-edge guard; masked slots have probability 0
                    chosen[bad] = np.argmax(np.where(valid, ex_t, -1.0), axis=1)[bad]
            total_lp += (shift - log_z)[np.arange(n_rows), chosen]
            prefix = np.concatenate([prefix, chosen[:, None]], axis=1)

    narrative = z[:, 0] if model.cfg.z_dim == 1 else None
    out = []
    for row in range(n_rows):
        order = Permutation(prefix[row])
        out.append(
            ProposedOrder(
                order=order,
                log_likelihood=float(total_lp[row]),
                narrative_values=None if narrative is None else narrative[list(order.mapping)],
            )
        )
    return out


def top_n_orders(samples: list[ProposedOrder], n: int) -> tuple[list[ProposedOrder], bool]:
    """Deduplicate and rank sampled orders by likelihood.

    Returns the top-n list plus a shortfall flag set when fewer than ``n``
    distinct orders were available.  Ties in likelihood break
    lexicographically on the order itself so the result is deterministic.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not samples:
        raise ValidationError("no samples to rank")
    unique: dict[tuple, ProposedOrder] = {}
    for s in samples:
        if s.log_likelihood is None:
            raise ValidationError("top_n_orders ranks direct-method samples only")
        unique.setdefault(s.order.mapping, s)
    ranked = sorted(unique.values(), key=lambda s: (-s.log_likelihood, s.order.mapping))
    return ranked[:n], len(ranked) < n


def propose_direct(
    model: OrderingModel,
    album: Album,
    n: int,
    temperature: float = DEFAULT_TEMPERATURE,
    rng=0,
    m_samples: int | None = None,
) -> tuple[list[ProposedOrder], bool]:
    """Sample-then-rank convenience wrapper: top ``n`` of ``m_samples`` draws."""
    if m_samples is None:
        m_samples = default_sample_count(n)
    samples = sample_orders(model, album, m_samples, temperature=temperature, rng=rng)
    return top_n_orders(samples, n)


def propose_templates(
    model: OrderingModel, album: Album, templates: list[TemplateCurve] | None = None
) -> list[ProposedOrder]:
    """Fit the album's narrative values to each template."""
    essence = extract_essence(model, album)
    return [fit_to_template(essence, t) for t in (templates or builtin_templates())]
