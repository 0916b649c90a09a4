"""albumseq: automatic album sequencing.

Two routes from an unordered set of tracks to a proposed playback order:

* **direct** — a jointly trained track encoder and encoder-decoder
  transformer predict, step by step, which input slot comes next; orders are
  sampled from that distribution and ranked by likelihood.
* **template** — each track is reduced to a scalar narrative value and the
  values are fitted to a target arc shape (rising, arch, ...) by exact
  monotone matching.

Plus an evaluation harness (edit score against the true order, random
baseline, mutual-information estimate), corpus tooling, a CLI, and an HTTP
service for the browser UI.
"""

__version__ = "0.1.0"

from . import domain, evaluation, ingest, nn, sequencer
from .domain import (
    Album,
    EssenceSeries,
    Permutation,
    TrackFeatures,
    apply,
    compose,
    invert,
    random_permutation,
)
from .errors import CheckpointError, CorpusFormatError, DivergenceError, ValidationError
from .ingest import (
    Corpus,
    SyntheticSpec,
    generate_synthetic,
    load_corpus,
    parse_corpus_text,
    save_corpus,
    split_corpus,
)
from .nn import ModelConfig, OrderingModel, TrainConfig, load_checkpoint, save_checkpoint, train
from .sequencer import (
    ProposedOrder,
    TemplateCurve,
    builtin_templates,
    extract_essence,
    fit_to_template,
    propose_direct,
    propose_templates,
    sample_orders,
    top_n_orders,
)
from .evaluation import (
    EvalReport,
    MIEstimate,
    OracleScorer,
    UniformScorer,
    edit_score,
    levenshtein,
    mutual_information_estimate,
    random_baseline,
    run_evaluation,
)

__all__ = [
    "Album",
    "CheckpointError",
    "Corpus",
    "CorpusFormatError",
    "DivergenceError",
    "EssenceSeries",
    "EvalReport",
    "MIEstimate",
    "ModelConfig",
    "OracleScorer",
    "OrderingModel",
    "Permutation",
    "ProposedOrder",
    "SyntheticSpec",
    "TemplateCurve",
    "TrackFeatures",
    "TrainConfig",
    "UniformScorer",
    "ValidationError",
    "apply",
    "builtin_templates",
    "compose",
    "domain",
    "edit_score",
    "evaluation",
    "extract_essence",
    "fit_to_template",
    "generate_synthetic",
    "ingest",
    "invert",
    "levenshtein",
    "load_checkpoint",
    "load_corpus",
    "mutual_information_estimate",
    "nn",
    "parse_corpus_text",
    "propose_direct",
    "propose_templates",
    "random_baseline",
    "random_permutation",
    "run_evaluation",
    "sample_orders",
    "save_checkpoint",
    "save_corpus",
    "sequencer",
    "split_corpus",
    "top_n_orders",
    "train",
]
