"""Command-line interface: ingest, synth, train, sequence, evaluate, serve."""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .domain import TRAIN_MAX_TRACKS, TRAIN_MIN_TRACKS
from .errors import CheckpointError, CorpusFormatError, DivergenceError, ValidationError
from .ingest import SyntheticSpec, generate_synthetic, load_corpus, save_corpus
from .nn import ModelConfig, OrderingModel, TrainConfig, load_checkpoint, save_checkpoint, train
from .evaluation import run_evaluation
from .sequencer import builtin_templates, extract_essence, fit_to_template, propose_direct, template_by_name


def _add_corpus_bounds(p: argparse.ArgumentParser):
    p.add_argument("--min-tracks", type=int, default=TRAIN_MIN_TRACKS)
    p.add_argument("--max-tracks", type=int, default=TRAIN_MAX_TRACKS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="albumseq", description=__doc__)
    parser.add_argument("--version", action="version", version=f"albumseq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus file and report its contents")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="re-serialize the filtered corpus (format by extension)")
    _add_corpus_bounds(p)

    p = sub.add_parser("synth", help="generate a synthetic corpus with a plantable order signal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--albums", type=int, default=100)
    p.add_argument("--dimension", type=int, default=32)
    p.add_argument("--signal", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--output", required=True)
    _add_corpus_bounds(p)

    p = sub.add_parser("train", help="train an ordering model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--encoder-hidden", type=int, default=256)
    p.add_argument("--z-dim", type=int, default=1)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--d-ff", type=int, default=128)
    p.add_argument("--max-len", type=int, default=TRAIN_MAX_TRACKS)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--history-out", help="write the loss history as JSON")
    _add_corpus_bounds(p)

    p = sub.add_parser("sequence", help="propose orders for one album")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--album-id", help="default: first album in the corpus")
    p.add_argument("--method", choices=["direct", "template"], default="direct")
    p.add_argument("--template", help="template name (template method); default: all")
    p.add_argument("--n", type=int, default=3, help="orders to propose (direct method)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--output", help="write proposals as JSON")

    p = sub.add_parser("evaluate", help="edit-score sweep over k plus an MI estimate")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", default="1,2,3", help="comma-separated k values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-trials", type=int, default=100)
    p.add_argument("--sigma-samples", type=int, default=4)
    p.add_argument("--output-dir", required=True)
    _add_corpus_bounds(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--model", help="checkpoint to load")
    p.add_argument("--static-dir", help="built web UI bundle to serve at /")
    p.add_argument("--ttl", type=float, default=3600.0, help="session idle TTL (seconds)")
    p.add_argument("--upload-limit-mib", type=int, default=32)

    return parser


def cmd_ingest(args) -> int:
    corpus = load_corpus(args.input, m_min=args.min_tracks, m_max=args.max_tracks)
    print(
        f"loaded {corpus.n_albums} albums ({corpus.n_tracks} tracks, dimension "
        f"{corpus.dimension}); dropped {corpus.dropped} albums outside "
        f"[{args.min_tracks}, {args.max_tracks}]"
    )
    if args.output:
        save_corpus(corpus, args.output)
        print(f"wrote {args.output}")
    return 0


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        seed=args.seed,
        n_albums=args.albums,
        m_range=(args.min_tracks, args.max_tracks),
        dimension=args.dimension,
        signal_strength=args.signal,
        noise_scale=args.noise,
    )
    corpus = generate_synthetic(spec)
    save_corpus(corpus, args.output)
    print(f"wrote {corpus.n_albums} albums to {args.output} (seed {args.seed})")
    return 0


def cmd_train(args) -> int:
    corpus = load_corpus(args.corpus, m_min=args.min_tracks, m_max=args.max_tracks)
    if corpus.n_albums == 0:
        raise ValidationError("corpus contains no albums after filtering")
    cfg = ModelConfig(
        feature_dim=corpus.dimension,
        encoder_hidden=args.encoder_hidden,
        z_dim=args.z_dim,
        d_model=args.d_model,
        n_heads=args.heads,
        d_ff=args.d_ff,
        max_len=args.max_len,
        dropout_rate=args.dropout,
    )
    model = OrderingModel.initialize(cfg, seed=args.seed)
    tc = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        val_fraction=args.val_fraction,
    )
    history = train(model, corpus, tc)
    save_checkpoint(model, args.output)
    print(
        f"trained {history.epochs_run} epochs; best val loss "
        f"{history.best_val_loss:.4f} at epoch {history.best_epoch}; wrote {args.output}"
    )
    if args.history_out:
        with open(args.history_out, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "train_loss": history.train_loss,
                    "val_loss": history.val_loss,
                    "best_epoch": history.best_epoch,
                },
                fh,
                indent=1,
            )
            fh.write("\n")
        print(f"wrote {args.history_out}")
    return 0


def _print_order(album, proposal, index):
    titles = [album.tracks[j].title for j in proposal.order]
    if proposal.log_likelihood is not None:
        tag = f"log-likelihood {proposal.log_likelihood:.4f}"
    else:
        tag = f"template {proposal.template_name}, fit cost {proposal.fit_cost:.4f}"
    print(f"#{index}: {tag}")
    for pos, title in enumerate(titles, start=1):
        print(f"   {pos:2d}. {title}")


def cmd_sequence(args) -> int:
    model = load_checkpoint(args.model)
    corpus = load_corpus(args.corpus, m_min=2, m_max=model.cfg.max_len)
    if corpus.n_albums == 0:
        raise ValidationError("corpus contains no sequenceable albums")
    album = corpus.album(args.album_id) if args.album_id else corpus.albums[0]

    results = []
    if args.method == "direct":
        proposals, shortfall = propose_direct(
            model, album, args.n, temperature=args.temperature, rng=args.seed
        )
        if shortfall:
            print(f"note: only {len(proposals)} distinct orders found", file=sys.stderr)
    else:
        chosen = [template_by_name(args.template)] if args.template else builtin_templates()
        essence = extract_essence(model, album)
        proposals = [fit_to_template(essence, t) for t in chosen]

    print(f"album {album.album_id} ({album.n_tracks} tracks), method {args.method}")
    for i, p in enumerate(proposals, start=1):
        _print_order(album, p, i)
        results.append(
            {
                "order": list(p.order.mapping),
                "track_ids": [album.tracks[j].track_id for j in p.order],
                "log_likelihood": p.log_likelihood,
                "fit_cost": p.fit_cost,
                "template": p.template_name,
                "narrative_values": None
                if p.narrative_values is None
                else [float(v) for v in p.narrative_values],
            }
        )
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump({"album_id": album.album_id, "method": args.method, "orders": results}, fh, indent=1)
            fh.write("\n")
        print(f"wrote {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_checkpoint(args.model)
    corpus = load_corpus(args.corpus, m_min=args.min_tracks, m_max=args.max_tracks)
    k_values = [int(x) for x in args.k.split(",") if x.strip()]
    report = run_evaluation(
        model,
        corpus,
        k_values,
        seed=args.seed,
        random_trials=args.random_trials,
        n_sigma_samples=args.sigma_samples,
    )
    paths = report.write_files(args.output_dir)
    for row in report.aggregates:
        print(
            f"k={row['k']:2d} {row['method']:>8}: {row['mean']:.4f} +- {row['stderr']:.4f}"
        )
    if report.mi:
        print(f"MI estimate: {report.mi['mean_bits']:.4f} +- {report.mi['stderr_bits']:.4f} bits/album")
    print("wrote " + ", ".join(paths))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        model=args.model,
        static_dir=args.static_dir,
        ttl_seconds=args.ttl,
        max_upload_bytes=args.upload_limit_mib * 1024 * 1024,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "train": cmd_train,
    "sequence": cmd_sequence,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, CorpusFormatError, CheckpointError, DivergenceError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
