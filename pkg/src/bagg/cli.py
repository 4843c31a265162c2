"""Command-line interface.

Subcommands cover the full pipeline: corpus generation and import,
augmentation caching, training, the benchmark grid, report rendering and
the loss-correlation study.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from random import Random

from . import augment as aug
from . import bench, report
from .dataset import attach_augmentations, load_csv, load_jsonl, save_jsonl
from .model import save_checkpoint
from .trainer import TrainConfig, evaluate, train_from_observations
from .translate import make_translator

logger = logging.getLogger(__name__)


def _add_trainer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=None, help="sampling units per minibatch (texts, or groups under bagg)")
    p.add_argument("--optimizer", choices=["sgd", "adam"], default="adam")
    p.add_argument("--pool", choices=["prob", "logit"], default="prob", dest="pool_space")
    p.add_argument("--embed-dim", type=int, default=64)
    p.add_argument("--hidden-dim", type=int, default=128)


def _train_config(args, mode: str, seed: int) -> TrainConfig:
    return TrainConfig(
        mode=mode,
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        optimizer=args.optimizer,
        seed=seed,
        pool_space=args.pool_space,
        embed_dim=args.embed_dim,
        hidden_dim=args.hidden_dim,
    )


def _load_aug_resources(args) -> tuple[dict, set]:
    thesaurus = aug.load_thesaurus(args.thesaurus) if args.thesaurus else aug.default_thesaurus()
    if args.stopwords:
        from .textproc import load_stopwords

        stopwords = load_stopwords(args.stopwords)
    else:
        from .textproc import default_stopwords

        stopwords = default_stopwords()
    return thesaurus, stopwords


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    corpus = bench.make_synthetic_corpus(
        num_classes=args.classes,
        size=args.size,
        noise_level=args.noise,
        rng=Random(args.seed),
    )
    save_jsonl(corpus, args.out)
    logger.info("wrote %d observations to %s", len(corpus), args.out)
    if args.thesaurus_out:
        thesaurus = bench.synthetic_thesaurus(args.classes)
        with open(args.thesaurus_out, "w", encoding="utf-8") as f:
            for word in sorted(thesaurus):
                f.write(f"{word}\t{','.join(thesaurus[word])}\n")
        logger.info("wrote companion thesaurus to %s", args.thesaurus_out)
    return 0


def cmd_import_csv(args) -> int:
    corpus = load_csv(args.input)
    save_jsonl(corpus, args.out)
    logger.info("converted %d observations to %s", len(corpus), args.out)
    return 0


def cmd_augment(args) -> int:
    corpus = load_jsonl(args.input)
    thesaurus, stopwords = _load_aug_resources(args)
    method_name = args.method_name or args.method
    if args.method == "eda":
        method = aug.eda_method(name=method_name, alpha=args.alpha)
        translator = None
    else:
        routes = [r.strip() for r in args.routes.split(",") if r.strip()]
        method = aug.bt_method(method_name, routes)
        endpoint = args.bt_endpoint or os.environ.get("BAGG_BT_ENDPOINT")
        timeout = float(os.environ.get("BAGG_BT_TIMEOUT", "10"))
        retries = int(os.environ.get("BAGG_BT_RETRIES", "2"))
        translator = make_translator(
            mock=args.bt_mock, endpoint=endpoint, timeout=timeout, retries=retries
        )
    plan = aug.AugmentationPlan(methods=((method, args.count),))
    ctx = aug.AugmentContext(
        thesaurus=thesaurus, stopwords=stopwords, master_seed=args.seed, translator=translator
    )
    records = []
    for obs in corpus.observations:
        records.extend(aug.augment_records(obs.id, obs.original, plan, ctx))
    aug.write_aug_cache(args.out, records)
    logger.info("wrote %d augmentation records to %s", len(records), args.out)
    return 0


def cmd_train(args) -> int:
    corpus = load_jsonl(args.data)
    if args.aug and args.mode != "baseline":
        records = aug.read_aug_cache(args.aug)
        counts: dict[str, int] = {}
        for r in records:
            counts[r.method] = max(counts.get(r.method, 0), r.variant_index + 1)
        corpus = attach_augmentations(corpus, records, sorted(counts.items()))
    config = _train_config(args, mode=args.mode, seed=args.seed)
    model = train_from_observations(corpus, config)
    save_checkpoint(args.out, model.params, config.pool_space, model.vocab)
    logger.info(
        "trained %s model for %d epochs (final loss %.4f); checkpoint at %s",
        args.mode, config.epochs, model.epoch_losses[-1], args.out,
    )
    return 0


def cmd_bench(args) -> int:
    corpus = load_jsonl(args.data)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    modes = tuple(m.strip() for m in args.modes.split(",") if m.strip())
    records_by_method: dict[str, list] = {}
    aug_dir = Path(args.aug_dir) if args.aug_dir else None
    for method in methods:
        if method == "combined":
            continue
        if aug_dir is None:
            raise SystemExit("--aug-dir is required unless methods is empty")
        cache = aug_dir / f"{method}.jsonl"
        if not cache.exists():
            raise SystemExit(f"augmentation cache not found: {cache}")
        records_by_method[method] = aug.read_aug_cache(cache)
    config = bench.ExperimentConfig(
        sample_sizes=tuple(int(x) for x in args.n.split(",")),
        num_categories=tuple(int(x) for x in args.cats.split(",")),
        methods=methods,
        modes=modes,
        repetitions=args.reps,
        master_seed=args.seed,
        aug_count=args.aug_count,
        train=_train_config(args, mode="standard", seed=0),
        cache_dir=Path(args.cache_dir) if args.cache_dir else None,
    )
    table = bench.run_experiment(corpus, records_by_method, config)
    report.write_results_csv(table, args.out)
    logger.info("wrote %d result rows to %s", len(table.rows), args.out)
    for n, cats, method, reason in table.skipped:
        logger.warning("skipped cell n=%d cats=%d method=%s: %s", n, cats, method, reason)
    return 0


def cmd_report(args) -> int:
    table = report.read_results_csv(args.results)
    if args.format == "svg":
        doc = report.render_chart(table, args.out)
        if not args.out:
            sys.stdout.write(doc)
    else:
        text = report.format_table(table, format=args.format)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    if args.out:
        logger.info("wrote %s report to %s", args.format, args.out)
    return 0


def cmd_corr_study(args) -> int:
    corpus = load_jsonl(args.data)
    records = aug.read_aug_cache(args.aug)
    counts: dict[str, int] = {}
    for r in records:
        counts[r.method] = max(counts.get(r.method, 0), r.variant_index + 1)
    result = bench.run_correlation_study(
        corpus,
        records,
        sorted(counts.items()),
        epochs=args.steps,
        train_config=_train_config(args, mode="standard", seed=args.seed),
        seed=args.seed,
    )
    payload = json.dumps(result.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
        logger.info("wrote correlation report to %s", args.out)
    else:
        sys.stdout.write(payload)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bagg",
        description="Text-classification training with grouped augmentation pooling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    p.add_argument("--classes", type=int, default=8)
    p.add_argument("--size", type=int, default=1000)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--thesaurus-out", default=None, help="also write the matching thesaurus")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("import-csv", help="convert an id,text,label CSV to JSONL")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import_csv)

    p = sub.add_parser("augment", help="generate an augmentation cache for a corpus")
    p.add_argument("--input", required=True, help="corpus JSONL")
    p.add_argument("--out", required=True, help="augmentation cache JSONL")
    p.add_argument("--method", choices=["eda", "bt"], required=True)
    p.add_argument("--method-name", default=None, help="method tag recorded in the cache (default: --method)")
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--routes", default="fr,pt,es,it", help="comma-separated pivot language codes")
    p.add_argument("--bt-endpoint", default=None, help="translation service URL (or BAGG_BT_ENDPOINT)")
    p.add_argument("--bt-mock", choices=["deterministic", "identity"], default=None)
    p.add_argument("--thesaurus", default=None, help="thesaurus TSV (default: bundled)")
    p.add_argument("--stopwords", default=None, help="stopword list (default: bundled)")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train one model")
    p.add_argument("--data", required=True, help="training corpus JSONL")
    p.add_argument("--aug", default=None, help="augmentation cache JSONL")
    p.add_argument("--mode", choices=["baseline", "standard", "bagg"], default="standard")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint path")
    _add_trainer_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="run the benchmark grid")
    p.add_argument("--data", required=True)
    p.add_argument("--aug-dir", default=None, help="directory with <method>.jsonl caches")
    p.add_argument("--modes", default="baseline,standard,bagg")
    p.add_argument("--methods", default="eda,bt_a,bt_b,combined")
    p.add_argument("--n", default="100,200", help="comma-separated sample sizes")
    p.add_argument("--cats", default="8,12", help="comma-separated category counts")
    p.add_argument("--reps", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--aug-count", type=int, default=4)
    p.add_argument("--cache-dir", default=None, help="cell cache directory for resumable runs")
    p.add_argument("--out", required=True, help="results CSV path")
    _add_trainer_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render a results CSV as a table or chart")
    p.add_argument("--results", required=True)
    p.add_argument("--format", choices=["md", "csv", "svg"], default="md")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("corr-study", help="loss correlation within vs across groups")
    p.add_argument("--data", required=True)
    p.add_argument("--aug", required=True)
    p.add_argument("--steps", type=int, default=5, help="standard-mode epochs before measuring")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    _add_trainer_args(p)
    p.set_defaults(func=cmd_corr_study)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
