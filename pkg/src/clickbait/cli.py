"""Command-line entry point tying the library into batch pipelines.

Subcommands: ``embed train|export``, ``classify train|predict``, ``eval cv``,
``topics fit``, ``similarity``, and ``analyze rates|status|engagement|
reposts|timeline``. Every artifact gets a run manifest written beside it
(resolved configuration, seed, input digests, package version) so any run
can be audited and replayed; reruns with the same seed at ``--workers 1``
are byte-identical. Exit codes: 0 success, 1 runtime failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import secrets
import sys

from . import __version__
from .analytics import (
    annotate_corpus,
    clickbait_rates,
    engagement_summary,
    posts_per_day_delta,
    repost_frequency,
    status_vs_headline,
)
from .classify import (
    ClassifierConfig,
    load_classifier,
    predict_batch,
    save_classifier,
    train_classifier,
)
from .corpus import load_labeled_headlines, load_posts
from .embed import (
    EmbeddingConfig,
    export_vectors,
    load_model,
    load_vectors,
    save_model,
    train_embeddings,
)
from .metrics import cross_validate
from .similar import density_estimate, headline_body_similarity
from .textproc import DEFAULT_BUCKETS, DEFAULT_NGRAM_MAX, DEFAULT_NGRAM_MIN, tokenize
from .topics import extract_biterms, fit_btm, top_words
from ._stopwords import STOPWORDS

logger = logging.getLogger(__name__)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out_path: str, command: str, args: argparse.Namespace, inputs: list[str]) -> None:
    config = {
        k: v
        for k, v in sorted(vars(args).items())
        if k != "func" and not k.startswith("_")
    }
    manifest = {
        "command": command,
        "config": config,
        "seed": args.seed,
        "inputs": {path: _sha256(path) for path in inputs},
        "package_version": __version__,
    }
    if os.path.isdir(out_path):
        target = os.path.join(out_path, "run_manifest.json")
    else:
        target = out_path + ".manifest.json"
    with open(target, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require_file(parser: argparse.ArgumentParser, path: str) -> None:
    if not os.path.exists(path):
        parser.error(f"input file not found: {path}")


def _resolve_seed(args: argparse.Namespace) -> None:
    if args.seed is None:
        args.seed = secrets.randbelow(2**31)
        logger.info("no --seed given; generated seed %d", args.seed)


def _read_corpus_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def _load_pretrained(path: str):
    with open(path, "rb") as fh:
        magic = fh.read(5)
    if magic == b"CBEM1":
        return load_model(path)
    return load_vectors(path)


def _cmd_embed_train(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    _require_file(parser, args.corpus)
    config = EmbeddingConfig(
        dim=args.dim,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        initial_lr=args.lr,
        subsample=args.subsample,
        seed=args.seed,
        workers=args.workers,
    )
    texts = _read_corpus_lines(args.corpus)
    model = train_embeddings(
        texts,
        config,
        min_count=args.min_count,
        bucket_count=args.buckets,
        ngram_min=args.ngram_min,
        ngram_max=args.ngram_max,
    )
    save_model(model, args.out)
    _write_manifest(args.out, "embed train", args, [args.corpus])
    print(f"trained embeddings: |V|={len(model.vocab)} dim={model.dim} -> {args.out}")
    return 0


def _cmd_embed_export(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    _require_file(parser, args.model)
    model = load_model(args.model)
    export_vectors(model, args.out)
    _write_manifest(args.out, "embed export", args, [args.model])
    print(f"exported {len(model.vocab)} vectors -> {args.out}")
    return 0


def _cmd_classify_train(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    _require_file(parser, args.data)
    if args.pretrained is not None:
        _require_file(parser, args.pretrained)
    config = ClassifierConfig(
        epochs=args.epochs,
        initial_lr=args.lr,
        seed=args.seed,
        workers=args.workers,
        freeze_embeddings=args.freeze_embeddings,
        dim=args.dim,
        min_count=args.min_count,
        bucket_count=args.buckets,
        ngram_min=args.ngram_min,
        ngram_max=args.ngram_max,
    )
    data = load_labeled_headlines(args.data)
    init = _load_pretrained(args.pretrained) if args.pretrained else None
    model = train_classifier(data, init=init, config=config)
    save_classifier(model, args.out)
    inputs = [args.data] + ([args.pretrained] if args.pretrained else [])
    _write_manifest(args.out, "classify train", args, inputs)
    print(f"trained classifier on {len(data)} headlines -> {args.out}")
    return 0


def _cmd_classify_predict(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    _require_file(parser, args.model)
    if args.text is None and args.input is None:
        parser.error("provide --text or --input")
    if args.input is not None:
        _require_file(parser, args.input)
    model = load_classifier(args.model)
    texts = [args.text] if args.text is not None else _read_corpus_lines(args.input)
    lines = [
        f"{p.label}\t{p.p_clickbait:.6f}" for p in predict_batch(model, texts)
    ]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        inputs = [args.model] + ([args.input] if args.input else [])
        _write_manifest(args.out, "classify predict", args, inputs)
    else:
        for line in lines:
            print(line)
    return 0


def _cmd_eval_cv(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    if args.k < 2:
        parser.error(f"--k must be >= 2 (got {args.k})")
    if args.repeats < 1:
        parser.error(f"--repeats must be >= 1 (got {args.repeats})")
    _require_file(parser, args.data)
    if args.pretrained is not None:
        _require_file(parser, args.pretrained)
    config = ClassifierConfig(
        epochs=args.epochs,
        initial_lr=args.lr,
        seed=args.seed,
        workers=args.workers,
        dim=args.dim,
        min_count=args.min_count,
        bucket_count=args.buckets,
        ngram_min=args.ngram_min,
        ngram_max=args.ngram_max,
    )
    data = load_labeled_headlines(args.data)
    pretrained = _load_pretrained(args.pretrained) if args.pretrained else None
    report = cross_validate(
        data, k=args.k, repeats=args.repeats, config=config, pretrained=pretrained
    )
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    inputs = [args.data] + ([args.pretrained] if args.pretrained else [])
    _write_manifest(args.report, "eval cv", args, inputs)
    print(
        "cv result: accuracy=%.4f precision=%.4f recall=%.4f f=%.4f "
        "kappa=%.4f auc=%.4f"
        % (
            report.accuracy,
            report.precision,
            report.recall,
            report.f_measure,
            report.kappa,
            report.roc_auc,
        )
    )
    return 0


def _cmd_topics_fit(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    if args.k < 2:
        parser.error(f"--k must be >= 2 (got {args.k})")
    _require_file(parser, args.docs)
    docs = [tokenize(line) for line in _read_corpus_lines(args.docs)]
    stop = frozenset() if args.no_stopwords else STOPWORDS
    biterms, vocab = extract_biterms(docs, stopwords=stop)
    if not biterms:
        print("error: no biterms after filtering; corpus too small", file=sys.stderr)
        return 1
    model = fit_btm(
        biterms,
        vocab,
        n_topics=args.k,
        alpha=args.alpha,
        beta=args.beta,
        iterations=args.iterations,
        seed=args.seed,
    )
    summary = top_words(model, args.topn)
    with open(args.out, "w", encoding="utf-8") as fh:
        for i, topic in enumerate(summary.topics, start=1):
            words = "\t".join(word for word, _ in topic)
            fh.write(f"T{i}\t{words}\n")
    _write_manifest(args.out, "topics fit", args, [args.docs])
    print(f"fit {args.k} topics over {len(biterms)} biterms -> {args.out}")
    return 0


def _write_density_files(out_dir: str, group: str, values: list[float]) -> None:
    values_path = os.path.join(out_dir, f"{group}.values.tsv")
    with open(values_path, "w", encoding="utf-8") as fh:
        for v in values:
            fh.write(f"{v:.6f}\n")
    if len(values) < 2 or len(set(values)) < 2:
        logger.warning(
            "group %s has %d value(s) with no spread; skipping density curve",
            group,
            len(values),
        )
        return
    curve = density_estimate(values)
    density_path = os.path.join(out_dir, f"{group}.density.tsv")
    with open(density_path, "w", encoding="utf-8") as fh:
        for x, y in zip(curve.grid, curve.density):
            fh.write(f"{x:.6f}\t{y:.6f}\n")


def _cmd_similarity(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    _require_file(parser, args.posts)
    _require_file(parser, args.model)
    posts = load_posts(args.posts)
    model = load_classifier(args.model)
    annotated = annotate_corpus(posts, model)
    os.makedirs(args.out, exist_ok=True)
    groups: dict[str, list[float]] = {}
    for a in annotated:
        if a.similarity is None:
            continue
        # annotate_corpus stores max-mode similarity; recompute for mean
        sim = (
            a.similarity
            if args.mode == "max"
            else headline_body_similarity(a.post.headline, a.post.body, mode="mean")
        )
        groups.setdefault(f"{a.post.category}_{a.headline_label}", []).append(sim)
    for group, values in sorted(groups.items()):
        _write_density_files(args.out, group, values)
    _write_manifest(args.out, "similarity", args, [args.posts, args.model])
    print(f"wrote similarity curves for {len(groups)} groups -> {args.out}")
    return 0


def _cmd_analyze(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    _require_file(parser, args.posts)
    needs_model = args.what != "timeline"
    if needs_model:
        if args.model is None:
            parser.error(f"analyze {args.what} requires --model")
        _require_file(parser, args.model)
    posts = load_posts(args.posts)
    os.makedirs(args.out, exist_ok=True)
    inputs = [args.posts]
    if needs_model:
        model = load_classifier(args.model)
        annotated = annotate_corpus(posts, model)
        inputs.append(args.model)
    if args.what == "rates":
        path = os.path.join(args.out, "rates.tsv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("group\tclickbait\tnon_clickbait\tpercent\n")
            for row in clickbait_rates(annotated, group_by=args.group_by, top_n=args.top_n):
                fh.write(
                    f"{row.group}\t{row.clickbait_count}\t"
                    f"{row.non_clickbait_count}\t{row.percent:.2f}\n"
                )
    elif args.what == "status":
        path = os.path.join(args.out, "status.tsv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("category\tclickbait_status\tnon_clickbait_link\tpercent\texcluded\n")
            for row in status_vs_headline(annotated):
                pct = "" if row.percent is None else f"{row.percent:.2f}"
                fh.write(
                    f"{row.category}\t{row.clickbait_status_count}\t"
                    f"{row.non_clickbait_link_count}\t{pct}\t{int(row.excluded)}\n"
                )
    elif args.what == "engagement":
        path = os.path.join(args.out, "engagement.tsv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(
                "category\tlabel\tposts\treactions_mean\tshares_mean\t"
                "comments_mean\treactions_median\tshares_median\tcomments_median\n"
            )
            for cell in engagement_summary(annotated):
                fh.write(
                    f"{cell.category}\t{cell.label}\t{cell.posts}\t"
                    f"{cell.reactions_mean:.4f}\t{cell.shares_mean:.4f}\t"
                    f"{cell.comments_mean:.4f}\t{cell.reactions_median:.4f}\t"
                    f"{cell.shares_median:.4f}\t{cell.comments_median:.4f}\n"
                )
    elif args.what == "reposts":
        path = os.path.join(args.out, "reposts.tsv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("url\tcount\tby_category\tby_label\n")
            for grp in repost_frequency(annotated, min_count=args.min_count):
                fh.write(
                    f"{grp.url}\t{grp.count}\t"
                    f"{json.dumps(grp.by_category, sort_keys=True)}\t"
                    f"{json.dumps(grp.by_label, sort_keys=True)}\n"
                )
    else:
        path = os.path.join(args.out, "timeline.tsv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("date\tdelta\n")
            for day, delta in posts_per_day_delta(posts):
                fh.write(f"{day.isoformat()}\t{delta:.6f}\n")
    _write_manifest(args.out, f"analyze {args.what}", args, inputs)
    print(f"wrote {path}")
    return 0


def _add_vocab_options(parser: argparse.ArgumentParser, min_count_default: int) -> None:
    parser.add_argument("--min-count", dest="min_count", type=int, default=min_count_default)
    parser.add_argument("--buckets", type=int, default=DEFAULT_BUCKETS)
    parser.add_argument("--ngram-min", dest="ngram_min", type=int, default=DEFAULT_NGRAM_MIN)
    parser.add_argument("--ngram-max", dest="ngram_max", type=int, default=DEFAULT_NGRAM_MAX)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clickbait",
        description="Subword embeddings, clickbait classification, and corpus analytics",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    embed = sub.add_parser("embed", help="embedding training and export")
    embed_sub = embed.add_subparsers(dest="subcommand", required=True)
    et = embed_sub.add_parser("train", help="train subword skip-gram embeddings")
    et.add_argument("--corpus", required=True, help="one text per line")
    et.add_argument("--out", required=True, help="output model file")
    et.add_argument("--dim", type=int, default=300)
    et.add_argument("--window", type=int, default=5)
    et.add_argument("--negatives", type=int, default=5)
    et.add_argument("--epochs", type=int, default=5)
    et.add_argument("--lr", type=float, default=0.05)
    et.add_argument("--subsample", type=float, default=1e-4)
    _add_vocab_options(et, min_count_default=5)
    et.add_argument("--seed", type=int, default=None)
    et.add_argument("--workers", type=int, default=1)
    et.set_defaults(func=_cmd_embed_train, _parser=et)

    ee = embed_sub.add_parser("export", help="export text-format vectors")
    ee.add_argument("--model", required=True)
    ee.add_argument("--out", required=True)
    ee.add_argument("--seed", type=int, default=None)
    ee.set_defaults(func=_cmd_embed_export, _parser=ee)

    classify = sub.add_parser("classify", help="classifier training and prediction")
    classify_sub = classify.add_subparsers(dest="subcommand", required=True)
    ct = classify_sub.add_parser("train", help="train the clickbait classifier")
    ct.add_argument("--data", required=True, help="label<TAB>text training file")
    ct.add_argument("--out", required=True)
    ct.add_argument("--pretrained", default=None, help="binary model or text vectors")
    ct.add_argument("--dim", type=int, default=300)
    ct.add_argument("--epochs", type=int, default=5)
    ct.add_argument("--lr", type=float, default=0.1)
    ct.add_argument("--freeze-embeddings", dest="freeze_embeddings", action="store_true")
    _add_vocab_options(ct, min_count_default=1)
    ct.add_argument("--seed", type=int, default=None)
    ct.add_argument("--workers", type=int, default=1)
    ct.set_defaults(func=_cmd_classify_train, _parser=ct)

    cp = classify_sub.add_parser("predict", help="predict labels")
    cp.add_argument("--model", required=True)
    cp.add_argument("--text", default=None)
    cp.add_argument("--input", default=None, help="one text per line")
    cp.add_argument("--out", default=None)
    cp.add_argument("--seed", type=int, default=None)
    cp.set_defaults(func=_cmd_classify_predict, _parser=cp)

    evalp = sub.add_parser("eval", help="evaluation protocols")
    eval_sub = evalp.add_subparsers(dest="subcommand", required=True)
    cv = eval_sub.add_parser("cv", help="k-fold cross-validation with repeats")
    cv.add_argument("--data", required=True)
    cv.add_argument("--report", required=True)
    cv.add_argument("--k", type=int, default=10)
    cv.add_argument("--repeats", type=int, default=5)
    cv.add_argument("--pretrained", default=None)
    cv.add_argument("--dim", type=int, default=300)
    cv.add_argument("--epochs", type=int, default=5)
    cv.add_argument("--lr", type=float, default=0.1)
    _add_vocab_options(cv, min_count_default=1)
    cv.add_argument("--seed", type=int, default=None)
    cv.add_argument("--workers", type=int, default=1)
    cv.set_defaults(func=_cmd_eval_cv, _parser=cv)

    topics = sub.add_parser("topics", help="topic modeling")
    topics_sub = topics.add_subparsers(dest="subcommand", required=True)
    tf = topics_sub.add_parser("fit", help="fit a biterm topic model")
    tf.add_argument("--docs", required=True, help="one text per line")
    tf.add_argument("--out", required=True)
    tf.add_argument("--k", type=int, default=5)
    tf.add_argument("--topn", type=int, default=10)
    tf.add_argument("--alpha", type=float, default=None)
    tf.add_argument("--beta", type=float, default=0.01)
    tf.add_argument("--iterations", type=int, default=1000)
    tf.add_argument("--no-stopwords", dest="no_stopwords", action="store_true")
    tf.add_argument("--seed", type=int, default=None)
    tf.set_defaults(func=_cmd_topics_fit, _parser=tf)

    sim = sub.add_parser("similarity", help="headline-body similarity curves")
    sim.add_argument("--posts", required=True)
    sim.add_argument("--model", required=True)
    sim.add_argument("--mode", choices=("max", "mean"), default="max")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None)
    sim.set_defaults(func=_cmd_similarity, _parser=sim)

    analyze = sub.add_parser("analyze", help="corpus-scale analytics tables")
    analyze.add_argument(
        "what", choices=("rates", "status", "engagement", "reposts", "timeline")
    )
    analyze.add_argument("--posts", required=True)
    analyze.add_argument("--model", default=None)
    analyze.add_argument("--out", required=True, help="output directory")
    analyze.add_argument("--group-by", dest="group_by", choices=("category", "media"), default="category")
    analyze.add_argument("--top-n", dest="top_n", type=int, default=None)
    analyze.add_argument("--min-count", dest="min_count", type=int, default=20)
    analyze.add_argument("--seed", type=int, default=None)
    analyze.set_defaults(func=_cmd_analyze, _parser=analyze)

    return parser


def run(argv: list[str] | None = None) -> int:
    """Parse arguments and execute one subcommand; returns the exit code
    (0 success, 1 runtime failure, 2 usage/validation error)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        _resolve_seed(args)
        return args.func(args._parser, args)
    except SystemExit as exc:  # argparse has already reported usage errors
        return int(exc.code) if exc.code is not None else 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
