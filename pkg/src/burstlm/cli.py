"""Command line interface: ingest, fit, eval, sweep, synth.

A JSON config file can supply per-command defaults; explicit flags always
win.  Exit status is 0 only when the requested artifacts were fully written.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

from . import corpus as corpus_mod
from . import evaluation, figures, lm, synth

SMOOTHING_NAMES = {"interp": "interpolation", "backoff": "backoff"}
DISCOUNT_NAMES = {"abs": "absolute", "gt": "good_turing"}


class CliError(Exception):
    pass


def _parse_delimiter(value: str) -> str | None:
    if value == "blank":
        return None
    if value.startswith("marker:") and len(value) > len("marker:"):
        return value[len("marker:"):]
    raise CliError(f"--delimiter must be 'blank' or 'marker:STR', got {value!r}")


def _sibling(path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + suffix


def _read_segments(path: str, marker: str | None) -> list[corpus_mod.Document]:
    with open(path, encoding="utf-8") as fh:
        result = corpus_mod.segment_corpus(fh, marker=marker, min_doc_length=1)
    return result.documents


def _encode_test(model: lm.LanguageModel, documents: list[corpus_mod.Document]) -> tuple[list[list[int]], int]:
    vocab = model.vocabulary
    segments = []
    oov = 0
    total = 0
    for doc in documents:
        ids = []
        for tok in doc.tokens:
            wid = vocab.id_of(tok)
            if tok not in vocab:
                oov += 1
            ids.append(wid)
            total += 1
        segments.append(ids)
    if total == 0:
        raise CliError("test input contains no tokens")
    if oov == total:
        raise CliError(
            "every test token is out of vocabulary; the test text does not "
            "match the model's tokenization"
        )
    return segments, oov


# ---------------------------------------------------------------------------
# commands

def _cmd_ingest(args: argparse.Namespace) -> int:
    marker = _parse_delimiter(args.delimiter)
    with open(args.corpus, encoding="utf-8") as fh:
        result = corpus_mod.segment_corpus(fh, marker=marker, min_doc_length=args.min_doc_len)
    vocabulary = corpus_mod.build_vocabulary(
        result.documents, max_size=args.vocab_size, min_count=args.min_count
    )
    counts = corpus_mod.count_events(result.documents, vocabulary)

    corpus_mod.save_counts(counts, args.out)
    vocab_path = args.vocab_out or _sibling(args.out, ".vocab.txt")
    vocabulary.save(vocab_path)
    if args.export_csv:
        corpus_mod.export_counts_csv(counts, args.export_csv, n_tokens=args.N)

    print(corpus_mod.summary(counts))
    if result.n_dropped:
        print(f"dropped={result.n_dropped} (shorter than {args.min_doc_len} tokens)", file=sys.stderr)
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    counts = corpus_mod.load_counts(args.counts)
    model = lm.fit_model(
        counts, n_tokens=args.N, family=args.family, cutoff=args.gt_cutoff
    )
    lm.save_model(model, args.out)

    summary_path = args.summary or _sibling(args.out, ".fit.csv")
    lm.export_fit_csv(model, summary_path, include_bigrams=not args.no_bigram_summary)

    if args.plot_events:
        events = [e for e in args.plot_events.split(",") if e]
        profile_csv = _sibling(args.out, ".profiles.csv")
        with open(profile_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["event", "x", "theta"])
            for label in events:
                wid = model.vocabulary.id_of(corpus_mod.tokenize(label)[0])
                profile = model.unigram_profile(wid)
                for x in range(profile.support_end + 1):
                    writer.writerow([model.vocabulary[wid], x, f"{profile.pmf(x):.17g}"])
                samples = corpus_mod.normalized_samples(
                    counts.unigram_doc_counts(wid),
                    counts.doc_lengths,
                    args.N,
                    event=model.vocabulary[wid],
                )
                fig_path = _sibling(args.out, f".fit_{model.vocabulary[wid]}.png")
                figures.render_fit_figure(samples.histogram, profile, fig_path)

    if args.curve_events:
        events = [e for e in args.curve_events.split(",") if e]
        curves_csv = _sibling(args.out, ".curves.csv")
        lm.export_rate_curves_csv(model, events, curves_csv, max_n=args.curve_max_n)
        curves: dict[str, list[tuple[int, float]]] = {}
        with open(curves_csv, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                curves.setdefault(row["event"], []).append((int(row["n"]), float(row["f"])))
        figures.render_rate_curves(curves, _sibling(args.out, ".curves.png"))

    print(f"model written to {args.out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    model = lm.load_model(args.model).with_scheme(DISCOUNT_NAMES[args.discount])
    documents = _read_segments(args.test, _parse_delimiter(args.delimiter))
    segments, oov = _encode_test(model, documents)

    report = evaluation.evaluate(
        model,
        segments,
        order=args.order,
        mode=args.mode,
        window=args.window,
        smoothing=SMOOTHING_NAMES[args.smoothing],
        reset_on_doc=args.reset_on_doc,
        trace=True,
        oov_count=oov,
    )

    with open(args.report, "w", encoding="utf-8") as fh:
        fh.write(report.to_json(indent=2) + "\n")
    figures.render_report_figure(report.token_log_probs, _sibling(args.report, ".png"))

    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "word", "log_prob"])
            for i, (wid, logp) in enumerate(zip(report.token_ids, report.token_log_probs)):
                writer.writerow([i, model.vocabulary[wid], f"{logp:.17g}"])

    print(f"perplexity={report.perplexity:.4f}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    model = lm.load_model(args.model).with_scheme(DISCOUNT_NAMES[args.discount])
    documents = _read_segments(args.test, _parse_delimiter(args.delimiter))
    segments, _ = _encode_test(model, documents)

    try:
        windows = [int(w) for w in args.windows.split(",") if w.strip()]
    except ValueError as exc:
        raise CliError(f"--windows must be a comma-separated integer list: {args.windows!r}") from exc
    if not windows:
        raise CliError("--windows is empty")

    points = evaluation.sweep(
        model,
        segments,
        windows,
        order=args.order,
        smoothing=SMOOTHING_NAMES[args.smoothing],
        reset_on_doc=args.reset_on_doc,
    )
    baseline = None
    if args.baseline:
        baseline = evaluation.evaluate(
            model,
            segments,
            order=args.order,
            mode="constant",
            smoothing=SMOOTHING_NAMES[args.smoothing],
            reset_on_doc=args.reset_on_doc,
        ).perplexity

    evaluation.write_sweep_csv(points, args.out, baseline=baseline)
    figures.render_sweep_figure(points, _sibling(args.out, ".png"), baseline=baseline)

    for p in points:
        print(f"window={p.window} perplexity={p.perplexity:.4f}")
    if baseline is not None:
        print(f"window=constant perplexity={baseline:.4f}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = synth.load_spec(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    documents = synth.generate(spec)
    corpus_mod.write_corpus(documents, args.out, marker=args.marker)
    total = sum(d.length for d in documents)
    print(f"docs={len(documents)} tokens={total}")
    return 0


# ---------------------------------------------------------------------------
# wiring

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="burstlm",
        description="Variable word-rate n-gram language models.",
    )
    parser.add_argument("--config", help="JSON file with per-command flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="segment a corpus, build the vocabulary, count events")
    p.add_argument("--corpus", required=True, help="input text file")
    p.add_argument("--delimiter", default="blank", help="'blank' or 'marker:STR'")
    p.add_argument("--min-doc-len", type=int, default=corpus_mod.DEFAULT_MIN_DOC_LENGTH)
    p.add_argument("--vocab-size", type=int, default=None, help="cap on vocabulary size")
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--out", required=True, help="counts JSON output path")
    p.add_argument("--vocab-out", default=None, help="vocabulary output (default: <out>.vocab.txt)")
    p.add_argument("--export-csv", default=None, help="also write per-document counts CSV")
    p.add_argument("--N", type=int, default=1000, help="reference length for CSV scaled counts")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("fit", help="fit occurrence distributions and write a model")
    p.add_argument("--counts", required=True, help="counts JSON from ingest")
    p.add_argument("--N", type=int, default=1000, help="reference document length")
    p.add_argument("--family", choices=("auto", "poisson", "negbin"), default="auto")
    p.add_argument("--out", required=True, help="model output path")
    p.add_argument("--summary", default=None, help="fit summary CSV (default: <out>.fit.csv)")
    p.add_argument("--no-bigram-summary", action="store_true", help="omit bigram rows from the summary")
    p.add_argument("--gt-cutoff", type=int, default=lm.GOOD_TURING_CUTOFF)
    p.add_argument("--plot-events", default=None, help="comma list of words: histogram+fit figures and profile CSV")
    p.add_argument("--curve-events", default=None, help="comma list of events: rate-curve CSV and figure")
    p.add_argument("--curve-max-n", type=int, default=None)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("eval", help="score a test stream and report perplexity")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True, help="test text file")
    p.add_argument("--order", type=int, choices=(1, 2), default=2)
    p.add_argument("--mode", choices=("constant", "variable"), default="variable")
    p.add_argument("--window", type=int, default=None, help="window size (variable mode)")
    p.add_argument("--smoothing", choices=tuple(SMOOTHING_NAMES), default="interp")
    p.add_argument("--discount", choices=tuple(DISCOUNT_NAMES), default="abs")
    p.add_argument("--reset-on-doc", action="store_true")
    p.add_argument("--delimiter", default="blank")
    p.add_argument("--report", required=True, help="JSON report output path")
    p.add_argument("--trace", default=None, help="optional per-token log-prob CSV")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="evaluate at several window sizes")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--windows", required=True, help="comma-separated window sizes")
    p.add_argument("--smoothing", choices=tuple(SMOOTHING_NAMES), default="interp")
    p.add_argument("--discount", choices=tuple(DISCOUNT_NAMES), default="abs")
    p.add_argument("--reset-on-doc", action="store_true")
    p.add_argument("--delimiter", default="blank")
    p.add_argument("--baseline", action="store_true", help="add a constant-mode row")
    p.add_argument("--out", required=True, help="sweep CSV output path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic corpus from a spec")
    p.add_argument("--spec", required=True, help="generative spec JSON")
    p.add_argument("--seed", type=int, default=None, help="override the spec's seed")
    p.add_argument("--out", required=True, help="corpus text output path")
    p.add_argument("--marker", default=None, help="document separator line (default: blank line)")
    p.set_defaults(func=_cmd_synth)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Load --config JSON and install its values as per-command defaults."""
    config_path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif arg.startswith("--config="):
            config_path = arg.split("=", 1)[1]
    if config_path is None:
        return
    with open(config_path, encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise CliError("config file must hold a JSON object")

    # subparsers are reachable through the parser's sub-actions
    for action in parser._subparsers._group_actions:  # noqa: SLF001 - argparse offers nothing public
        for name, subparser in action.choices.items():
            section = config.get(name)
            if section:
                defaults = {k.replace("-", "_"): v for k, v in section.items()}
                subparser.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        corpus_mod.CorpusError,
        lm.ModelFormatError,
        synth.SynthError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
