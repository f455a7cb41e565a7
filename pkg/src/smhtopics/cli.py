"""Command-line pipeline: ``smh ingest | discover | evaluate | synth | rerun``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from . import coherence, corpus, discovery, synth

log = logging.getLogger("smhtopics")


class CliError(Exception):
    """Reported on stderr with exit status 2."""


def _require(path):
    if not os.path.exists(path):
        raise CliError(f"input not found: {path}")


def write_manifest(args: argparse.Namespace, path, extra: dict | None = None) -> None:
    """Write the resolved arguments as ``key=value`` lines, rerunnable with ``smh rerun``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"subcommand={args.command}\n")
        for key, value in sorted(vars(args).items()):
            if key in ("command", "func", "verbose") or value is None or value is False:
                continue
            fh.write(f"{key}={'true' if value is True else value}\n")
        for key, value in (extra or {}).items():
            fh.write(f"# {key}={value}\n")


def read_manifest(path) -> list[str]:
    """Rebuild an argv list from a manifest."""
    command = None
    argv = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            if key == "subcommand":
                command = value
                continue
            flag = "--" + key.replace("_", "-")
            argv += [flag] if value == "true" else [flag, value]
    if command is None:
        raise CliError(f"{path}: no subcommand recorded")
    return [command] + argv


# --- subcommands ------------------------------------------------------------

def cmd_ingest(args) -> int:
    _require(args.input)
    if args.stopwords:
        _require(args.stopwords)
    os.makedirs(args.output_dir, exist_ok=True)
    vocab, bags = corpus.ingest(corpus.read_corpus(args.input),
                                corpus.read_stopwords(args.stopwords), args.vocab_size)
    corpus.write_bags(bags, os.path.join(args.output_dir, "bags.txt"))
    corpus.write_vocabulary(vocab, os.path.join(args.output_dir, "vocab.tsv"))
    write_manifest(args, os.path.join(args.output_dir, "ingest.manifest"),
                   {"documents": len(bags), "vocabulary": len(vocab)})
    print(f"{len(bags)} documents, {len(vocab)} words -> {args.output_dir}")
    return 0


def cmd_discover(args) -> int:
    t_start = time.perf_counter()
    _require(args.bags)
    _require(args.vocab)
    if not 0.0 < args.eta < 1.0 or args.tuple_size < 1:
        raise CliError(f"invalid eta/tuple size: eta={args.eta}, r={args.tuple_size}")
    if not 0.0 < args.overlap < 1.0:
        raise CliError(f"invalid overlap threshold: {args.overlap}")

    bags = corpus.read_bags(args.bags)
    vocab = corpus.read_vocabulary(args.vocab)
    X = corpus.bags_to_matrix(bags, len(vocab))
    t_loaded = time.perf_counter()

    model = discovery.SampledMinHashing(
        eta=args.eta, tuple_size=args.tuple_size, n_tables=args.tables, overlap=args.overlap,
        min_set_size=args.min_set_size, min_cluster_size=args.min_cluster_size,
        min_topic_words=args.min_topic_words, top_k_words=args.top_k,
        exact_clustering=args.exact_clustering, search_tuple_size=args.search_tuple_size,
        search_eta=args.search_eta, search_tables=args.search_tables,
        n_jobs=args.threads, random_state=args.seed,
    ).fit(X)
    t_fit = time.perf_counter()

    discovery.write_topics(model.topics_, vocab, args.output)
    if args.cws_dump:
        discovery.write_cws(model.cws_, args.cws_dump)
    write_manifest(args, args.output + ".manifest", {"derived_tables": model.n_tables_})
    t_end = time.perf_counter()

    stages = {"load": t_loaded - t_start}
    stages.update(model.timings_)
    # fit overhead not attributed to a named stage
    stages["fit_other"] = max(0.0, (t_fit - t_loaded) - sum(model.timings_.values()))
    stages["write"] = t_end - t_fit
    total = t_end - t_start
    with open(args.output + ".timing", "w", encoding="utf-8") as fh:
        fh.write(f"cws\t{len(model.cws_)}\n")
        fh.write(f"clusters\t{len(model.clusters_)}\n")
        fh.write(f"topics\t{len(model.topics_)}\n")
        fh.write(f"tables\t{model.n_tables_}\n")
        for name, secs in stages.items():
            fh.write(f"time_{name}\t{secs:.6f}\n")
        fh.write(f"time_total\t{total:.6f}\n")
    print(f"{len(model.cws_)} CWS, {len(model.clusters_)} clusters, {len(model.topics_)} topics "
          f"({model.n_tables_} tables, {total:.2f}s)")
    return 0


def cmd_evaluate(args) -> int:
    _require(args.topics)
    _require(args.reference)
    rows = discovery.read_topics(args.topics)
    if not rows:
        raise CliError(f"no topics in {args.topics}")
    if len(rows) < args.top_n:
        log.warning("only %d topics available, fewer than --top-n %d; evaluating all",
                    len(rows), args.top_n)
    rows = rows[:args.top_n]
    top_words = [[w for w, _ in ranked[:args.top_k]] for _, _, ranked in rows]
    wanted = {w for words in top_words for w in words}
    counts = coherence.count_windows((toks for _, toks in corpus.read_corpus(args.reference)),
                                     args.window_size, wanted)
    scores = [coherence.npmi_topic(words, counts, topic_id=i) for i, words in enumerate(top_words)]
    summary = coherence.write_report(scores, top_words, args.output)
    write_manifest(args, args.output + ".manifest")
    print(f"{summary.n} topics: avg={summary.mean:.4f} med={summary.median:.4f} std={summary.std:.4f}")
    return 0


def cmd_synth(args) -> int:
    spec = synth.PlantedSpec(
        n_topics=args.n_topics, words_per_topic=args.words_per_topic, n_docs=args.n_docs,
        doc_length=args.doc_length, noise_words=args.noise_words, noise_fraction=args.noise_fraction,
        seed=args.seed, leak_fraction=args.leak_fraction, zipf_exponent=args.zipf,
    )
    os.makedirs(args.output_dir, exist_ok=True)
    planted = synth.generate(spec)
    synth.write_planted(planted, os.path.join(args.output_dir, "corpus.tsv"),
                        os.path.join(args.output_dir, "truth.tsv"))
    write_manifest(args, os.path.join(args.output_dir, "synth.manifest"))
    print(f"{spec.n_docs} documents, {spec.n_topics} planted topics -> {args.output_dir}")
    return 0


def cmd_rerun(args) -> int:
    _require(args.manifest)
    return main(read_manifest(args.manifest))


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smh", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build vocabulary and bag-of-words files")
    p.add_argument("--input", required=True, help="corpus file, doc_id<TAB>tokens per line")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--vocab-size", type=int, default=10_000)
    p.add_argument("--stopwords", help="whitespace-separated stopword file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("discover", help="mine co-occurring word sets and form topics")
    p.add_argument("--bags", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--output", required=True, help="topics file")
    p.add_argument("--eta", type=float, default=0.04)
    p.add_argument("--tuple-size", type=int, default=2)
    p.add_argument("--tables", type=int, help="override the derived table count")
    p.add_argument("--overlap", type=float, default=0.9)
    p.add_argument("--min-set-size", type=int, default=3)
    p.add_argument("--min-cluster-size", type=int, default=5)
    p.add_argument("--min-topic-words", type=int, default=10)
    p.add_argument("--top-k", type=int, default=10, help="words averaged for the topic score")
    p.add_argument("--exact-clustering", action="store_true")
    p.add_argument("--search-tuple-size", type=int, default=3)
    p.add_argument("--search-eta", type=float)
    p.add_argument("--search-tables", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=0, help="0 runs serially")
    p.add_argument("--cws-dump", help="also write every CWS to this file")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("evaluate", help="NPMI coherence of the top-ranked topics")
    p.add_argument("--topics", required=True)
    p.add_argument("--reference", required=True, help="reference corpus, same format as ingest input")
    p.add_argument("--output", required=True)
    p.add_argument("--window-size", type=int, default=10)
    p.add_argument("--top-n", type=int, default=400)
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a planted-topic corpus")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--n-topics", type=int, default=10)
    p.add_argument("--words-per-topic", type=int, default=20)
    p.add_argument("--n-docs", type=int, default=1000)
    p.add_argument("--doc-length", type=int, default=50)
    p.add_argument("--noise-words", type=int, default=100)
    p.add_argument("--noise-fraction", type=float, default=0.1)
    p.add_argument("--leak-fraction", type=float, default=0.0)
    p.add_argument("--zipf", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("rerun", help="repeat a run recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"smh: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
