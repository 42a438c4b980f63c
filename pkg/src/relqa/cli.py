"""Command-line interface: ``relqa {preprocess,train,evaluate,rerank,gradcheck}``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 failed check, 5 missing input file, 6 numerical failure during training.
"""
import argparse
import os
import sys
import tempfile

from relqa import checkpoint, model
from relqa.checks import check_model_gradients, random_tiny_case
from relqa.config import ConfigError, add_override_flags, resolve_config, save_config
from relqa.container import ContainerError
from relqa.dataset import (
    convert_trec_xml,
    dataset_stats,
    load_preprocessed,
    parse_canonical_tsv,
    parse_wikiqa_tsv,
    save_preprocessed,
)
from relqa.errors import DataFormatError, NonFiniteError
from relqa.metrics import POLICIES, evaluate, filter_questions, write_qrels, write_trec_run
from relqa.model import RELATIONAL_MODES, Hyperparams, init_params
from relqa.pipeline import load_resources, prepare_splits, save_resources
from relqa.text import AnnotatedSentence, annotate_overlap, load_stopwords, overlap_count_features, tokenize_normalize
from relqa.trainer import score_dataset, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CHECK = 4
EXIT_MISSING = 5
EXIT_NUMERIC = 6

SPLITS = ("train", "dev", "test")
RESOURCES_FILE = "resources.rqr"
CHECKPOINT_FILE = "best.ckpt"
LOG_FILE = "train.log"


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _require(path, what):
    if path is None:
        raise CliError(f"no {what} given", EXIT_USAGE)
    if not os.path.isfile(path):
        raise CliError(f"{what} not found: {path}", EXIT_MISSING)


def _split_file(directory, split):
    return os.path.join(directory, f"{split}.rqd")


def _parse_split(cfg, path, split, stopwords):
    if cfg.data_format == "canonical":
        return parse_canonical_tsv(path, split, stopwords, cfg.collapse_digits)
    if cfg.data_format == "wikiqa":
        return parse_wikiqa_tsv(path, split, stopwords, cfg.collapse_digits)
    with tempfile.TemporaryDirectory() as tmp:
        tsv = os.path.join(tmp, f"{split}.tsv")
        convert_trec_xml(path, tsv)
        ds = parse_canonical_tsv(tsv, split, stopwords, cfg.collapse_digits)
    ds.meta["source"] = os.path.basename(path)
    return ds


def cmd_preprocess(args, out):
    cfg = resolve_config(args)
    paths = {s: getattr(cfg, f"{s}_path") for s in SPLITS if getattr(cfg, f"{s}_path")}
    if "train" not in paths:
        raise CliError("preprocess needs train_path", EXIT_USAGE)
    for split, path in paths.items():
        _require(path, f"{split} file")
    if cfg.embeddings_path is not None:
        _require(cfg.embeddings_path, "embeddings file")
    if cfg.stopwords_path is not None:
        _require(cfg.stopwords_path, "stopword file")

    stopwords = load_stopwords(cfg.stopwords_path)
    raw = {split: _parse_split(cfg, path, split, stopwords) for split, path in paths.items()}
    prep = prepare_splits(raw, stopwords, cfg.embeddings_path, cfg.embeddings_format,
                          cfg.d_w, cfg.oov_range, cfg.seed)
    os.makedirs(cfg.preprocessed_dir, exist_ok=True)
    sha = prep.vocab.sha256()
    for split, ds in prep.splits.items():
        save_preprocessed(ds, _split_file(cfg.preprocessed_dir, split), sha)
        st = dataset_stats(ds)
        pct = "n/a" if st["percent_positive"] is None else f"{st['percent_positive']:.2f}%"
        print(f"{split}: {st['questions']} questions, {st['pairs']} pairs, {pct} positive", file=out)
    save_resources(prep, os.path.join(cfg.preprocessed_dir, RESOURCES_FILE))
    with open(os.path.join(cfg.preprocessed_dir, "vocab.txt"), "w", encoding="utf-8", newline="\n") as f:
        f.write("".join(tok + "\n" for tok in prep.vocab.itos))
    table = prep.embeddings
    print(f"vocabulary: {len(prep.vocab)} types (sha256 {sha[:12]})", file=out)
    print(f"embedding coverage: {table.coverage:.4f} ({int(table.pretrained.sum())} of {len(prep.vocab)} types pretrained)",
          file=out)
    return EXIT_OK


def _load_split(directory, split, vocab_sha):
    path = _split_file(directory, split)
    _require(path, f"preprocessed {split} split")
    ds, sha = load_preprocessed(path)
    if sha != vocab_sha:
        raise CliError(f"{path} was indexed with a different vocabulary", EXIT_DATA)
    return ds


def cmd_train(args, out):
    cfg = resolve_config(args)
    res_path = os.path.join(cfg.preprocessed_dir, RESOURCES_FILE)
    _require(res_path, "preprocessed resources")
    res = load_resources(res_path)
    sha = res.vocab.sha256()
    train_set = _load_split(cfg.preprocessed_dir, "train", sha)
    dev_set = _load_split(cfg.preprocessed_dir, "dev", sha)
    if res.embeddings.dim != cfg.d_w:
        raise CliError(f"preprocessed embeddings have d_w={res.embeddings.dim}, config asks for {cfg.d_w}",
                       EXIT_USAGE)

    hp = Hyperparams(len(res.vocab), cfg.d_w, cfg.d_o, cfg.n, cfg.m, cfg.conv, cfg.mode)
    params = init_params(hp, cfg.seed, res.embeddings, freeze_W=cfg.freeze_embeddings,
                         overlap_range=cfg.oov_range)
    on_log = (lambda line: print(line, file=sys.stderr)) if args.verbose else None
    try:
        best, history, state = train(train_set, dev_set, params, cfg.train_config(), on_log=on_log)
    except NonFiniteError as exc:
        raise CliError(f"training diverged: {exc}", EXIT_NUMERIC) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DATA) from None

    os.makedirs(cfg.output_dir, exist_ok=True)
    ckpt = checkpoint.Checkpoint(best, res.vocab, res.stopwords, res.idf, state, history, cfg.to_dict())
    checkpoint.save_checkpoint(os.path.join(cfg.output_dir, CHECKPOINT_FILE), ckpt)
    with open(os.path.join(cfg.output_dir, LOG_FILE), "w", encoding="utf-8", newline="\n") as f:
        f.write(history.log_text())
    save_config(cfg, os.path.join(cfg.output_dir, "config.json"))

    metrics = evaluate(score_dataset(best, dev_set), dev_set.qrels(), cfg.dev_policy)
    print(f"epochs: {history.epochs_run} ({history.stop_reason}), best step {history.best_step}", file=out)
    print(f"dev MAP {metrics.map:.4f}  MRR {metrics.mrr:.4f}  P@1 {metrics.p_at_1:.4f}", file=out)
    return EXIT_OK


def cmd_evaluate(args, out):
    _require(args.checkpoint, "checkpoint")
    _require(args.data, "preprocessed data file")
    ckpt = checkpoint.load_checkpoint(args.checkpoint)
    ds, sha = load_preprocessed(args.data)
    if sha != ckpt.vocab.sha256():
        raise CliError("vocabulary mismatch: data was indexed with a different vocabulary than the checkpoint",
                       EXIT_DATA)
    run = score_dataset(ckpt.params, ds, name=args.run_name)
    try:
        metrics = evaluate(run, ds.qrels(), args.policy)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DATA) from None
    print(metrics.format(), file=out)
    if metrics.removed:
        print(f"removed {len(metrics.removed)} question(s) under policy {args.policy}: "
              + " ".join(metrics.removed), file=out)
    if args.run_out:
        kept, _ = filter_questions(ds, args.policy)
        write_trec_run(score_dataset(ckpt.params, kept, name=args.run_name), args.run_out)
    if args.qrels_out:
        kept, _ = filter_questions(ds, args.policy)
        write_qrels(kept.qrels(), args.qrels_out)
    return EXIT_OK


def read_rerank_input(stream):
    """First non-empty line is the question; each further non-empty line a candidate."""
    lines = [line.rstrip("\r\n") for line in stream]
    lines = [line for line in lines if line.strip()]
    if not lines:
        raise CliError("empty input: expected a question line", EXIT_DATA)
    if len(lines) < 2:
        raise CliError("empty candidate list", EXIT_DATA)
    return lines[0], lines[1:]


def rerank(ckpt, question, candidates, collapse_digits=False):
    """Sorted ``(score, input_position, text)``; ties keep input order."""
    stopwords = ckpt.stopwords if ckpt.stopwords is not None else frozenset()
    params = ckpt.params
    qtoks = tokenize_normalize(question, collapse_digits)
    if not qtoks:
        raise CliError("question has no tokens", EXIT_DATA)
    scored = []
    for pos, text in enumerate(candidates):
        atoks = tokenize_normalize(text, collapse_digits)
        if not atoks:
            raise CliError(f"candidate {pos + 1} has no tokens", EXIT_DATA)
        q, a = annotate_overlap(AnnotatedSentence(qtoks), AnnotatedSentence(atoks), stopwords)
        q, a = q.with_indices(ckpt.vocab), a.with_indices(ckpt.vocab)
        feat = overlap_count_features(q, a, ckpt.idf) if params.hp.uses_features else None
        scored.append((model.score(q, a, params, feat), pos, text))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return scored


def cmd_rerank(args, out):
    _require(args.checkpoint, "checkpoint")
    ckpt = checkpoint.load_checkpoint(args.checkpoint)
    if args.input == "-":
        question, cands = read_rerank_input(sys.stdin)
    else:
        _require(args.input, "input file")
        with open(args.input, encoding="utf-8") as f:
            question, cands = read_rerank_input(f)
    collapse = bool((ckpt.config or {}).get("collapse_digits", False))
    for rank, (score, _, text) in enumerate(rerank(ckpt, question, cands, collapse), start=1):
        print(f"{rank}\t{score:.8f}\t{text}", file=out)
    return EXIT_OK


def cmd_gradcheck(args, out):
    modes = RELATIONAL_MODES if args.mode == "all" else (args.mode,)
    corrupt = {args.inject_bug: 2.0} if args.inject_bug else None
    ok = True
    for mode in modes:
        params, q, a, x_feat, label = random_tiny_case(mode, args.seed, conv=args.conv)
        if corrupt and args.inject_bug not in params.trainable_names():
            raise CliError(f"block {args.inject_bug} is not trainable in mode {mode}", EXIT_USAGE)
        report = check_model_gradients(params, q, a, x_feat, label, epsilon=args.epsilon,
                                       tolerance=args.tolerance, corrupt=corrupt)
        print(f"[{mode}]", file=out)
        print(report.format(), file=out)
        ok &= report.passed
    print("gradcheck " + ("PASS" if ok else "FAIL"), file=out)
    return EXIT_OK if ok else EXIT_CHECK


def build_parser():
    parser = argparse.ArgumentParser(prog="relqa", description="Answer-sentence reranking with overlap-aware CNNs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="parse splits, build vocabulary, idf and embeddings")
    p.add_argument("--config", help="JSON run configuration")
    add_override_flags(p, {"train_path", "dev_path", "test_path", "data_format", "embeddings_path",
                           "embeddings_format", "stopwords_path", "collapse_digits", "preprocessed_dir",
                           "d_w", "oov_range", "seed"})
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train and write the best checkpoint and log")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("-v", "--verbose", action="store_true", help="echo log lines to stderr")
    add_override_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="MAP/MRR/P@1 of a checkpoint on a preprocessed split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="preprocessed split (.rqd)")
    p.add_argument("--policy", choices=POLICIES, default=POLICIES[0])
    p.add_argument("--run-out", help="write a trec_eval run file")
    p.add_argument("--qrels-out", help="write the matching qrels file")
    p.add_argument("--run-name", default="relqa")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rerank", help="score candidates for one question")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", default="-", help="question line then candidate lines ('-' for stdin)")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("gradcheck", help="finite-difference check of the model gradients")
    p.add_argument("--mode", choices=("all",) + RELATIONAL_MODES, default="all")
    p.add_argument("--conv", choices=("wide", "narrow"), default="wide")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=3e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--inject-bug", metavar="BLOCK", help="scale one analytic gradient by 2 (mutation test)")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except CliError as exc:
        print(f"relqa: error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"relqa: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, ContainerError) as exc:
        print(f"relqa: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"relqa: error: {exc}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
