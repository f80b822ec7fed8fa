"""Command-line interface: gen-data, train, eval, infer, convert-sql."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .datasets import (DatasetSpec, FAMILIES, generate_sql_corpus, write_dataset)
from .graphs import parse_graph_file, write_samples
from .metrics import bleu4
from .sql import parse_sql, sql_to_graph, sql_to_sequence
from .training import (TrainConfig, default_max_len, evaluate_bleu,
                       evaluate_path_accuracy, model_from_checkpoint, train)
from .vocab import build_vocabulary

log = logging.getLogger("graphseq")


def _cmd_gen_data(args) -> int:
    if args.family == "sql-nlg":
        train_s, dev_s, test_s = generate_sql_corpus(
            (args.count or 500, args.dev_count or 100, args.test_count or 100),
            seed=args.seed, view=args.sql_view)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, samples in (("train", train_s), ("dev", dev_s), ("test", test_s)):
            write_samples(out / f"{name}.jsonl", samples)
        manifest = {"spec": {"family": "sql-nlg", "seed": args.seed, "view": args.sql_view,
                             "counts": [len(train_s), len(dev_s), len(test_s)]},
                    "files": ["train.jsonl", "dev.jsonl", "test.jsonl"]}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        print(f"wrote {out}/{{train,dev,test}}.jsonl")
        return 0
    spec = DatasetSpec.preset(args.family, seed=args.seed)
    if args.size:
        spec.graph_size = args.size
    if args.min_len:
        spec.min_path_len = args.min_len
    if args.count:
        spec.counts = (args.count, args.dev_count or args.count, args.test_count or args.count)
    spec = DatasetSpec(spec.family, spec.graph_size, spec.min_path_len, spec.counts, spec.seed)
    write_dataset(args.out, spec)
    print(f"wrote {args.out}/{{train,dev,test}}.jsonl (family={spec.family}, seed={spec.seed})")
    return 0


def _load_split(data_dir: str, name: str):
    path = Path(data_dir) / f"{name}.jsonl"
    if not path.exists():
        raise FileNotFoundError(f"missing dataset file {path}")
    return parse_graph_file(path)


def _cmd_train(args) -> int:
    cfg = TrainConfig()
    if args.config:
        cfg = TrainConfig.from_dict(json.loads(Path(args.config).read_text()))
    if args.seed is not None:
        cfg.seed = args.seed
    train_samples = _load_split(args.data, "train")
    dev_samples = _load_split(args.data, "dev")
    vocab = build_vocabulary(train_samples)
    ckpt, model = train(cfg, train_samples, dev_samples, vocab=vocab, log_path=args.log)
    save_checkpoint(args.out, ckpt)
    print(f"best dev metric {ckpt.best_metric:.4f} at epoch {ckpt.epoch}; checkpoint -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    model, _ = model_from_checkpoint(ckpt)
    samples = parse_graph_file(args.data)
    beam = args.beam or ckpt.config["train"]["beam"]
    max_len = ckpt.config["train"].get("max_decode_len") or default_max_len(samples)
    rows = []
    if args.metric in ("path-acc", "all"):
        rows.append(("path_accuracy", evaluate_path_accuracy(model, samples, beam=beam, max_len=max_len)))
    if args.metric in ("bleu", "all"):
        rows.append(("bleu4", evaluate_bleu(model, samples, beam=beam, max_len=max_len)))
    width = max(len(name) for name, _ in rows)
    print(f"samples: {len(samples)}  beam: {beam}")
    for name, value in rows:
        print(f"{name:<{width}}  {value:.4f}")
    return 0


def _cmd_infer(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    model, _ = model_from_checkpoint(ckpt)
    samples = parse_graph_file(args.input)
    max_len = args.max_len or ckpt.config["train"].get("max_decode_len") or default_max_len(samples)
    beam = args.beam or ckpt.config["train"]["beam"]
    out_fh = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for s in samples:
            out_fh.write(" ".join(model.decode(s.graph, beam=beam, max_len=max_len)) + "\n")
    finally:
        if args.out:
            out_fh.close()
    return 0


def _cmd_convert_sql(args) -> int:
    queries = []
    with open(args.input, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                queries.append(parse_sql(line))
            except ValueError as exc:
                raise SystemExit(f"{args.input}: line {lineno}: {exc}")
    if args.graphs:
        with open(args.graphs, "w", encoding="utf-8") as fh:
            for q in queries:
                g = sql_to_graph(q)
                fh.write(json.dumps({
                    "nodes": [{"id": i, "attr": a} for i, a in enumerate(g.attrs)],
                    "edges": [[s, t] for s, t in g.edges],
                }, separators=(",", ":")) + "\n")
    if args.sequences:
        with open(args.sequences, "w", encoding="utf-8") as fh:
            for q in queries:
                fh.write(" ".join(sql_to_sequence(q)) + "\n")
    if not args.graphs and not args.sequences:
        for q in queries:
            g = sql_to_graph(q)
            print(json.dumps({"nodes": [{"id": i, "attr": a} for i, a in enumerate(g.attrs)],
                              "edges": [[s, t] for s, t in g.edges]}, separators=(",", ":")))
    print(f"converted {len(queries)} queries", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphseq",
                                     description="Graph-to-sequence learning toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a dataset triple plus manifest")
    p.add_argument("--family", required=True, choices=list(FAMILIES) + ["sql-nlg"])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, help="graph size (nodes or places)")
    p.add_argument("--min-len", type=int, dest="min_len", help="minimum path length")
    p.add_argument("--count", type=int, help="training set size")
    p.add_argument("--dev-count", type=int, dest="dev_count")
    p.add_argument("--test-count", type=int, dest="test_count")
    p.add_argument("--sql-view", choices=["graph", "sequence"], default="graph", dest="sql_view")
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="train a model on a generated dataset")
    p.add_argument("--data", required=True, help="directory with train/dev(.jsonl)")
    p.add_argument("--config", help="JSON file mirroring TrainConfig fields")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--log", help="per-epoch JSONL metric log")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a graph file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="JSONL graph file with targets")
    p.add_argument("--beam", type=int)
    p.add_argument("--metric", choices=["path-acc", "bleu", "all"], default="path-acc")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("infer", help="decode a graph file to sequences")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="write sequences here instead of stdout")
    p.add_argument("--beam", type=int)
    p.add_argument("--max-len", type=int, dest="max_len")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("convert-sql", help="convert SQL lines to graphs and/or sequences")
    p.add_argument("--input", required=True, help="one query per line")
    p.add_argument("--graphs", help="write graph JSONL here")
    p.add_argument("--sequences", help="write template sequences here")
    p.set_defaults(func=_cmd_convert_sql)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
