"""Command line entry point: ``qcsc <command> ...``.

Exit codes: 0 success, 1 bad input (grammar, store, data), 2 bad plan or
arguments, 3 slope or bound targets missed under ``--assert-slopes``.
"""
from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

from . import kernels
from .bench import (BenchPlan, PlanError, bench_kernels, check_slopes, emit_plot_data, parse_grid,
                    run_bench, table1_rows, write_table1)
from .closest_vector import BACKENDS, ClosestVectorInstance, run_backend
from .corpus import CorpusConfig, CorpusError, ingest
from .deferred import ClassSet, Sentence, classify_deferred
from .pregroup import GrammarError, build_tree, format_tree, load_lexicon, reduce
from .store import StoreError, load_store, resolve, save_store
from .tensor import TensorError

EXIT_INPUT, EXIT_PLAN, EXIT_THRESHOLD = 1, 2, 3
LEXICON_NAME = "lexicon.tsv"

log = logging.getLogger("qcsc")


def _write_json(path, data):
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _csv_ints(text):
    return [int(x) for x in text.split(",") if x]


def cmd_ingest(args):
    text = "\n".join(Path(p).read_text(encoding="utf-8") for p in args.corpus)
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    cfg = CorpusConfig(window=args.window, K=args.basis_size, min_count=args.min_count)
    tensors = ingest(text, cfg, lexicon)
    save_store(args.out, tensors)
    if args.lexicon:
        shutil.copyfile(args.lexicon, Path(args.out) / LEXICON_NAME)
    print(f"wrote {len(tensors)} tensors to {args.out}")
    return 0


def cmd_parse(args):
    lexicon = load_lexicon(args.lexicon)
    tokens = args.sentence.split()
    types = lexicon.types_of(tokens)
    matching = reduce(types)
    for tok, ty in zip(tokens, types):
        print(f"{tok}\t{ty}")
    print("cups\t" + " ".join(f"{i}-{j}" for i, j in matching.pairs))
    if args.emit_tree:
        print(format_tree(build_tree(len(tokens), matching), tokens).rstrip("\n"))
    return 0


def _backend_kw(args):
    kw = {}
    if args.backend == "direct":
        kw["tie_tol"] = args.tol
    elif args.r_max is not None:
        kw["r_max"] = args.r_max
    return kw


def cmd_nn(args):
    store = load_store(args.store)
    query = resolve(args.query, store)
    names = [c for part in args.candidates for c in part.split(",") if c]
    if not names:
        raise StoreError("no candidates given")
    inst = ClosestVectorInstance(query, [resolve(c, store) for c in names])
    res = run_backend(args.backend, inst, args.eps, args.delta, args.seed, **_backend_kw(args))
    report = res.to_json(args.seed)
    report["candidates"] = names
    print(f"{names[res.argmax_index]}\t{res.estimates[res.argmax_index]:.6g}\t"
          f"queries={res.counter.total}")
    if args.report:
        _write_json(args.report, report)
    return 0


def load_classes(path, store) -> list[ClassSet]:
    groups: dict[str, list] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise StoreError(f"{path}:{lineno}: expected 'label<TAB>token-or-file'")
        label, member = parts[0].strip(), parts[1].strip()
        groups.setdefault(label, []).append(resolve(member, store))
    if not groups:
        raise StoreError(f"{path}: no classes")
    return [ClassSet(label, tuple(vs)) for label, vs in groups.items()]


def cmd_classify(args):
    store = load_store(args.store)
    lex_path = args.lexicon or Path(args.store) / LEXICON_NAME
    sentence = Sentence.parse(args.sentence, load_lexicon(lex_path), store)
    classes = load_classes(args.classes, store)
    label, res = classify_deferred(sentence, classes, args.backend, args.eps, args.delta, args.seed,
                                   **_backend_kw(args))
    print(f"{label}\tqueries={res.counter.total}")
    if args.report:
        report = res.to_json(args.seed)
        report["label"] = label
        report["labels"] = [c.label for c in classes for _ in c.members]
        _write_json(args.report, report)
    return 0


def cmd_bench(args):
    r_max = None if args.r_max == "measured" else float(args.r_max)
    plan = BenchPlan(args.sweep, parse_grid(args.grid), tuple(args.backends.split(",")), args.eps,
                     args.delta, args.seeds, args.M, args.N, args.d, args.kind, r_max, args.seed_base)
    report = run_bench(plan, workers=args.workers)
    if args.table1_verbs:
        report.table1 = table1_rows(args.N, _csv_ints(args.table1_verbs))
    if args.out:
        report.write_json(args.out)
    else:
        _write_json(None, report.to_json())
    if args.csv:
        emit_plot_data(report, args.csv)
    for b, fit in report.slopes.items():
        print(f"{b}\tslope={fit.slope:.3f}\tci=[{fit.ci_low:.3f}, {fit.ci_high:.3f}]", file=sys.stderr)
    if args.assert_slopes:
        problems = check_slopes(report)
        for p in problems:
            print(f"FAIL {p}", file=sys.stderr)
        if problems:
            return EXIT_THRESHOLD
    return 0


def cmd_table1(args):
    rows = table1_rows(args.n, _csv_ints(args.verbs))
    if args.out:
        write_table1(rows, args.out)
    else:
        print("N,num_verbs,classical_bits,qubits")
        for row in rows:
            print(",".join(str(x) for x in row))
    return 0


def cmd_bench_kernels(args):
    rows = bench_kernels(_csv_ints(args.sizes), args.repeats)
    print(f"active backend: {kernels.BACKEND}")
    for row in rows:
        cells = [f"{row['kernel']:<17}", f"n={row['n']:<8}", f"python={row['python'] * 1e3:9.3f}ms"]
        if "cython" in row:
            cells += [f"cython={row['cython'] * 1e3:9.3f}ms", f"x{row['speedup']:.2f}"]
        print("  ".join(cells))
    if args.out:
        _write_json(args.out, rows)
    return 0


def _add_estimator_args(p):
    p.add_argument("--backend", choices=sorted(BACKENDS), default="direct")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r-max", type=float, default=None, help="declared bound on squared entries")
    p.add_argument("--report", help="write a JSON report here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcsc", description=__doc__.splitlines()[0])
    ap.add_argument("--tol", type=float, default=1e-12, help="relative tolerance for equality and ties")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a vector store from a corpus")
    p.add_argument("--corpus", nargs="+", required=True)
    p.add_argument("--basis-size", type=int, default=2000)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--lexicon", help="also build tensors for typed words")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("parse", help="type-reduce a sentence")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--sentence", required=True)
    p.add_argument("--emit-tree", action="store_true")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("nn", help="closest vector among candidates")
    p.add_argument("--store")
    p.add_argument("--query", required=True)
    p.add_argument("--candidates", nargs="+", required=True)
    _add_estimator_args(p)
    p.set_defaults(func=cmd_nn)

    p = sub.add_parser("classify", help="classify a sentence by deferred evaluation")
    p.add_argument("--store", required=True)
    p.add_argument("--sentence", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--lexicon", help=f"defaults to <store>/{LEXICON_NAME}")
    _add_estimator_args(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("bench", help="query-count scaling sweep")
    p.add_argument("--sweep", choices=["M", "N", "d"], default="M")
    p.add_argument("--grid", default="4:512:x2")
    p.add_argument("--backends", default="direct,quantum")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--N", type=int, default=64)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--kind", choices=["sphere", "flat", "svo"], default="sphere")
    p.add_argument("--r-max", default="1.0", help="declared entry bound, or 'measured'")
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--table1-verbs", help="also embed storage rows for these verb counts")
    p.add_argument("--out")
    p.add_argument("--csv", help="plot data CSV")
    p.add_argument("--assert-slopes", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("table1", help="storage comparison rows")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--verbs", default="1,10000")
    p.add_argument("--out")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("bench-kernels", help="time compiled against numpy kernels")
    p.add_argument("--sizes", default="1000,10000,100000")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench_kernels)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PLAN
    except (GrammarError, StoreError, TensorError, CorpusError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
