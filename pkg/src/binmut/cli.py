"""Command-line driver: enumerate, forge, run, report, or all of them in sequence.

Stages talk to each other only through files, so each one can be rerun on
its own.  Typical end-to-end use::

    binmut all ./prog --manifest prog.test.json --manifest prog.ref.json --out out/
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .binary_model import BinaryError, load_binary
from .forge import DEFAULT_SAMPLE_SIZE, DEFAULT_SEED, SamplePlan, emit_all, sample
from .harness import (HarnessError, baseline, evaluate_all, load_manifest, read_verdicts,
                      write_verdicts)
from .mutagen import EnumerationStats, MutationError, class_counts, enumerate_all, read_manifest, write_manifest
from .report import FORMATS, RunReport, breakdown, emit_report, score

log = logging.getLogger("binmut")


class UsageError(Exception):
    pass


def _formats(text: str) -> tuple[str, ...]:
    items = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in items if f not in FORMATS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"formats must be a subset of {','.join(FORMATS)}")
    return items


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _seed(text: str) -> int:
    n = int(text, 0)
    if not 0 <= n < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return n


def _existing(path: str | os.PathLike, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {p}")
    return p


def _read_records(path: Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _print_counts(mutants, stats: EnumerationStats | None = None):
    counts = class_counts(mutants)
    print(f"mutants: {len(mutants)}")
    for cls, n in counts.items():
        print(f"  {cls.value:<12}{n}")
    if stats is not None:
        print(f"instructions: {stats.instructions}  mutable: {stats.mutable_instructions} "
              f"({100 * stats.density:.1f}%)")


# -- subcommands ------------------------------------------------------------------

def cmd_enumerate(args) -> int:
    b = load_binary(_existing(args.binary, "binary"))
    stats = EnumerationStats()
    mutants = enumerate_all(b, stats)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = write_manifest(mutants, out / "manifest.jsonl")
    log.info("wrote %s", path)
    _print_counts(mutants, stats)
    return 0


def cmd_forge(args) -> int:
    b = load_binary(_existing(args.binary, "binary"))
    population = read_manifest(_existing(args.manifest, "mutant manifest"), b)
    chosen = sample(population, SamplePlan(args.seed, args.sample_size))
    emit_all(b, chosen, args.out)
    log.info("emitted %d of %d mutants to %s", len(chosen), len(population), args.out)
    print(f"sampled {len(chosen)} of {len(population)} mutants (seed {args.seed})")
    return 0


def _run_one(binary: Path, mutant_dir: Path, manifest_path: Path, workers: int, out: Path):
    manifest = load_manifest(manifest_path)
    profile = baseline(manifest, binary)
    paths = sorted(mutant_dir.glob("*.bin"), key=lambda p: int(p.stem))
    results = evaluate_all(paths, manifest, profile, workers)
    out.mkdir(parents=True, exist_ok=True)
    write_verdicts(results, out / "verdicts.jsonl", out / "timings.jsonl")
    s = score([(r.mutant_id, r.verdict) for r in results])
    print(f"{manifest.input_set_name or manifest_path.stem}: sampled {s.sampled} killed {s.killed} "
          f"passed {s.passed} trivial {s.trivial} score {s.raw_score_pct}%")
    return results


def cmd_run(args) -> int:
    binary = _existing(args.binary, "binary")
    mutant_dir = _existing(args.mutants, "mutant directory")
    manifest = _existing(args.manifest, "test manifest")
    _run_one(binary, mutant_dir, manifest, args.workers, Path(args.out))
    return 0


def _input_set_of(verdicts_path: Path) -> str:
    return verdicts_path.parent.name or verdicts_path.stem


def cmd_report(args) -> int:
    sampled = _read_records(_existing(args.sample, "sample manifest"))
    population = _read_records(_existing(args.population, "mutant manifest")) if args.population else None
    label = Path(args.binary).name if args.binary else "binary"
    runs = []
    for vpath in args.verdicts:
        vpath = _existing(vpath, "verdicts file")
        verdicts = read_verdicts(vpath)
        if not verdicts:
            continue
        runs.append(RunReport(label, _input_set_of(vpath), score(verdicts),
                              breakdown(sampled, verdicts, population)))
    for p in emit_report(runs, args.out, args.formats):
        log.info("wrote %s", p)
    return 0


def cmd_all(args) -> int:
    binary = _existing(args.binary, "binary")
    if not args.manifest:
        raise UsageError("at least one --manifest is required")
    # Validate everything up front so a bad manifest never leaves a half-built tree.
    manifests = []
    for m in args.manifest:
        parsed = load_manifest(_existing(m, "test manifest"))
        manifests.append((parsed.input_set_name or Path(m).stem, Path(m)))
    names = [n for n, _ in manifests]
    if len(set(names)) != len(names):
        raise UsageError(f"duplicate input-set names: {names}")
    b = load_binary(binary)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stats = EnumerationStats()
    population = enumerate_all(b, stats)
    write_manifest(population, out / "manifest.jsonl")
    _print_counts(population, stats)

    chosen = sample(population, SamplePlan(args.seed, args.sample_size))
    for stale in (out / "mutants").glob("*.bin"):
        stale.unlink()
    emit_all(b, chosen, out / "mutants")
    print(f"sampled {len(chosen)} of {len(population)} mutants (seed {args.seed})")

    runs = []
    for name, mpath in manifests:
        results = _run_one(binary, out / "mutants", mpath, args.workers, out / "runs" / name)
        verdicts = [(r.mutant_id, r.verdict) for r in results]
        runs.append(RunReport(binary.name, name, score(verdicts),
                              breakdown(chosen, verdicts, population)))
    for p in emit_report(runs, out / "report", args.formats):
        log.info("wrote %s", p)
    return 0


# -- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current directory)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="sampling seed (default 42)")
    sampling.add_argument("--sample-size", type=_positive, default=DEFAULT_SAMPLE_SIZE,
                          help="mutants to sample (default 1000)")

    running = argparse.ArgumentParser(add_help=False)
    running.add_argument("--workers", type=_positive, default=os.cpu_count() or 1,
                         help="parallel evaluations (default: logical CPU count)")

    reporting = argparse.ArgumentParser(add_help=False)
    reporting.add_argument("--formats", type=_formats, default=FORMATS,
                           help="comma-separated subset of csv,json,svg (default: all)")

    p = argparse.ArgumentParser(prog="binmut", description="Mutation testing for x86-64 ELF binaries.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("enumerate", parents=[common], help="list every first-order mutant")
    sp.add_argument("binary")
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("forge", parents=[common, sampling], help="sample and write mutant binaries")
    sp.add_argument("binary")
    sp.add_argument("manifest", help="manifest.jsonl from enumerate")
    sp.set_defaults(func=cmd_forge)

    sp = sub.add_parser("run", parents=[common, running], help="evaluate mutants against a test manifest")
    sp.add_argument("mutants", help="directory of <id>.bin mutants")
    sp.add_argument("manifest", help="test manifest (JSON)")
    sp.add_argument("--binary", required=True, help="original binary, used for the baseline")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("report", parents=[common, reporting], help="score verdicts and render tables")
    sp.add_argument("verdicts", nargs="+", help="verdicts.jsonl files; input-set name is the parent dir")
    sp.add_argument("--sample", required=True, help="sample manifest.jsonl written by forge")
    sp.add_argument("--population", help="full manifest.jsonl, for generated counts")
    sp.add_argument("--binary", help="binary path or name used to label rows")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("all", parents=[common, sampling, running, reporting],
                        help="enumerate, forge, run every manifest, report")
    sp.add_argument("binary")
    sp.add_argument("--manifest", action="append", default=[],
                    help="test manifest, one per input set (repeatable)")
    sp.set_defaults(func=cmd_all)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except (UsageError, BinaryError, HarnessError, MutationError, ValueError, OSError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
