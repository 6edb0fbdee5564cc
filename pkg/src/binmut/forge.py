"""Mutant sampling, emission to disk and single-site diff verification."""

from __future__ import annotations

import os
import random
from dataclasses import dataclass
from pathlib import Path

from .binary_model import LoadedBinary, write_patched
from .mutagen import Mutant, write_manifest

DEFAULT_SAMPLE_SIZE = 1000
DEFAULT_SEED = 42


class EmptyPopulation(ValueError):
    pass


@dataclass(frozen=True)
class SamplePlan:
    seed: int = DEFAULT_SEED
    size: int = DEFAULT_SAMPLE_SIZE

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"sample size must be >= 1, got {self.size}")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


def sample(mutants, plan: SamplePlan) -> list[Mutant]:
    """Uniform sample without replacement, keyed by mutant_id.

    The population is ordered by id before a seeded shuffle, so the chosen
    set depends only on (seed, set of ids), not on input order.
    """
    pool = sorted(mutants, key=lambda m: m.mutant_id)
    if not pool:
        raise EmptyPopulation("cannot sample from an empty mutant list")
    if plan.size >= len(pool):
        return pool
    order = list(range(len(pool)))
    random.Random(plan.seed).shuffle(order)
    return sorted((pool[i] for i in order[:plan.size]), key=lambda m: m.mutant_id)


def mutant_path(out_dir: str | os.PathLike, m: Mutant) -> Path:
    return Path(out_dir) / f"{m.mutant_id}.bin"


def emit(b: LoadedBinary, m: Mutant, out_dir: str | os.PathLike) -> Path:
    path = mutant_path(out_dir, m)
    write_patched(b, [(m.site.file_offset, m.patch_bytes)], path)
    return path


def emit_all(b: LoadedBinary, mutants, out_dir: str | os.PathLike) -> list[Path]:
    """Write every mutant plus ``manifest.jsonl`` restricted to them."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [emit(b, m, out_dir) for m in mutants]
    write_manifest(mutants, out_dir / "manifest.jsonl")
    return paths


def verify_diff(original: str | os.PathLike, mutant: str | os.PathLike, m: Mutant) -> bool:
    a = Path(original).read_bytes()
    b = Path(mutant).read_bytes()
    if len(a) != len(b):
        return False
    lo = m.site.file_offset
    hi = lo + m.site.instruction.length
    if a[:lo] != b[:lo] or a[hi:] != b[hi:]:
        return False
    return a[lo:hi] != b[lo:hi]
