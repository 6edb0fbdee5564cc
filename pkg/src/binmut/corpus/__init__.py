"""Bundled desk-scale corpus: small C programs plus test/train/ref manifests.

Binaries are built on demand with the system C compiler, unstripped, at
several optimization levels::

    from binmut.corpus import build_corpus
    built = build_corpus("/tmp/corpus")      # {("abs", "O0"): Path(...), ...}
"""

from __future__ import annotations

import os
import shutil
import subprocess
from importlib import resources
from pathlib import Path

PROGRAMS = ("abs", "countdown", "gcd", "sort", "crc", "primes", "calc", "toolbox")
OPT_LEVELS = ("O0", "O2", "O3")
INPUT_SETS = ("test", "train", "ref")


class CorpusBuildError(RuntimeError):
    pass


def _data_dir() -> Path:
    return Path(str(resources.files(__name__)))


def source_path(program: str) -> Path:
    return _data_dir() / "src" / f"{program}.c"


def manifests_dir() -> Path:
    return _data_dir() / "manifests"


def manifest_path(program: str, input_set: str) -> Path:
    return manifests_dir() / f"{program}.{input_set}.json"


def build_program(program: str, level: str, out_dir: str | os.PathLike, cc: str | None = None) -> Path:
    cc = cc or os.environ.get("CC", "gcc")
    if shutil.which(cc) is None:
        raise CorpusBuildError(f"C compiler {cc!r} not found")
    dest = Path(out_dir) / level / f"{program}.bin"
    dest.parent.mkdir(parents=True, exist_ok=True)
    cmd = [cc, f"-{level}", "-o", str(dest), str(source_path(program))]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CorpusBuildError(f"{' '.join(cmd)} failed:\n{proc.stderr}")
    return dest


def build_corpus(out_dir: str | os.PathLike, levels=OPT_LEVELS, programs=PROGRAMS,
                 cc: str | None = None) -> dict[tuple[str, str], Path]:
    """Compile every program at every level; returns {(program, level): path}."""
    return {(p, lvl): build_program(p, lvl, out_dir, cc) for lvl in levels for p in programs}
