"""First-order mutant enumeration over a binary's code regions.

Sites are found by a linear sweep of every code region; each site gets the
operators of its classes in a fixed catalog order, so site and mutant ids
are reproducible across runs and machines.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .binary_model import LoadedBinary, code_regions
from .isa import (
    ARITH_TARGETS,
    LOGIC_TARGETS,
    InstKind,
    Instruction,
    NotABranch,
    OperatorClass,
    UndecodableLength,
    classes_of,
    decode,
    encode_force_jump,
    encode_nop,
    encode_swap,
    patch_immediate,
    sweep,
)

log = logging.getLogger(__name__)

ARITH_SWAP = "ArithSwap"
LOGIC_SWAP = "LogicSwap"
FORCE_TAKE = "ForceTake"
FORCE_FALLTHROUGH = "ForceFallthrough"
CONST_REPLACE = "ConstReplace"
SKIP = "Skip"

_VARIANT_CLASS = {
    ARITH_SWAP: OperatorClass.ARITHMETIC,
    LOGIC_SWAP: OperatorClass.LOGICAL,
    FORCE_TAKE: OperatorClass.CONDITIONAL,
    FORCE_FALLTHROUGH: OperatorClass.CONDITIONAL,
    CONST_REPLACE: OperatorClass.CONSTANT,
    SKIP: OperatorClass.SKIP,
}


class MutationError(Exception):
    pass


class Unencodable(MutationError):
    pass


class IdenticalBytes(MutationError):
    pass


class ManifestMismatch(MutationError):
    """A manifest record does not match the bytes of the binary it names."""


@dataclass(frozen=True)
class MutationOperator:
    variant: str
    arg: str | int | None = None

    @property
    def op_class(self) -> OperatorClass:
        return _VARIANT_CLASS[self.variant]

    @property
    def label(self) -> str:
        return self.variant if self.arg is None else f"{self.variant}({self.arg})"


@dataclass(frozen=True)
class MutationSite:
    site_id: int
    vaddr: int
    file_offset: int
    instruction: Instruction
    classes: frozenset[OperatorClass]


@dataclass(frozen=True)
class Mutant:
    mutant_id: int
    site: MutationSite
    operator: MutationOperator
    patch_bytes: bytes

    @property
    def op_class(self) -> OperatorClass:
        return self.operator.op_class

    def to_record(self) -> dict:
        insn = self.site.instruction
        return {
            "mutant_id": self.mutant_id,
            "site_id": self.site.site_id,
            "vaddr": self.site.vaddr,
            "file_offset": self.site.file_offset,
            "length": insn.length,
            "mnemonic": insn.mnemonic,
            "class": self.op_class.value,
            "variant": self.operator.variant,
            "arg": self.operator.arg,
            "original": insn.raw.hex(),
            "patch": self.patch_bytes.hex(),
        }


@dataclass
class EnumerationStats:
    instructions: int = 0
    sites: int = 0
    mutable_instructions: int = 0
    unencodable_sites: int = 0
    skipped_regions: list[int] = field(default_factory=list)

    @property
    def density(self) -> float:
        return self.mutable_instructions / self.instructions if self.instructions else 0.0


def _address_like(b: LoadedBinary, value: int) -> bool:
    # PIE code cannot embed absolute addresses in immediates
    if b.is_pie or value <= 0:
        return False
    return any(lo <= value < hi for lo, hi in b.address_ranges())


def site_classes(b: LoadedBinary | None, insn: Instruction) -> frozenset[OperatorClass]:
    classes = classes_of(insn)
    if b is not None and OperatorClass.CONSTANT in classes and _address_like(b, insn.imm.value):
        classes = classes - {OperatorClass.CONSTANT}
    return classes


def _sweep_regions(b: LoadedBinary, stats: EnumerationStats | None = None):
    for region in code_regions(b):
        code = b.image[region.file_offset:region.file_offset + region.length]
        try:
            for insn in sweep(code, region.vaddr):
                yield region, insn
        except UndecodableLength as exc:
            log.warning("skipping rest of region at %#x: %s", region.vaddr, exc)
            if stats is not None:
                stats.skipped_regions.append(region.vaddr)


def enumerate_sites(b: LoadedBinary, stats: EnumerationStats | None = None) -> list[MutationSite]:
    """All mutation sites, ascending by vaddr; site_id is the list index."""
    sites = []
    for region, insn in _sweep_regions(b, stats):
        if stats is not None:
            stats.instructions += 1
        classes = site_classes(b, insn)
        if not classes:
            continue
        offset = region.file_offset + (insn.vaddr - region.vaddr)
        sites.append(MutationSite(len(sites), insn.vaddr, offset, insn, classes))
    return sites


def constant_candidates(c: int) -> list[int]:
    """{-1, 0, 1, -c, c+1, c-1} in that order, without c itself or repeats."""
    out = []
    for v in (-1, 0, 1, -c, c + 1, c - 1):
        if v != c and v not in out:
            out.append(v)
    return out


def candidates_for(s: MutationSite) -> list[MutationOperator]:
    insn = s.instruction
    ops = []
    if OperatorClass.ARITHMETIC in s.classes:
        ops += [MutationOperator(ARITH_SWAP, t) for t in ARITH_TARGETS
                if encode_swap(insn, t) is not None]
    if OperatorClass.LOGICAL in s.classes:
        ops += [MutationOperator(LOGIC_SWAP, t) for t in LOGIC_TARGETS
                if encode_swap(insn, t) is not None]
    if insn.kind in (InstKind.JCC8, InstKind.JCC32):
        try:
            encode_force_jump(insn)
            ops.append(MutationOperator(FORCE_TAKE))
        except NotABranch:
            pass
        ops.append(MutationOperator(FORCE_FALLTHROUGH))
    if OperatorClass.CONSTANT in s.classes:
        ops += [MutationOperator(CONST_REPLACE, v) for v in constant_candidates(insn.imm.value)
                if insn.imm.fits(v)]
    if OperatorClass.SKIP in s.classes:
        ops.append(MutationOperator(SKIP))
    return ops


def instantiate(s: MutationSite, op: MutationOperator, mutant_id: int = -1) -> Mutant:
    insn = s.instruction
    if op.variant in (ARITH_SWAP, LOGIC_SWAP):
        patch = encode_swap(insn, op.arg)
    elif op.variant == FORCE_TAKE:
        patch = encode_force_jump(insn)
    elif op.variant in (FORCE_FALLTHROUGH, SKIP):
        patch = encode_nop(insn.length)
    elif op.variant == CONST_REPLACE:
        patch = patch_immediate(insn, int(op.arg))
    else:
        raise ValueError(f"unknown variant {op.variant!r}")
    if patch is None:
        raise Unencodable(f"{insn}: {op.label} has no same-length encoding")
    if patch == insn.raw:
        raise IdenticalBytes(f"{insn}: {op.label} leaves the bytes unchanged")
    return Mutant(mutant_id, s, op, patch)


def _site_mutants(s: MutationSite):
    seen = set()
    for op in candidates_for(s):
        m = instantiate(s, op)
        # a Jcc's Skip is byte-identical to its ForceFallthrough
        if m.patch_bytes in seen:
            continue
        seen.add(m.patch_bytes)
        yield m


def enumerate_all(b: LoadedBinary, stats: EnumerationStats | None = None) -> list[Mutant]:
    mutants = []
    for site in enumerate_sites(b, stats):
        produced = 0
        swaps_possible = False
        for m in _site_mutants(site):
            mutants.append(Mutant(len(mutants), site, m.operator, m.patch_bytes))
            produced += 1
            swaps_possible |= m.operator.variant in (ARITH_SWAP, LOGIC_SWAP)
        if stats is not None:
            stats.sites += 1
            stats.mutable_instructions += produced > 0
            if (site.classes & {OperatorClass.ARITHMETIC, OperatorClass.LOGICAL}
                    and not swaps_possible):
                stats.unencodable_sites += 1
    return mutants


def class_counts(mutants) -> dict[OperatorClass, int]:
    counts = {c: 0 for c in OperatorClass}
    for m in mutants:
        counts[m.op_class] += 1
    return counts


# -- JSON-lines manifest --------------------------------------------------------

def dumps_manifest(mutants) -> str:
    return "".join(json.dumps(m.to_record()) + "\n" for m in mutants)


def write_manifest(mutants, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps_manifest(mutants))
    return path


def mutant_from_record(b: LoadedBinary, rec: dict) -> Mutant:
    """Rebuild a Mutant by re-decoding the original instruction from ``b``."""
    off, length = rec["file_offset"], rec["length"]
    raw = b.image[off:off + length]
    if raw.hex() != rec["original"]:
        raise ManifestMismatch(
            f"mutant {rec['mutant_id']}: bytes at {off:#x} are {raw.hex()}, manifest says {rec['original']}")
    insn = decode(raw, rec["vaddr"])
    if insn.length != length:
        raise ManifestMismatch(f"mutant {rec['mutant_id']}: decoded length {insn.length} != {length}")
    site = MutationSite(rec["site_id"], rec["vaddr"], off, insn, site_classes(b, insn))
    op = MutationOperator(rec["variant"], rec["arg"])
    patch = bytes.fromhex(rec["patch"])
    if len(patch) != length or patch == raw:
        raise ManifestMismatch(f"mutant {rec['mutant_id']}: invalid patch {rec['patch']}")
    return Mutant(rec["mutant_id"], site, op, patch)


def read_manifest(path: str | Path, b: LoadedBinary) -> list[Mutant]:
    mutants = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                mutants.append(mutant_from_record(b, json.loads(line)))
    return mutants
