"""ELF64 loading, code-region extraction and in-place patch writing.

Only little-endian x86-64 executables (ET_EXEC) and PIEs (ET_DYN) are
accepted. Function extents come from ``.symtab``; stripped binaries are
rejected when code regions are requested.
"""

from __future__ import annotations

import os
import shutil
import struct
from dataclasses import dataclass, field
from pathlib import Path

ELF_MAGIC = b"\x7fELF"
ELFCLASS64 = 2
ELFDATA2LSB = 1
ET_EXEC = 2
ET_DYN = 3
EM_X86_64 = 62

SHT_NOBITS = 8
SHT_SYMTAB = 2
SHF_ALLOC = 0x2
SHF_EXECINSTR = 0x4
SHN_UNDEF = 0
SHN_LORESERVE = 0xFF00
STT_FUNC = 2

_EHDR = struct.Struct("<16sHHIQQQIHHHHHH")
_SHDR = struct.Struct("<IIQQQQIIQQ")
_SYM = struct.Struct("<IBBHQQ")


class BinaryError(Exception):
    """Base class for ELF loading and patching failures."""


class NotElf(BinaryError):
    pass


class UnsupportedClass(BinaryError):
    """32-bit, big-endian, non-x86-64 or non-executable ELF."""


class Truncated(BinaryError):
    pass


class NoSymbols(BinaryError):
    """The binary carries no usable function symbols (stripped)."""


class OutOfBounds(BinaryError):
    pass


class OverlappingPatches(BinaryError):
    pass


@dataclass(frozen=True)
class Section:
    name: str
    vaddr: int
    file_offset: int
    size: int
    executable: bool
    alloc: bool = True
    nobits: bool = False

    def contains_vaddr(self, vaddr: int, length: int = 1) -> bool:
        return self.vaddr <= vaddr and vaddr + length <= self.vaddr + self.size

    def to_offset(self, vaddr: int) -> int:
        return self.file_offset + (vaddr - self.vaddr)


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    vaddr: int
    size: int
    # True when the symbol table recorded size 0 and the extent was inferred
    inferred: bool = False


@dataclass(frozen=True)
class CodeRegion:
    vaddr: int
    file_offset: int
    length: int

    @property
    def end(self) -> int:
        return self.vaddr + self.length


@dataclass(frozen=True)
class LoadedBinary:
    path: Path
    image: bytes = field(repr=False)
    sections: tuple[Section, ...]
    symbols: tuple[FunctionSymbol, ...]
    entry: int
    elf_type: int

    @property
    def is_pie(self) -> bool:
        return self.elf_type == ET_DYN

    def section(self, name: str) -> Section | None:
        for sec in self.sections:
            if sec.name == name:
                return sec
        return None

    def executable_sections(self) -> list[Section]:
        return [s for s in self.sections if s.executable and not s.nobits]

    def section_for_vaddr(self, vaddr: int, length: int = 1) -> Section | None:
        for sec in self.sections:
            if sec.alloc and not sec.nobits and sec.contains_vaddr(vaddr, length):
                return sec
        return None

    def vaddr_to_offset(self, vaddr: int) -> int:
        sec = self.section_for_vaddr(vaddr)
        if sec is None:
            raise OutOfBounds(f"vaddr {vaddr:#x} is not file-backed")
        return sec.to_offset(vaddr)

    def address_ranges(self) -> list[tuple[int, int]]:
        """[start, end) of every allocated section, used to spot address-like immediates."""
        return [(s.vaddr, s.vaddr + s.size) for s in self.sections if s.alloc and s.size]


def _cstr(blob: bytes, offset: int) -> str:
    end = blob.find(b"\0", offset)
    if end < 0:
        end = len(blob)
    return blob[offset:end].decode("utf-8", errors="replace")


def parse_elf(image: bytes, path: Path | str = "<memory>") -> LoadedBinary:
    if len(image) < 4 or image[:4] != ELF_MAGIC:
        raise NotElf(f"{path}: missing ELF magic")
    if len(image) < 16:
        raise Truncated(f"{path}: ELF identification truncated")
    if image[4] != ELFCLASS64:
        raise UnsupportedClass(f"{path}: not a 64-bit ELF (class {image[4]})")
    if image[5] != ELFDATA2LSB:
        raise UnsupportedClass(f"{path}: not little-endian (data {image[5]})")
    if len(image) < _EHDR.size:
        raise Truncated(f"{path}: ELF header truncated")

    (_, e_type, e_machine, _, e_entry, _, e_shoff, _, _, _, _,
     e_shentsize, e_shnum, e_shstrndx) = _EHDR.unpack_from(image, 0)
    if e_machine != EM_X86_64:
        raise UnsupportedClass(f"{path}: machine {e_machine} is not x86-64")
    if e_type not in (ET_EXEC, ET_DYN):
        raise UnsupportedClass(f"{path}: ELF type {e_type} is neither ET_EXEC nor ET_DYN")
    if e_shnum == 0 or e_shoff == 0:
        raise Truncated(f"{path}: no section header table")
    if e_shentsize != _SHDR.size or e_shoff + e_shnum * _SHDR.size > len(image):
        raise Truncated(f"{path}: section header table out of bounds")

    raw = [_SHDR.unpack_from(image, e_shoff + i * _SHDR.size) for i in range(e_shnum)]
    if e_shstrndx >= e_shnum:
        raise Truncated(f"{path}: bad section-name string table index")
    _, _, _, _, str_off, str_size, *_ = raw[e_shstrndx]
    if str_off + str_size > len(image):
        raise Truncated(f"{path}: section-name table out of bounds")
    shstrtab = image[str_off:str_off + str_size]

    sections = []
    for name_off, sh_type, flags, addr, offset, size, *_ in raw:
        nobits = sh_type == SHT_NOBITS
        if not nobits and offset + size > len(image):
            raise Truncated(f"{path}: section at {offset:#x} exceeds file size")
        sections.append(Section(
            name=_cstr(shstrtab, name_off),
            vaddr=addr,
            file_offset=offset,
            size=size,
            executable=bool(flags & SHF_EXECINSTR),
            alloc=bool(flags & SHF_ALLOC),
            nobits=nobits,
        ))

    symbols = _read_function_symbols(image, raw, sections, path)
    return LoadedBinary(
        path=Path(path),
        image=bytes(image),
        sections=tuple(sections),
        symbols=tuple(symbols),
        entry=e_entry,
        elf_type=e_type,
    )


def _read_function_symbols(image, raw_sections, sections, path) -> list[FunctionSymbol]:
    found: list[tuple[str, int, int, int]] = []
    for _, sh_type, _, _, offset, size, link, _, _, entsize in raw_sections:
        if sh_type != SHT_SYMTAB:
            continue
        if entsize != _SYM.size or link >= len(raw_sections):
            raise Truncated(f"{path}: malformed symbol table")
        str_off, str_size = raw_sections[link][4], raw_sections[link][5]
        strtab = image[str_off:str_off + str_size]
        for i in range(size // _SYM.size):
            st_name, st_info, _, st_shndx, st_value, st_size = _SYM.unpack_from(
                image, offset + i * _SYM.size)
            if st_info & 0xF != STT_FUNC:
                continue
            if st_shndx == SHN_UNDEF or st_shndx >= SHN_LORESERVE:
                continue
            found.append((_cstr(strtab, st_name), st_value, st_size, st_shndx))

    # Zero-size symbols (crt helpers, _init/_fini) extend to the next
    # function start in their section, or to the section end.
    starts: dict[int, list[int]] = {}
    for _, value, _, shndx in found:
        starts.setdefault(shndx, []).append(value)
    result = []
    for name, value, size, shndx in found:
        inferred = False
        if size == 0 and shndx < len(sections):
            sec = sections[shndx]
            if sec.executable and sec.contains_vaddr(value):
                later = [s for s in starts[shndx] if s > value]
                end = min(later) if later else sec.vaddr + sec.size
                size = end - value
                inferred = True
        result.append(FunctionSymbol(name, value, size, inferred))
    result.sort(key=lambda s: (s.vaddr, s.name))
    return result


def load_binary(path: str | os.PathLike) -> LoadedBinary:
    path = Path(path)
    return parse_elf(path.read_bytes(), path)


def code_regions(b: LoadedBinary) -> list[CodeRegion]:
    """Function-symbol ranges clipped to executable sections, merged and sorted."""
    if not b.symbols:
        raise NoSymbols(f"{b.path}: no function symbols (stripped binary?)")
    spans = []
    for sym in b.symbols:
        if sym.size <= 0:
            continue
        for sec in b.executable_sections():
            lo = max(sym.vaddr, sec.vaddr)
            hi = min(sym.vaddr + sym.size, sec.vaddr + sec.size)
            if lo < hi:
                spans.append((lo, hi, sec))
    if not spans:
        raise NoSymbols(f"{b.path}: no function symbol lies in an executable section")
    spans.sort(key=lambda t: (t[0], t[1]))

    merged: list[list] = []
    for lo, hi, sec in spans:
        if merged and merged[-1][2] is sec and lo < merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi, sec])
    return [CodeRegion(lo, sec.to_offset(lo), hi - lo) for lo, hi, sec in merged]


def apply_patches(image: bytes, patches) -> bytes:
    ordered = sorted((int(off), bytes(data)) for off, data in patches)
    buf = bytearray(image)
    prev_end = -1
    for off, data in ordered:
        if off < 0 or off + len(data) > len(buf):
            raise OutOfBounds(f"patch [{off:#x}, {off + len(data):#x}) outside image of {len(buf)} bytes")
        if off < prev_end:
            raise OverlappingPatches(f"patch at {off:#x} overlaps previous patch ending at {prev_end:#x}")
        buf[off:off + len(data)] = data
        prev_end = off + len(data)
    return bytes(buf)


def write_patched(b: LoadedBinary, patches, out: str | os.PathLike) -> None:
    """Write a copy of ``b`` with ``patches`` (file_offset, bytes) applied.

    The output keeps the input's length and permission bits.
    """
    data = apply_patches(b.image, patches)
    out = Path(out)
    tmp = out.with_name(out.name + ".tmp")
    tmp.write_bytes(data)
    if b.path.exists():
        shutil.copymode(b.path, tmp)
    else:
        os.chmod(tmp, 0o755)
    os.replace(tmp, out)
