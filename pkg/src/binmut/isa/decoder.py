"""Length-exact x86-64 (long mode) instruction decoder.

Every instruction is length-decoded: legacy prefixes, REX, the one-byte
map, 0F / 0F38 / 0F3A maps, VEX and EVEX encoded forms, ModRM/SIB/disp and
immediates. Only the families that mutation operators act on are decoded
semantically; anything else comes back as ``InstKind.OPAQUE`` with the
correct length.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator

MAX_INSN_LEN = 15

LEGACY_PREFIXES = frozenset({0xF0, 0xF2, 0xF3, 0x2E, 0x36, 0x3E, 0x26, 0x64, 0x65, 0x66, 0x67})

ALU_OPS = ("add", "or", "adc", "sbb", "and", "sub", "xor", "cmp")
GROUP3_OPS = ("test", "test", "not", "neg", "mul", "imul", "div", "idiv")
SHIFT_OPS = {4: "shl", 5: "shr", 7: "sar"}


class UndecodableLength(Exception):
    """The length of the instruction at ``vaddr`` cannot be determined."""

    def __init__(self, vaddr: int, reason: str):
        super().__init__(f"{vaddr:#x}: {reason}")
        self.vaddr = vaddr
        self.reason = reason


class InstKind(enum.Enum):
    ALU_RM = "AluRM"
    ALU_IMM = "AluImm"
    MUL_DIV = "MulDivGroup"
    SHIFT = "ShiftGroup"
    INC_DEC = "IncDec"
    JCC8 = "Jcc8"
    JCC32 = "Jcc32"
    JMP_REL = "JmpRel"
    MOV_IMM = "MovImm"
    PUSH_IMM = "PushImm"
    IMUL_IMM = "ImulImm"
    IMUL_RM = "ImulRM"
    SETCC = "Setcc"
    OPAQUE = "Opaque"


class OperatorClass(enum.Enum):
    ARITHMETIC = "arithmetic"
    LOGICAL = "logical"
    CONDITIONAL = "conditional"
    CONSTANT = "constant"
    SKIP = "skip"


class ConditionCode(enum.IntEnum):
    O = 0x0
    NO = 0x1
    B = 0x2
    AE = 0x3
    E = 0x4
    NE = 0x5
    BE = 0x6
    A = 0x7
    S = 0x8
    NS = 0x9
    P = 0xA
    NP = 0xB
    L = 0xC
    GE = 0xD
    LE = 0xE
    G = 0xF


@dataclass(frozen=True)
class ImmediateSlot:
    value: int
    width: int
    offset: int
    # imm narrower than the operand and sign-extended by the CPU
    sign_extended: bool

    def fits(self, value: int) -> bool:
        bits = self.width * 8
        return -(1 << (bits - 1)) <= value < (1 << (bits - 1))


@dataclass(frozen=True)
class Instruction:
    vaddr: int
    raw: bytes
    kind: InstKind
    mnemonic: str = ""
    operator_class: OperatorClass | None = None
    imm: ImmediateSlot | None = None
    cond: ConditionCode | None = None
    # branch displacement (Jcc/JMP rel); never treated as a constant
    rel: int | None = None
    opcode_offset: int = 0
    modrm_offset: int | None = None

    @property
    def length(self) -> int:
        return len(self.raw)

    @property
    def end(self) -> int:
        return self.vaddr + len(self.raw)

    @property
    def branch_target(self) -> int | None:
        if self.rel is None:
            return None
        return self.end + self.rel

    @property
    def reg_field(self) -> int | None:
        if self.modrm_offset is None:
            return None
        return (self.raw[self.modrm_offset] >> 3) & 7

    def __str__(self) -> str:
        name = self.mnemonic or self.kind.value
        return f"{self.vaddr:#x}: {self.raw.hex(' ')}  {name}"


# -- one-byte opcode map ------------------------------------------------------
# value: (has_modrm, immediate code); codes: b=1, w=2, z=2/4, v=2/4/8,
# e=ENTER (iw+ib), m=moffs, g3=group-3 (TEST carries an immediate)
_INVALID = None
_ONE_BYTE: dict[int, tuple[bool, str] | None] = {}


def _fill_one_byte() -> None:
    t = _ONE_BYTE
    for base in range(0x00, 0x40, 8):
        for k in range(4):
            t[base + k] = (True, "")
        t[base + 4] = (False, "b")
        t[base + 5] = (False, "z")
    for op in (0x06, 0x07, 0x0E, 0x16, 0x17, 0x1E, 0x1F, 0x27, 0x2F, 0x37, 0x3F):
        t[op] = _INVALID
    for op in range(0x50, 0x60):
        t[op] = (False, "")
    t[0x60] = t[0x61] = _INVALID
    t[0x63] = (True, "")
    t[0x68] = (False, "z")
    t[0x69] = (True, "z")
    t[0x6A] = (False, "b")
    t[0x6B] = (True, "b")
    for op in range(0x6C, 0x70):
        t[op] = (False, "")
    for op in range(0x70, 0x80):
        t[op] = (False, "b")
    t[0x80] = (True, "b")
    t[0x81] = (True, "z")
    t[0x82] = _INVALID
    t[0x83] = (True, "b")
    for op in range(0x84, 0x90):
        t[op] = (True, "")
    for op in range(0x90, 0xA0):
        t[op] = (False, "")
    t[0x9A] = _INVALID
    for op in range(0xA0, 0xA4):
        t[op] = (False, "m")
    for op in range(0xA4, 0xA8):
        t[op] = (False, "")
    t[0xA8] = (False, "b")
    t[0xA9] = (False, "z")
    for op in range(0xAA, 0xB0):
        t[op] = (False, "")
    for op in range(0xB0, 0xB8):
        t[op] = (False, "b")
    for op in range(0xB8, 0xC0):
        t[op] = (False, "v")
    t[0xC0] = t[0xC1] = (True, "b")
    t[0xC2] = (False, "w")
    t[0xC3] = (False, "")
    t[0xC6] = (True, "b")
    t[0xC7] = (True, "z")
    t[0xC8] = (False, "e")
    t[0xC9] = (False, "")
    t[0xCA] = (False, "w")
    t[0xCB] = t[0xCC] = (False, "")
    t[0xCD] = (False, "b")
    t[0xCE] = _INVALID
    t[0xCF] = (False, "")
    for op in range(0xD0, 0xD4):
        t[op] = (True, "")
    t[0xD4] = t[0xD5] = t[0xD6] = _INVALID
    t[0xD7] = (False, "")
    for op in range(0xD8, 0xE0):
        t[op] = (True, "")
    for op in range(0xE0, 0xE8):
        t[op] = (False, "b")
    t[0xE8] = t[0xE9] = (False, "d")
    t[0xEA] = _INVALID
    t[0xEB] = (False, "b")
    for op in range(0xEC, 0xF0):
        t[op] = (False, "")
    t[0xF1] = t[0xF4] = t[0xF5] = (False, "")
    t[0xF6] = (True, "g3b")
    t[0xF7] = (True, "g3z")
    for op in range(0xF8, 0xFE):
        t[op] = (False, "")
    t[0xFE] = t[0xFF] = (True, "")


_fill_one_byte()

# -- two-byte (0F xx) map -------------------------------------------------------
_TWO_BYTE: dict[int, tuple[bool, str] | None] = {}


def _fill_two_byte() -> None:
    t = _TWO_BYTE
    for op in range(0x100):
        t[op] = (True, "")
    for op in (0x04, 0x0A, 0x0C, 0x24, 0x25, 0x26, 0x27, 0x36, 0x39, 0x3B, 0x3C,
               0x3D, 0x3E, 0x3F, 0x7A, 0x7B, 0xA6, 0xA7):
        t[op] = _INVALID
    for op in (0x05, 0x06, 0x07, 0x08, 0x09, 0x0B, 0x0E, 0x30, 0x31, 0x32, 0x33,
               0x34, 0x35, 0x37, 0x77, 0xA0, 0xA1, 0xA2, 0xA8, 0xA9, 0xAA):
        t[op] = (False, "")
    for op in range(0xC8, 0xD0):
        t[op] = (False, "")
    for op in range(0x80, 0x90):
        t[op] = (False, "d")
    t[0x0F] = (True, "b")  # 3DNow! suffix byte
    for op in (0x70, 0x71, 0x72, 0x73, 0xA4, 0xAC, 0xBA, 0xC2, 0xC4, 0xC5, 0xC6):
        t[op] = (True, "b")
    # 0F 38 / 0F 3A are escapes handled by the caller
    t[0x38] = t[0x3A] = None


_fill_two_byte()

_VEX_MAP1_IMM = frozenset({0x70, 0x71, 0x72, 0x73, 0xC2, 0xC4, 0xC5, 0xC6})


@dataclass
class _Layout:
    """Byte-level anatomy of one instruction, before semantic decoding."""

    length: int
    prefixes: bytes
    rex: int
    opmap: int  # 0 one-byte, 1 = 0F, 2 = 0F38, 3 = 0F3A
    opcode: int
    opcode_offset: int
    modrm_offset: int | None
    imm_offset: int | None
    imm_size: int
    vex: bool = False


def _modrm_extra(data: bytes, pos: int, vaddr: int) -> int:
    """Bytes taken by ModRM + SIB + displacement starting at ``pos``."""
    if pos >= len(data):
        raise UndecodableLength(vaddr, "truncated before ModRM")
    modrm = data[pos]
    mod, rm = modrm >> 6, modrm & 7
    size = 1
    if mod == 3:
        return size
    if rm == 4:
        if pos + 1 >= len(data):
            raise UndecodableLength(vaddr, "truncated before SIB")
        sib = data[pos + 1]
        size += 1
        if mod == 0 and (sib & 7) == 5:
            size += 4
    elif mod == 0 and rm == 5:
        size += 4  # RIP-relative disp32
    if mod == 1:
        size += 1
    elif mod == 2:
        size += 4
    return size


def _layout(data: bytes, vaddr: int) -> _Layout:
    n = len(data)
    pos = 0
    prefixes = bytearray()
    rex = 0
    while pos < n and pos < MAX_INSN_LEN:
        b = data[pos]
        if b in LEGACY_PREFIXES:
            prefixes.append(b)
            rex = 0  # a REX not immediately before the opcode is ignored
            pos += 1
        elif 0x40 <= b <= 0x4F:
            rex = b
            pos += 1
        else:
            break
    if pos >= n:
        raise UndecodableLength(vaddr, "truncated in prefixes")
    opsize16 = 0x66 in prefixes
    addr32 = 0x67 in prefixes
    rex_w = bool(rex & 0x08)

    op = data[pos]
    if op in (0xC4, 0xC5, 0x62):
        if op == 0xC5:
            if pos + 1 >= n:
                raise UndecodableLength(vaddr, "truncated VEX")
            opmap = 1
            pos += 2
        elif op == 0xC4:
            if pos + 2 >= n:
                raise UndecodableLength(vaddr, "truncated VEX")
            opmap = data[pos + 1] & 0x1F
            pos += 3
        else:
            if pos + 3 >= n:
                raise UndecodableLength(vaddr, "truncated EVEX")
            opmap = data[pos + 1] & 0x07
            pos += 4
        if opmap not in (1, 2, 3):
            raise UndecodableLength(vaddr, f"unsupported VEX map {opmap}")
        if pos >= n:
            raise UndecodableLength(vaddr, "truncated VEX opcode")
        opcode = data[pos]
        opcode_offset = pos
        pos += 1
        if opmap == 1 and opcode == 0x77 and op != 0x62:
            modrm_offset = None  # vzeroupper / vzeroall
        else:
            modrm_offset = pos
            pos += _modrm_extra(data, pos, vaddr)
        imm_size = 1 if opmap == 3 or (opmap == 1 and opcode in _VEX_MAP1_IMM) else 0
        imm_offset = pos if imm_size else None
        pos += imm_size
        return _finish(data, vaddr, pos, _Layout(pos, bytes(prefixes), rex, opmap, opcode,
                                                  opcode_offset, modrm_offset, imm_offset,
                                                  imm_size, vex=True))

    opcode_offset = pos
    if op == 0x0F:
        pos += 1
        if pos >= n:
            raise UndecodableLength(vaddr, "truncated two-byte opcode")
        op2 = data[pos]
        if op2 in (0x38, 0x3A):
            pos += 1
            if pos >= n:
                raise UndecodableLength(vaddr, "truncated three-byte opcode")
            opmap = 2 if op2 == 0x38 else 3
            opcode = data[pos]
            pos += 1
            modrm_offset = pos
            pos += _modrm_extra(data, pos, vaddr)
            imm_size = 1 if opmap == 3 else 0
        else:
            opmap = 1
            opcode = op2
            entry = _TWO_BYTE[op2]
            if entry is None:
                raise UndecodableLength(vaddr, f"invalid opcode 0f {op2:02x}")
            has_modrm, code = entry
            pos += 1
            modrm_offset = pos if has_modrm else None
            if has_modrm:
                pos += _modrm_extra(data, pos, vaddr)
            imm_size = {"": 0, "b": 1, "d": 4}[code]
        imm_offset = pos if imm_size else None
        pos += imm_size
        return _finish(data, vaddr, pos, _Layout(pos, bytes(prefixes), rex, opmap, opcode,
                                                  opcode_offset, modrm_offset, imm_offset,
                                                  imm_size))

    entry = _ONE_BYTE.get(op, _INVALID)
    if entry is None:
        raise UndecodableLength(vaddr, f"invalid opcode {op:02x} in 64-bit mode")
    has_modrm, code = entry
    pos += 1
    modrm_offset = pos if has_modrm else None
    if has_modrm:
        pos += _modrm_extra(data, pos, vaddr)
    z = 2 if (opsize16 and not rex_w) else 4
    if code == "":
        imm_size = 0
    elif code == "b":
        imm_size = 1
    elif code == "w":
        imm_size = 2
    elif code == "z":
        imm_size = z
    elif code == "d":
        imm_size = 4
    elif code == "v":
        imm_size = 8 if rex_w else z
    elif code == "e":
        imm_size = 3
    elif code == "m":
        imm_size = 4 if addr32 else 8
    else:  # group 3: only TEST (/0, /1) has an immediate
        reg = (data[modrm_offset] >> 3) & 7
        imm_size = 0 if reg > 1 else (1 if code == "g3b" else z)
    imm_offset = pos if imm_size else None
    pos += imm_size
    return _finish(data, vaddr, pos, _Layout(pos, bytes(prefixes), rex, 0, op, opcode_offset,
                                              modrm_offset, imm_offset, imm_size))


def _finish(data: bytes, vaddr: int, pos: int, lay: _Layout) -> _Layout:
    if pos > MAX_INSN_LEN:
        raise UndecodableLength(vaddr, f"instruction longer than {MAX_INSN_LEN} bytes")
    if pos > len(data):
        raise UndecodableLength(vaddr, "truncated instruction")
    return lay


def _signed(raw: bytes) -> int:
    return int.from_bytes(raw, "little", signed=True)


def decode(data: bytes, vaddr: int = 0) -> Instruction:
    """Decode the instruction at the start of ``data`` located at ``vaddr``."""
    if not data:
        raise UndecodableLength(vaddr, "no bytes")
    data = bytes(data[:MAX_INSN_LEN])
    lay = _layout(data, vaddr)
    raw = data[:lay.length]
    kind, mnemonic, cond, rel, imm = _semantics(raw, lay)
    insn = Instruction(
        vaddr=vaddr,
        raw=raw,
        kind=kind,
        mnemonic=mnemonic,
        imm=imm,
        cond=cond,
        rel=rel,
        opcode_offset=lay.opcode_offset,
        modrm_offset=lay.modrm_offset,
    )
    cls = classify(insn)
    if cls is not None:
        insn = Instruction(**{**insn.__dict__, "operator_class": cls})
    return insn


_ARITH_MNEMONICS = frozenset({"add", "sub", "adc", "sbb", "mul", "imul", "div", "idiv", "inc", "dec"})
_LOGIC_MNEMONICS = frozenset({"and", "or", "xor", "shl", "shr", "sar", "not", "neg"})


def classify(insn: Instruction) -> OperatorClass | None:
    """Primary operator class of a decoded instruction.

    CMP/TEST forms only qualify through their immediate (Constant); MOV and
    PUSH immediates are Constant-only as well.
    """
    kind = insn.kind
    if kind in (InstKind.OPAQUE, InstKind.JMP_REL):
        return None
    if kind in (InstKind.JCC8, InstKind.JCC32, InstKind.SETCC):
        return OperatorClass.CONDITIONAL
    if kind in (InstKind.IMUL_IMM, InstKind.IMUL_RM, InstKind.INC_DEC):
        return OperatorClass.ARITHMETIC
    if insn.mnemonic in _ARITH_MNEMONICS:
        return OperatorClass.ARITHMETIC
    if insn.mnemonic in _LOGIC_MNEMONICS:
        return OperatorClass.LOGICAL
    if insn.imm is not None:
        return OperatorClass.CONSTANT
    return None


def _semantics(raw: bytes, lay: _Layout):
    opaque = (InstKind.OPAQUE, _opaque_name(raw, lay), None, None, None)
    if lay.vex:
        return opaque
    op = lay.opcode
    reg = (raw[lay.modrm_offset] >> 3) & 7 if lay.modrm_offset is not None else None
    mod3 = lay.modrm_offset is not None and raw[lay.modrm_offset] >> 6 == 3
    imm_raw = raw[lay.imm_offset:lay.imm_offset + lay.imm_size] if lay.imm_offset is not None else b""
    rex_w = bool(lay.rex & 0x08)
    opsize16 = 0x66 in lay.prefixes

    def slot(sign_extended: bool) -> ImmediateSlot:
        return ImmediateSlot(_signed(imm_raw), lay.imm_size, lay.imm_offset, sign_extended)

    if lay.opmap == 1:
        if 0x80 <= op <= 0x8F:
            return InstKind.JCC32, "j" + ConditionCode(op & 0xF).name.lower(), \
                ConditionCode(op & 0xF), _signed(imm_raw), None
        if 0x90 <= op <= 0x9F:
            return InstKind.SETCC, "set" + ConditionCode(op & 0xF).name.lower(), \
                ConditionCode(op & 0xF), None, None
        if op == 0xAF:
            return InstKind.IMUL_RM, "imul", None, None, None
        return opaque
    if lay.opmap != 0:
        return opaque

    wide_ext = rex_w  # 32-bit immediates sign-extend to 64-bit operands
    if op < 0x40 and (op & 7) < 4:
        return InstKind.ALU_RM, ALU_OPS[op >> 3], None, None, None
    if op < 0x40 and (op & 7) in (4, 5):
        return InstKind.ALU_IMM, ALU_OPS[op >> 3], None, None, slot(op & 7 == 5 and wide_ext)
    if op in (0x80, 0x81, 0x83):
        return InstKind.ALU_IMM, ALU_OPS[reg], None, None, slot(op == 0x83 or (op == 0x81 and wide_ext))
    if op in (0xA8, 0xA9):
        return InstKind.ALU_IMM, "test", None, None, slot(op == 0xA9 and wide_ext)
    if op in (0xF6, 0xF7):
        imm = slot(op == 0xF7 and wide_ext) if lay.imm_size else None
        return InstKind.MUL_DIV, GROUP3_OPS[reg], None, None, imm
    if op in (0xC0, 0xC1, 0xD0, 0xD1, 0xD2, 0xD3):
        if reg not in SHIFT_OPS:
            return opaque
        imm = slot(False) if lay.imm_size else None
        return InstKind.SHIFT, SHIFT_OPS[reg], None, None, imm
    if op in (0xFE, 0xFF) and reg in (0, 1):
        return InstKind.INC_DEC, ("inc", "dec")[reg], None, None, None
    if 0x70 <= op <= 0x7F:
        cc = ConditionCode(op & 0xF)
        return InstKind.JCC8, "j" + cc.name.lower(), cc, _signed(imm_raw), None
    if op in (0xEB, 0xE9):
        return InstKind.JMP_REL, "jmp", None, _signed(imm_raw), None
    if 0xB0 <= op <= 0xBF:
        return InstKind.MOV_IMM, "mov", None, None, slot(False)
    if op in (0xC6, 0xC7) and reg == 0 and not (mod3 and raw[lay.modrm_offset] == 0xF8):
        return InstKind.MOV_IMM, "mov", None, None, slot(op == 0xC7 and wide_ext)
    if op in (0x68, 0x6A):
        return InstKind.PUSH_IMM, "push", None, None, slot(op == 0x6A or not opsize16)
    if op in (0x69, 0x6B):
        return InstKind.IMUL_IMM, "imul", None, None, slot(op == 0x6B or wide_ext)
    return opaque


def _opaque_name(raw: bytes, lay: _Layout) -> str:
    if lay.opmap == 0 and lay.opcode == 0x90 and not (lay.rex & 1) and 0xF3 not in lay.prefixes:
        return "nop"
    if lay.opmap == 1 and lay.opcode == 0x1F:
        return "nop"
    if lay.opmap == 1 and lay.opcode == 0x1E and raw[-1] in (0xFA, 0xFB) and 0xF3 in lay.prefixes:
        return "endbr64" if raw[-1] == 0xFA else "endbr32"
    if lay.opmap == 0 and lay.opcode in (0xC3, 0xC2):
        return "ret"
    if lay.opmap == 0 and lay.opcode == 0xE8:
        return "call"
    return ""


def sweep(code: bytes, vaddr: int) -> Iterator[Instruction]:
    """Linear sweep over ``code``; raises UndecodableLength on the first failure."""
    pos = 0
    view = memoryview(code)
    while pos < len(code):
        insn = decode(bytes(view[pos:pos + MAX_INSN_LEN]), vaddr + pos)
        yield insn
        pos += insn.length
