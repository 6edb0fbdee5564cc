"""Same-length replacement encodings for the mutation operators."""

from __future__ import annotations

from .decoder import ALU_OPS, GROUP3_OPS, InstKind, Instruction, OperatorClass

NOP = 0x90

# catalog order; mutant ids depend on it
ARITH_TARGETS = ("add", "sub", "adc", "sbb", "mul", "imul", "div", "idiv", "inc", "dec")
LOGIC_TARGETS = ("and", "or", "xor", "shl", "shr", "sar", "not", "neg")

_ALU_INDEX = {name: i for i, name in enumerate(ALU_OPS) if name != "cmp"}
_GROUP3_INDEX = {name: i for i, name in enumerate(GROUP3_OPS) if i >= 2}
_SHIFT_INDEX = {"shl": 4, "shr": 5, "sar": 7}
_INCDEC_INDEX = {"inc": 0, "dec": 1}


class NotABranch(ValueError):
    pass


class NoImmediate(ValueError):
    pass


def _with_byte(raw: bytes, offset: int, value: int) -> bytes:
    buf = bytearray(raw)
    buf[offset] = value
    return bytes(buf)


def _with_reg(i: Instruction, reg: int) -> bytes:
    modrm = i.raw[i.modrm_offset]
    return _with_byte(i.raw, i.modrm_offset, (modrm & 0xC7) | (reg << 3))


def encode_swap(i: Instruction, target: str) -> bytes | None:
    """Re-encode ``i`` as operator ``target`` with identical operands.

    Returns None when no encoding of the same length exists, when ``target``
    is the instruction's own operator, or when the family has no swaps
    (CMP/TEST, IMUL with immediate or two operands).
    """
    if target == i.mnemonic:
        return None
    op = i.raw[i.opcode_offset]
    if i.kind == InstKind.ALU_RM:
        if i.mnemonic == "cmp" or target not in _ALU_INDEX:
            return None
        return _with_byte(i.raw, i.opcode_offset, (_ALU_INDEX[target] << 3) | (op & 7))
    if i.kind == InstKind.ALU_IMM:
        if i.mnemonic in ("cmp", "test") or target not in _ALU_INDEX:
            return None
        if op in (0x80, 0x81, 0x83):
            return _with_reg(i, _ALU_INDEX[target])
        return _with_byte(i.raw, i.opcode_offset, (_ALU_INDEX[target] << 3) | (op & 7))
    if i.kind == InstKind.MUL_DIV:
        if i.mnemonic == "test" or target not in _GROUP3_INDEX:
            return None
        return _with_reg(i, _GROUP3_INDEX[target])
    if i.kind == InstKind.SHIFT:
        if target not in _SHIFT_INDEX:
            return None
        return _with_reg(i, _SHIFT_INDEX[target])
    if i.kind == InstKind.INC_DEC:
        if target not in _INCDEC_INDEX:
            return None
        return _with_reg(i, _INCDEC_INDEX[target])
    return None


def encode_force_jump(i: Instruction) -> bytes:
    """Unconditional jump to the same absolute target, padded with NOPs after it."""
    if i.kind not in (InstKind.JCC8, InstKind.JCC32):
        raise NotABranch(f"{i} is not a conditional branch")
    target = i.branch_target
    length = i.length
    opcode, width = (0xEB, 1) if length < 5 else (0xE9, 4)
    disp = target - (i.vaddr + 1 + width)
    bound = 1 << (8 * width - 1)
    if not -bound <= disp < bound:
        raise NotABranch(f"{i}: no same-length unconditional encoding")
    out = bytes([opcode]) + disp.to_bytes(width, "little", signed=True)
    if length > len(out):
        out += encode_nop(length - len(out))
    return out


def encode_nop(n: int) -> bytes:
    if n < 1:
        raise ValueError(f"NOP fill needs at least one byte, got {n}")
    return bytes([NOP]) * n


def patch_immediate(i: Instruction, new_value: int) -> bytes | None:
    if i.imm is None:
        raise NoImmediate(f"{i} has no immediate operand")
    slot = i.imm
    if not slot.fits(new_value):
        return None
    buf = bytearray(i.raw)
    buf[slot.offset:slot.offset + slot.width] = new_value.to_bytes(slot.width, "little", signed=True)
    return bytes(buf)


def classes_of(i: Instruction) -> frozenset[OperatorClass]:
    """All operator classes that apply to ``i`` (Skip rides on the first three)."""
    if i.operator_class is None:
        return frozenset()
    out = {i.operator_class}
    if i.imm is not None:
        out.add(OperatorClass.CONSTANT)
    if i.operator_class in (OperatorClass.ARITHMETIC, OperatorClass.LOGICAL,
                            OperatorClass.CONDITIONAL):
        out.add(OperatorClass.SKIP)
    return frozenset(out)
