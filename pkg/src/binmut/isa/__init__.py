"""x86-64 decoding, operator classification and same-length re-encoding."""

from .decoder import (
    ConditionCode,
    ImmediateSlot,
    InstKind,
    Instruction,
    OperatorClass,
    UndecodableLength,
    classify,
    decode,
    sweep,
)
from .encode import (
    ARITH_TARGETS,
    LOGIC_TARGETS,
    NoImmediate,
    NotABranch,
    classes_of,
    encode_force_jump,
    encode_nop,
    encode_swap,
    patch_immediate,
)

__all__ = [
    "ARITH_TARGETS",
    "LOGIC_TARGETS",
    "ConditionCode",
    "ImmediateSlot",
    "InstKind",
    "Instruction",
    "NoImmediate",
    "NotABranch",
    "OperatorClass",
    "UndecodableLength",
    "classes_of",
    "classify",
    "decode",
    "encode_force_jump",
    "encode_nop",
    "encode_swap",
    "patch_immediate",
    "sweep",
]
