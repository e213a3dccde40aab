"""Flattens a genotype's active structure into postfix programs.

A program is the expansion written as a linear postfix sequence, except
that argument-free callee trees are compiled once into registers and
referenced, so repeated calls stay cheap. Argument-consuming callees are
inlined at each call site with the bound child subtrees substituted for
their arg leaves, exactly matching the expansion semantics.

Falls back (ProgramTooLarge) when heavy re-use makes the flattened
expansion explode; the caller then uses the recursive numpy evaluator.
"""

from __future__ import annotations

from array import array

import numpy as np

from . import fastkernels as fk
from .primitives import OPERATORS
from .representation import (
    KIND_ARG,
    KIND_CALL,
    KIND_CONST,
    KIND_FEATURE,
    KIND_OP,
    MultiTreeGenotype,
    SearchSpace,
)

_CANONICAL_INDEX = {name: i for i, name in enumerate(OPERATORS)}

PROGRAM_LIMIT = 20_000


class ProgramTooLarge(Exception):
    pass


_KIND_IDS = {KIND_OP: fk.K_OP, KIND_CONST: fk.K_CONST, KIND_FEATURE: fk.K_FEATURE, KIND_ARG: fk.K_ARG, KIND_CALL: fk.K_CALL}


class SpaceTables:
    """Per-space arrays consumed by the kernels."""

    def __init__(self, space: SearchSpace):
        ab = space.alphabet
        self.lefts = space.layout.left.astype(np.int64)
        self.rights = space.layout.right.astype(np.int64)
        self.kind_ids = np.array([_KIND_IDS[k] for k in ab.kind_table], dtype=np.int64)
        self.arity = np.array(ab.arity_table, dtype=np.int64)
        self.payload = np.array(ab.payload_table, dtype=np.int64)
        self.canonical_op = [_CANONICAL_INDEX[name] for name in ab.function_set]
        self.kind_list = ab.kind_table
        self.left_list = self.lefts.tolist()
        self.right_list = self.rights.tolist()
        self.payload_list = ab.payload_table
        self.arity_list = ab.arity_table


class _Program:
    __slots__ = ("ops", "ipay", "fpay", "depth", "cur")

    def __init__(self):
        self.ops = array("q")
        self.ipay = array("q")
        self.fpay = array("d")
        self.depth = 0
        self.cur = 0

    def push(self, op: int, ipay: int = 0, fpay: float = 0.0):
        self.ops.append(op)
        self.ipay.append(ipay)
        self.fpay.append(fpay)
        self.cur += 1
        if self.cur > self.depth:
            self.depth = self.cur

    def apply(self, op: int, arity: int):
        self.ops.append(op)
        self.ipay.append(0)
        self.fpay.append(0.0)
        self.cur -= arity - 1

    def arrays(self):
        return (
            np.frombuffer(self.ops, dtype=np.int64),
            np.frombuffer(self.ipay, dtype=np.int64),
            np.frombuffer(self.fpay),
        )


def emit_programs(space: SearchSpace, g: MultiTreeGenotype, arg_used):
    """(register programs in dependency order, main program)."""
    tables = space_tables(space)
    codes = [row.tolist() for row in g.codes]
    consts = g.consts
    kind_list = tables.kind_list
    payload = tables.payload_list
    lefts, rights = tables.left_list, tables.right_list
    canonical = tables.canonical_op
    arity = tables.arity_list

    reg_of: dict[int, int] = {}
    reg_programs: list[_Program] = []
    budget = [PROGRAM_LIMIT]

    # bindings are (tree, pos, b0, b1) tuples emitted lazily at arg leaves
    def emit(prog: _Program, t: int, pos: int, b0, b1):
        if budget[0] <= 0:
            raise ProgramTooLarge
        budget[0] -= 1
        code = codes[t][pos]
        kind = kind_list[code]
        if kind == KIND_FEATURE:
            prog.push(fk.LOAD_FEATURE, ipay=payload[code])
            return
        if kind == KIND_CONST:
            prog.push(fk.LOAD_CONST, fpay=consts[t, pos])
            return
        if kind == KIND_ARG:
            binding = b0 if payload[code] == 0 else b1
            if binding is None:
                prog.push(fk.PUSH_NAN)
            else:
                emit(prog, binding[0], binding[1], binding[2], binding[3])
            return
        left = lefts[pos]
        if left < 0:
            prog.push(fk.PUSH_NAN)
            return
        if kind == KIND_OP:
            emit(prog, t, left, b0, b1)
            if arity[code] == 2:
                emit(prog, t, rights[pos], b0, b1)
            prog.apply(canonical[code], arity[code])
            return
        callee = payload[code]
        used = arg_used[callee]
        if not used[0] and not used[1]:
            if callee not in reg_of:
                sub = _Program()
                emit(sub, callee, 0, None, None)
                reg_of[callee] = len(reg_programs)
                reg_programs.append(sub)
            prog.push(fk.LOAD_REG, ipay=reg_of[callee])
            return
        nb0 = (t, left, b0, b1) if used[0] else None
        nb1 = (t, rights[pos], b0, b1) if used[1] else None
        emit(prog, callee, 0, nb0, nb1)

    main = _Program()
    emit(main, g.n_trees - 1, 0, None, None)
    return reg_programs, main


def space_tables(space: SearchSpace) -> SpaceTables:
    tables = getattr(space, "_kernel_tables", None)
    if tables is None:
        tables = SpaceTables(space)
        object.__setattr__(space, "_kernel_tables", tables)  # frozen dataclass, cached lazily
    return tables


class FastEvaluator:
    """Reusable buffers + kernel dispatch for one (space, dataset)."""

    def __init__(self, space: SearchSpace, features: np.ndarray):
        self.space = space
        self.features = np.ascontiguousarray(features)
        self.n = features.shape[0]
        self.tables = space_tables(space)
        self._stack = np.empty((8, self.n))
        self._regs = np.empty((max(1, space.n_trees), self.n))

    def analyze(self, g: MultiTreeGenotype, counted_code: int):
        t = self.tables
        codes = g.codes if g.codes.dtype == np.int64 else g.codes.astype(np.int64)
        arg_used, forms = fk.analyze_kernel(
            codes, t.lefts, t.rights, t.kind_ids, t.arity, t.payload, counted_code
        )
        return arg_used, int(round(forms[-1, 0])), int(round(forms[-1, 3]))

    def predict(self, g: MultiTreeGenotype, arg_used) -> np.ndarray:
        regs, main = emit_programs(self.space, g, arg_used)
        depth = max([main.depth] + [p.depth for p in regs])
        if depth > self._stack.shape[0]:
            self._stack = np.empty((depth + 4, self.n))
        for r, prog in enumerate(regs):
            ops, ipay, fpay = prog.arrays()
            fk.run_program(ops, ipay, fpay, self.features, self._regs, self._stack, self._regs[r])
        out = np.empty(self.n)
        ops, ipay, fpay = main.arrays()
        fk.run_program(ops, ipay, fpay, self.features, self._regs, self._stack, out)
        return out
