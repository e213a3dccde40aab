"""Numba kernels for the evaluation hot path.

The genotype walk stays in Python; these kernels execute the flattened
postfix programs over all samples, compute regression statistics in one
pass, and run the structural analysis. Protected-arithmetic semantics
mirror `primitives` exactly (eps 1e-12: division and inversion fall back
to 1, log to 0, sqrt takes |x|).
"""

from __future__ import annotations

import numpy as np
from numba import njit

# canonical operator ids, kept in sync with primitives.OPERATORS order
OP_ADD, OP_SUB, OP_MUL, OP_DIV = 0, 1, 2, 3
OP_SIN, OP_COS, OP_LOG, OP_SQRT = 4, 5, 6, 7
OP_EXP, OP_NEG, OP_ABS, OP_SQUARE = 8, 9, 10, 11
OP_CUBE, OP_INV, OP_MIN, OP_MAX = 12, 13, 14, 15

LOAD_FEATURE = 16
LOAD_CONST = 17
LOAD_REG = 18
PUSH_NAN = 19

EPS = 1e-12

# kind ids for the analysis kernel
K_OP, K_CONST, K_FEATURE, K_ARG, K_CALL = 0, 1, 2, 3, 4


@njit(cache=True)
def run_program(ops, ipay, fpay, features, regs, stack, out):
    """Execute one postfix program; the result lands in `out`."""
    n = out.shape[0]
    sp = 0
    for k in range(ops.shape[0]):
        op = ops[k]
        if op == LOAD_FEATURE:
            col = ipay[k]
            for i in range(n):
                stack[sp, i] = features[i, col]
            sp += 1
        elif op == LOAD_CONST:
            v = fpay[k]
            for i in range(n):
                stack[sp, i] = v
            sp += 1
        elif op == LOAD_REG:
            r = ipay[k]
            for i in range(n):
                stack[sp, i] = regs[r, i]
            sp += 1
        elif op == PUSH_NAN:
            for i in range(n):
                stack[sp, i] = np.nan
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            for i in range(n):
                stack[sp - 1, i] = stack[sp - 1, i] + stack[sp, i]
        elif op == OP_SUB:
            sp -= 1
            for i in range(n):
                stack[sp - 1, i] = stack[sp - 1, i] - stack[sp, i]
        elif op == OP_MUL:
            sp -= 1
            for i in range(n):
                stack[sp - 1, i] = stack[sp - 1, i] * stack[sp, i]
        elif op == OP_DIV:
            sp -= 1
            for i in range(n):
                y = stack[sp, i]
                stack[sp - 1, i] = stack[sp - 1, i] / y if abs(y) > EPS else 1.0
        elif op == OP_SIN:
            for i in range(n):
                stack[sp - 1, i] = np.sin(stack[sp - 1, i])
        elif op == OP_COS:
            for i in range(n):
                stack[sp - 1, i] = np.cos(stack[sp - 1, i])
        elif op == OP_LOG:
            for i in range(n):
                x = stack[sp - 1, i]
                stack[sp - 1, i] = np.log(abs(x)) if abs(x) > EPS else 0.0
        elif op == OP_SQRT:
            for i in range(n):
                stack[sp - 1, i] = np.sqrt(abs(stack[sp - 1, i]))
        elif op == OP_EXP:
            for i in range(n):
                stack[sp - 1, i] = np.exp(stack[sp - 1, i])
        elif op == OP_NEG:
            for i in range(n):
                stack[sp - 1, i] = -stack[sp - 1, i]
        elif op == OP_ABS:
            for i in range(n):
                stack[sp - 1, i] = abs(stack[sp - 1, i])
        elif op == OP_SQUARE:
            for i in range(n):
                x = stack[sp - 1, i]
                stack[sp - 1, i] = x * x
        elif op == OP_CUBE:
            for i in range(n):
                x = stack[sp - 1, i]
                stack[sp - 1, i] = x * x * x
        elif op == OP_INV:
            for i in range(n):
                x = stack[sp - 1, i]
                stack[sp - 1, i] = 1.0 / x if abs(x) > EPS else 1.0
        elif op == OP_MIN:
            sp -= 1
            for i in range(n):
                stack[sp - 1, i] = min(stack[sp - 1, i], stack[sp, i])
        elif op == OP_MAX:
            sp -= 1
            for i in range(n):
                stack[sp - 1, i] = max(stack[sp - 1, i], stack[sp, i])
    for i in range(n):
        out[i] = stack[0, i]


@njit(cache=True)
def regression_stats(pred, target, t_mean, t_var, fit_ls):
    """(pred_finite, a, b, r2, max_error) in one pass family.

    Mirrors the two-pass least-squares fit: slope from centered moments,
    mean fallback for (near-)constant or non-finite-variance predictions.
    r2/max_error are NaN when the scaled residuals are not finite.
    """
    n = pred.shape[0]
    sp = 0.0
    for i in range(n):
        v = pred[i]
        if not np.isfinite(v):
            return False, 0.0, 1.0, np.nan, np.nan
        sp += v
    a = 0.0
    b = 1.0
    if fit_ls:
        mp = sp / n
        sxx = 0.0
        sxy = 0.0
        for i in range(n):
            d = pred[i] - mp
            sxx += d * d
            sxy += d * target[i]
        var = sxx / n
        if np.isfinite(var) and var >= EPS:
            b = (sxy / n) / var
            a = t_mean - b * mp
        else:
            a = t_mean
            b = 0.0
    mse = 0.0
    maxe = 0.0
    for i in range(n):
        r = a + b * pred[i] - target[i]
        if not np.isfinite(r):
            return True, a, b, np.nan, np.nan
        mse += r * r
        ae = abs(r)
        if ae > maxe:
            maxe = ae
    mse /= n
    if t_var >= EPS:
        r2 = 1.0 - mse / t_var
    elif mse < EPS:
        r2 = 1.0
    else:
        r2 = np.nan
    return True, a, b, r2, maxe


@njit(cache=True)
def analyze_kernel(codes, lefts, rights, kind_arr, arity_arr, payload_arr, counted):
    """Per-tree arg usage plus linear forms of expansion size and operator count.

    Returns (arg_used (M,2) uint8, forms (M,6)); forms rows hold
    (size_base, size_a0, size_a1, cnt_base, cnt_a0, cnt_a1) of the tree's
    root. Iterative postorder with an explicit frame stack; children of a
    call node are visited only for consumed argument slots.
    """
    m, size = codes.shape
    arg_used = np.zeros((m, 2), dtype=np.uint8)
    forms = np.zeros((m, 6))
    max_frames = 4 * size + 8
    fpos = np.empty(max_frames, dtype=np.int64)
    fstage = np.empty(max_frames, dtype=np.int64)
    vstack = np.empty((size + 2, 6))

    for t in range(m):
        fp = 0
        vp = 0
        fpos[0] = 0
        fstage[0] = 0
        fp = 1
        while fp > 0:
            fp -= 1
            pos = fpos[fp]
            stage = fstage[fp]
            code = codes[t, pos]
            kind = kind_arr[code]
            if stage == 0:
                if kind == K_CONST or kind == K_FEATURE:
                    vstack[vp, 0] = 1.0
                    vstack[vp, 1] = 0.0
                    vstack[vp, 2] = 0.0
                    vstack[vp, 3] = 0.0
                    vstack[vp, 4] = 0.0
                    vstack[vp, 5] = 0.0
                    vp += 1
                    continue
                if kind == K_ARG:
                    slot = payload_arr[code]
                    arg_used[t, slot] = 1
                    for j in range(6):
                        vstack[vp, j] = 0.0
                    if slot == 0:
                        vstack[vp, 1] = 1.0
                        vstack[vp, 4] = 1.0
                    else:
                        vstack[vp, 2] = 1.0
                        vstack[vp, 5] = 1.0
                    vp += 1
                    continue
                left = lefts[pos]
                if left < 0:  # stranded function symbol: one unevaluable node
                    vstack[vp, 0] = 1.0
                    vstack[vp, 1] = 0.0
                    vstack[vp, 2] = 0.0
                    vstack[vp, 3] = 1.0 if code == counted else 0.0
                    vstack[vp, 4] = 0.0
                    vstack[vp, 5] = 0.0
                    vp += 1
                    continue
                # children to visit
                if kind == K_OP:
                    n_children = arity_arr[code]
                    visit_left = True
                    visit_right = n_children == 2
                else:  # call
                    callee = payload_arr[code]
                    visit_left = arg_used[callee, 0] == 1
                    visit_right = arg_used[callee, 1] == 1
                    n_children = (1 if visit_left else 0) + (1 if visit_right else 0)
                fpos[fp] = pos
                fstage[fp] = 1
                fp += 1
                if visit_right:
                    fpos[fp] = rights[pos]
                    fstage[fp] = 0
                    fp += 1
                if visit_left:
                    fpos[fp] = left
                    fstage[fp] = 0
                    fp += 1
            else:
                # completion: pop this node's child results (left at the
                # deeper slot when both were visited)
                if kind == K_OP:
                    if arity_arr[code] == 2:
                        vp -= 2
                        s = vstack[vp, 0] + vstack[vp + 1, 0]
                        s0 = vstack[vp, 1] + vstack[vp + 1, 1]
                        s1 = vstack[vp, 2] + vstack[vp + 1, 2]
                        c = vstack[vp, 3] + vstack[vp + 1, 3]
                        c0 = vstack[vp, 4] + vstack[vp + 1, 4]
                        c1 = vstack[vp, 5] + vstack[vp + 1, 5]
                    else:
                        vp -= 1
                        s = vstack[vp, 0]
                        s0 = vstack[vp, 1]
                        s1 = vstack[vp, 2]
                        c = vstack[vp, 3]
                        c0 = vstack[vp, 4]
                        c1 = vstack[vp, 5]
                    vstack[vp, 0] = s + 1.0
                    vstack[vp, 1] = s0
                    vstack[vp, 2] = s1
                    vstack[vp, 3] = c + (1.0 if code == counted else 0.0)
                    vstack[vp, 4] = c0
                    vstack[vp, 5] = c1
                    vp += 1
                else:
                    callee = payload_arr[code]
                    u0 = arg_used[callee, 0] == 1
                    u1 = arg_used[callee, 1] == 1
                    ls = ls0 = ls1 = lc = lc0 = lc1 = 0.0
                    rs = rs0 = rs1 = rc = rc0 = rc1 = 0.0
                    if u0 and u1:
                        vp -= 2
                        ls, ls0, ls1 = vstack[vp, 0], vstack[vp, 1], vstack[vp, 2]
                        lc, lc0, lc1 = vstack[vp, 3], vstack[vp, 4], vstack[vp, 5]
                        rs, rs0, rs1 = vstack[vp + 1, 0], vstack[vp + 1, 1], vstack[vp + 1, 2]
                        rc, rc0, rc1 = vstack[vp + 1, 3], vstack[vp + 1, 4], vstack[vp + 1, 5]
                    elif u0:
                        vp -= 1
                        ls, ls0, ls1 = vstack[vp, 0], vstack[vp, 1], vstack[vp, 2]
                        lc, lc0, lc1 = vstack[vp, 3], vstack[vp, 4], vstack[vp, 5]
                    elif u1:
                        vp -= 1
                        rs, rs0, rs1 = vstack[vp, 0], vstack[vp, 1], vstack[vp, 2]
                        rc, rc0, rc1 = vstack[vp, 3], vstack[vp, 4], vstack[vp, 5]
                    ks, k0, k1 = forms[callee, 0], forms[callee, 1], forms[callee, 2]
                    kc, kc0, kc1 = forms[callee, 3], forms[callee, 4], forms[callee, 5]
                    vstack[vp, 0] = ks + k0 * ls + k1 * rs
                    vstack[vp, 1] = k0 * ls0 + k1 * rs0
                    vstack[vp, 2] = k0 * ls1 + k1 * rs1
                    vstack[vp, 3] = kc + kc0 * lc + kc1 * rc
                    vstack[vp, 4] = kc0 * lc0 + kc1 * rc0
                    vstack[vp, 5] = kc0 * lc1 + kc1 * rc1
                    vp += 1
        vp -= 1
        for j in range(6):
            forms[t, j] = vstack[vp, j]
    return arg_used, forms
