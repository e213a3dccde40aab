"""Fixed-template multi-tree genotypes.

An individual is M perfect binary trees of height h, each stored as a flat
string of L = 2^(h+1) - 1 symbol slots indexed by pre-order traversal.
Later trees may call earlier trees as two-argument subexpressions; a call
node's children bind to the callee's arg0/arg1 leaves. Slots that are not
reachable from a root through arity-limited children are introns: they are
carried along (and recombined) but do not affect the expression.

Symbols are encoded as small integers (one shared code space across trees)
with a parallel float array holding constant values. The integer code is
also the category used for mutual-information estimation: all constants
share one code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .primitives import INFIX_SYMBOLS, OPERATORS, validate_function_set


# ---------------------------------------------------------------------------
# template layout


@dataclass(frozen=True)
class TemplateLayout:
    """Index maps for the pre-order string encoding of a perfect binary tree."""

    height: int
    size: int
    depth: np.ndarray
    parent: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def children(self, index: int) -> tuple[int, int]:
        return int(self.left[index]), int(self.right[index])


@lru_cache(maxsize=None)
def template_layout(height: int) -> TemplateLayout:
    if height < 0:
        raise ValueError("template height must be >= 0")
    size = 2 ** (height + 1) - 1
    depth = np.full(size, -1, dtype=np.int32)
    parent = np.full(size, -1, dtype=np.int32)
    left = np.full(size, -1, dtype=np.int32)
    right = np.full(size, -1, dtype=np.int32)

    def fill(index: int, d: int) -> None:
        depth[index] = d
        if d == height:
            return
        lo = index + 1
        hi = index + 2 ** (height - d)
        left[index] = lo
        right[index] = hi
        parent[lo] = index
        parent[hi] = index
        fill(lo, d + 1)
        fill(hi, d + 1)

    fill(0, 0)
    for a in (depth, parent, left, right):
        a.setflags(write=False)
    return TemplateLayout(height, size, depth, parent, left, right)


# ---------------------------------------------------------------------------
# symbol codes

KIND_OP = "op"
KIND_CONST = "const"
KIND_FEATURE = "feature"
KIND_ARG = "arg"
KIND_CALL = "call"


@dataclass(frozen=True)
class Alphabet:
    """Integer code space for the symbols available to a multi-tree individual.

    Codes: [0, n_ops) operators in function-set order, then one shared
    constant code, then one code per input feature, then arg0/arg1, then one
    code per callable tree (0 .. n_trees-2). Per-code lookup tables are
    precomputed; the walks over genotypes are hot paths.
    """

    function_set: tuple[str, ...]
    n_features: int
    n_trees: int

    def __post_init__(self):
        kinds, arities, payloads = [], [], []
        for code in range(self.call_base + max(0, self.n_trees - 1)):
            if code < len(self.function_set):
                kinds.append(KIND_OP)
                arities.append(OPERATORS[self.function_set[code]].arity)
                payloads.append(code)
            elif code == self.const_code:
                kinds.append(KIND_CONST)
                arities.append(0)
                payloads.append(-1)
            elif code < self.arg_base:
                kinds.append(KIND_FEATURE)
                arities.append(0)
                payloads.append(code - self.feature_base)
            elif code < self.call_base:
                kinds.append(KIND_ARG)
                arities.append(0)
                payloads.append(code - self.arg_base)
            else:
                kinds.append(KIND_CALL)
                arities.append(2)
                payloads.append(code - self.call_base)
        object.__setattr__(self, "kind_table", tuple(kinds))
        object.__setattr__(self, "arity_table", tuple(arities))
        object.__setattr__(self, "payload_table", tuple(payloads))

    @property
    def n_ops(self) -> int:
        return len(self.function_set)

    @property
    def const_code(self) -> int:
        return self.n_ops

    @property
    def feature_base(self) -> int:
        return self.n_ops + 1

    @property
    def arg_base(self) -> int:
        return self.feature_base + self.n_features

    @property
    def call_base(self) -> int:
        return self.arg_base + 2

    @property
    def n_codes(self) -> int:
        return self.call_base + max(0, self.n_trees - 1)

    def op_code(self, name: str) -> int:
        return self.function_set.index(name)

    def feature_code(self, index: int) -> int:
        return self.feature_base + index

    def arg_code(self, slot: int) -> int:
        return self.arg_base + slot

    def call_code(self, callee: int) -> int:
        return self.call_base + callee

    def kind(self, code: int) -> str:
        return self.kind_table[code]

    def op_name(self, code: int) -> str:
        return self.function_set[code]

    def feature_index(self, code: int) -> int:
        return code - self.feature_base

    def arg_slot(self, code: int) -> int:
        return code - self.arg_base

    def callee_index(self, code: int) -> int:
        return code - self.call_base

    def arity(self, code: int) -> int:
        return self.arity_table[code]


@dataclass(frozen=True)
class SearchSpace:
    """Template shape plus alphabet; shared, read-only context for all genotype ops."""

    layout: TemplateLayout
    alphabet: Alphabet

    @property
    def height(self) -> int:
        return self.layout.height

    @property
    def tree_size(self) -> int:
        return self.layout.size

    @property
    def n_trees(self) -> int:
        return self.alphabet.n_trees

    @property
    def capacity(self) -> int:
        """Total symbol slots across all trees (used as the default size normalizer)."""
        return self.n_trees * self.tree_size


def make_space(height: int, n_trees: int, n_features: int, function_set=None) -> SearchSpace:
    if n_trees < 1:
        raise ValueError("need at least one tree")
    if n_features < 1:
        raise ValueError("need at least one input feature")
    function_set = validate_function_set(function_set or ("add", "sub", "mul", "div", "sin", "cos", "log", "sqrt"))
    return SearchSpace(template_layout(height), Alphabet(function_set, n_features, n_trees))


# ---------------------------------------------------------------------------
# genotype


@dataclass
class MultiTreeGenotype:
    """M trees as (M, L) arrays: integer symbol codes plus constant values.

    consts[t, p] is meaningful only where codes[t, p] is the constant code.
    """

    codes: np.ndarray
    consts: np.ndarray

    @property
    def n_trees(self) -> int:
        return self.codes.shape[0]

    @property
    def tree_size(self) -> int:
        return self.codes.shape[1]

    def copy(self) -> "MultiTreeGenotype":
        return MultiTreeGenotype(self.codes.copy(), self.consts.copy())

    def equals(self, other: "MultiTreeGenotype") -> bool:
        return np.array_equal(self.codes, other.codes) and np.array_equal(self.consts, other.consts)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SamplerParams:
    """Initialization probabilities and the coefficient sampling range."""

    terminal_probability: float = 0.5
    coefficient_probability: float = 0.5
    const_low: float = 0.0
    const_high: float = 1.0


def _draw_function(space: SearchSpace, tree_index: int, rng) -> int:
    # "subexpression" counts as one entry of the function set; the callee is
    # then drawn uniformly among the preceding trees
    ab = space.alphabet
    n_choices = ab.n_ops + (1 if tree_index > 0 else 0)
    pick = int(rng.integers(n_choices))
    if pick < ab.n_ops:
        return pick
    return ab.call_code(int(rng.integers(tree_index)))


def _draw_terminal(space: SearchSpace, tree_index: int, params: SamplerParams, rng):
    ab = space.alphabet
    if rng.random() < params.coefficient_probability:
        return ab.const_code, float(rng.uniform(params.const_low, params.const_high))
    last = tree_index == space.n_trees - 1
    n_choices = ab.n_features + (0 if last else 2)
    pick = int(rng.integers(n_choices))
    if pick < ab.n_features:
        return ab.feature_code(pick), 0.0
    return ab.arg_code(pick - ab.n_features), 0.0


def sample_tree(space: SearchSpace, method: str, tree_index: int, params: SamplerParams, rng):
    """Sample one tree's (codes, consts) rows with the grow or full method.

    Slots not used by the sampled expression are filled with introns drawn
    uniformly from the operator set.
    """
    if method not in ("grow", "full"):
        raise ValueError(f"unknown sampling method {method!r}")
    layout = space.layout
    ab = space.alphabet
    codes = rng.integers(ab.n_ops, size=layout.size).astype(np.int64)
    consts = np.zeros(layout.size)

    def fill(pos: int) -> None:
        d = layout.depth[pos]
        if d == layout.height:
            code, value = _draw_terminal(space, tree_index, params, rng)
        elif method == "grow" and rng.random() < params.terminal_probability:
            code, value = _draw_terminal(space, tree_index, params, rng)
        else:
            code, value = _draw_function(space, tree_index, rng), 0.0
        codes[pos] = code
        consts[pos] = value
        arity = ab.arity(code)
        if arity >= 1:
            fill(layout.left[pos])
        if arity == 2:
            fill(layout.right[pos])

    fill(0)
    return codes, consts


def sample_genotype(space: SearchSpace, method: str, params: SamplerParams, rng) -> MultiTreeGenotype:
    codes = np.empty((space.n_trees, space.tree_size), dtype=np.int64)
    consts = np.empty((space.n_trees, space.tree_size))
    for t in range(space.n_trees):
        codes[t], consts[t] = sample_tree(space, method, t, params, rng)
    return MultiTreeGenotype(codes, consts)


def initialize_population(space: SearchSpace, n: int, params: SamplerParams, rng) -> list[MultiTreeGenotype]:
    """Half-and-half initialization: the first half full, the rest grow."""
    if n < 1:
        raise ValueError("population size must be >= 1")
    n_full = n // 2
    return [sample_genotype(space, "full" if i < n_full else "grow", params, rng) for i in range(n)]


# ---------------------------------------------------------------------------
# activity analysis


def local_active_masks(space: SearchSpace, g: MultiTreeGenotype) -> np.ndarray:
    """Per-tree reachability from that tree's own root.

    A call node's child is active only when the callee actually consumes the
    corresponding argument (has an active arg node for that slot); a call to
    an argument-free tree therefore leaves both its children as introns.
    """
    ab = space.alphabet
    kind_table, arity_table, payload = ab.kind_table, ab.arity_table, ab.payload_table
    lefts, rights = space.layout.left.tolist(), space.layout.right.tolist()
    m, size = g.codes.shape
    mask = np.zeros((m, size), dtype=bool)
    arg_used = [[False, False] for _ in range(m)]

    for t in range(m):  # callees precede callers, so their arg usage is known
        codes = g.codes[t].tolist()
        row = mask[t]
        used = arg_used[t]
        stack = [0]
        while stack:
            pos = stack.pop()
            row[pos] = True
            code = codes[pos]
            kind = kind_table[code]
            if kind == KIND_ARG:
                used[payload[code]] = True
                continue
            left = lefts[pos]
            if left < 0:
                continue  # template leaf: any function symbol here is unevaluable
            if kind == KIND_OP:
                arity = arity_table[code]
                if arity >= 1:
                    stack.append(left)
                if arity == 2:
                    stack.append(rights[pos])
            elif kind == KIND_CALL:
                callee = payload[code]
                if arg_used[callee][0]:
                    stack.append(left)
                if arg_used[callee][1]:
                    stack.append(rights[pos])
    return mask


def arg_usage(space: SearchSpace, g: MultiTreeGenotype) -> np.ndarray:
    """(M, 2) flags: does tree t actively consume arg0/arg1."""
    return np.array(analyze_structure(space, g).arg_used, dtype=bool)


def _called_trees(space: SearchSpace, g: MultiTreeGenotype, local: np.ndarray) -> np.ndarray:
    """Trees whose output the last tree (transitively) depends on."""
    ab = space.alphabet
    used = np.zeros(g.n_trees, dtype=bool)
    stack = [g.n_trees - 1]
    while stack:
        t = stack.pop()
        if used[t]:
            continue
        used[t] = True
        for pos in np.flatnonzero(local[t]):
            code = int(g.codes[t, pos])
            if ab.kind(code) == KIND_CALL:
                stack.append(ab.callee_index(code))
    return used


def active_mask(space: SearchSpace, g: MultiTreeGenotype) -> np.ndarray:
    """(M, L) flags: does a slot contribute to the top-level expression's output."""
    local = local_active_masks(space, g)
    used = _called_trees(space, g, local)
    local[~used] = False
    return local


# ---------------------------------------------------------------------------
# expansion and structural metrics

# expansion nodes are nested tuples:
#   ("op", name, (children...))   -- () children marks an unevaluable
#                                    function symbol stranded on a leaf slot
#   ("feat", index)
#   ("const", value)


def expand(space: SearchSpace, g: MultiTreeGenotype, _counter: dict | None = None) -> tuple:
    """The top-level expression with every subexpression call inlined.

    Arg leaves of a callee are replaced by the call's bound child subtrees;
    only active nodes appear. `_counter`, when given, accumulates the number
    of call instantiations per callee tree.
    """
    layout = space.layout
    ab = space.alphabet
    arg_used = arg_usage(space, g)

    def build(t: int, pos: int, bindings) -> tuple:
        code = int(g.codes[t, pos])
        kind = ab.kind(code)
        if kind == KIND_CONST:
            return ("const", float(g.consts[t, pos]))
        if kind == KIND_FEATURE:
            return ("feat", ab.feature_index(code))
        if kind == KIND_ARG:
            bound = bindings[ab.arg_slot(code)]
            if bound is None:
                raise ValueError("unbound argument node in expansion")
            return bound
        left, right = layout.children(pos)
        if left < 0:
            return ("op", ab.op_name(code) if kind == KIND_OP else f"call{ab.callee_index(code)}", ())
        if kind == KIND_OP:
            arity = ab.arity(code)
            if arity == 1:
                return ("op", ab.op_name(code), (build(t, left, bindings),))
            return ("op", ab.op_name(code), (build(t, left, bindings), build(t, right, bindings)))
        callee = ab.callee_index(code)
        if _counter is not None:
            _counter[callee] = _counter.get(callee, 0) + 1
        b0 = build(t, left, bindings) if arg_used[callee, 0] else None
        b1 = build(t, right, bindings) if arg_used[callee, 1] else None
        return build(callee, 0, (b0, b1))

    return build(g.n_trees - 1, 0, (None, None))


def count_nodes(tree: tuple) -> int:
    if tree[0] == "op":
        return 1 + sum(count_nodes(c) for c in tree[2])
    return 1


@dataclass
class StructureInfo:
    """One-pass structural summary of a genotype.

    `arg_used[t]` flags whether tree t actively consumes arg0/arg1; `size` is
    the expanded expression's node count and `op_count` the occurrences of
    the requested operator in the expansion. Both metrics are linear in the
    sizes substituted for arg0/arg1, so a single bottom-up pass per tree
    (callees first) covers arbitrarily nested subexpression calls.
    """

    arg_used: list[list[bool]]
    size: int
    op_count: int


def analyze_structure(space: SearchSpace, g: MultiTreeGenotype, count_op: str | None = None) -> StructureInfo:
    ab = space.alphabet
    kind_table, arity_table, payload = ab.kind_table, ab.arity_table, ab.payload_table
    counted = -1 if count_op is None else ab.function_set.index(count_op)
    lefts, rights = space.layout.left.tolist(), space.layout.right.tolist()
    m = g.n_trees
    arg_used = [[False, False] for _ in range(m)]
    # per tree: (size_base, size_a0, size_a1, cnt_base, cnt_a0, cnt_a1)
    forms: list[tuple] = []

    def form(t: int, pos: int, codes) -> tuple:
        code = codes[pos]
        kind = kind_table[code]
        if kind == KIND_CONST or kind == KIND_FEATURE:
            return (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        if kind == KIND_ARG:
            slot = payload[code]
            arg_used[t][slot] = True
            if slot == 0:
                return (0.0, 1.0, 0.0, 0.0, 1.0, 0.0)
            return (0.0, 0.0, 1.0, 0.0, 0.0, 1.0)
        left = lefts[pos]
        hit = 1.0 if code == counted else 0.0
        if left < 0:  # stranded function symbol: a single unevaluable node
            return (1.0, 0.0, 0.0, hit, 0.0, 0.0)
        if kind == KIND_OP:
            s, s0, s1, c, c0, c1 = form(t, left, codes)
            if arity_table[code] == 2:
                rs, rs0, rs1, rc, rc0, rc1 = form(t, rights[pos], codes)
                s, s0, s1, c, c0, c1 = s + rs, s0 + rs0, s1 + rs1, c + rc, c0 + rc0, c1 + rc1
            return (s + 1.0, s0, s1, c + hit, c0, c1)
        callee = payload[code]
        ks, k0, k1, kc, kc0, kc1 = forms[callee]
        used = arg_used[callee]
        if used[0]:
            ls, ls0, ls1, lc, lc0, lc1 = form(t, left, codes)
        else:
            ls = ls0 = ls1 = lc = lc0 = lc1 = 0.0
        if used[1]:
            rs, rs0, rs1, rc, rc0, rc1 = form(t, rights[pos], codes)
        else:
            rs = rs0 = rs1 = rc = rc0 = rc1 = 0.0
        return (
            ks + k0 * ls + k1 * rs,
            k0 * ls0 + k1 * rs0,
            k0 * ls1 + k1 * rs1,
            kc + kc0 * lc + kc1 * rc,
            kc0 * lc0 + kc1 * rc0,
            kc0 * lc1 + kc1 * rc1,
        )

    for t in range(m):
        forms.append(form(t, 0, g.codes[t].tolist()))
    top = forms[m - 1]
    return StructureInfo(arg_used, int(round(top[0])), int(round(top[3])))


def expression_size(space: SearchSpace, g: MultiTreeGenotype) -> int:
    """Node count of the expanded expression, without building the expansion."""
    return analyze_structure(space, g).size


def count_operator(space: SearchSpace, g: MultiTreeGenotype, op_name: str) -> int:
    """Occurrences of one operator in the expanded expression."""
    return analyze_structure(space, g, count_op=op_name).op_count


def dedup_size(space: SearchSpace, g: MultiTreeGenotype) -> int:
    """Expansion size minus repeated non-leaf subtrees.

    Walking the expansion in pre-order, every non-leaf node whose rooted
    subtree is structurally identical to an already-visited non-leaf subtree
    is subtracted once. Leaf repeats are never subtracted, and constants
    compare equal only on exact value equality.
    """
    expansion = expand(space, g)
    seen: set = set()
    total = 0
    duplicates = 0
    stack = [expansion]
    order = []
    while stack:
        node = stack.pop()
        order.append(node)
        if node[0] == "op":
            stack.extend(reversed(node[2]))
    for node in order:
        total += 1
        if node[0] == "op" and node[2]:
            if node in seen:
                duplicates += 1
            else:
                seen.add(node)
    return total - duplicates


@dataclass(frozen=True)
class ReuseReport:
    """Counts of subexpression call instantiations in the expanded expression."""

    uses: int
    reuses: int
    functional_reuses: int


def reuse_report(space: SearchSpace, g: MultiTreeGenotype) -> ReuseReport:
    """Use/re-use statistics of subexpression trees.

    `uses` counts call instantiations in the transitive expansion; each tree
    called more than once contributes calls-1 re-uses, which count as
    functional only when the callee consumes at least one argument (so its
    instantiations can produce different values).
    """
    ab = space.alphabet
    local = local_active_masks(space, g)
    used_args = arg_usage(space, g)

    tallies: list[dict[int, int]] = []
    for t in range(g.n_trees):
        tally: dict[int, int] = {}
        for pos in np.flatnonzero(local[t]):
            code = int(g.codes[t, pos])
            if ab.kind(code) != KIND_CALL or space.layout.left[pos] < 0:
                continue
            callee = ab.callee_index(code)
            tally[callee] = tally.get(callee, 0) + 1
            for sub, n in tallies[callee].items():
                tally[sub] = tally.get(sub, 0) + n
        tallies.append(tally)

    top = tallies[g.n_trees - 1]
    uses = sum(top.values())
    reuses = sum(max(0, n - 1) for n in top.values())
    functional = sum(max(0, n - 1) for t, n in top.items() if used_args[t].any())
    return ReuseReport(uses, reuses, functional)


# ---------------------------------------------------------------------------
# text export


def _format_const(v: float) -> str:
    return repr(round(v, 12)) if v == v else "nan"


def _infix(node: tuple) -> str:
    kind = node[0]
    if kind == "feat":
        return f"x{node[1]}"
    if kind == "const":
        return _format_const(node[1])
    name, children = node[1], node[2]
    if not children:
        return f"{name}(?)"
    if name in INFIX_SYMBOLS and len(children) == 2:
        return f"({_infix(children[0])} {INFIX_SYMBOLS[name]} {_infix(children[1])})"
    return f"{name}({', '.join(_infix(c) for c in children)})"


def to_expanded_infix(space: SearchSpace, g: MultiTreeGenotype) -> str:
    """Fully expanded parenthesized infix text."""
    return _infix(expand(space, g))


def to_sexpr(space: SearchSpace, g: MultiTreeGenotype) -> str:
    """S-expression text of the expanded expression."""

    def render(node: tuple) -> str:
        if node[0] == "feat":
            return f"x{node[1]}"
        if node[0] == "const":
            return _format_const(node[1])
        if not node[2]:
            return f"({node[1]})"
        return f"({node[1]} {' '.join(render(c) for c in node[2])})"

    return render(expand(space, g))


def to_modular_infix(space: SearchSpace, g: MultiTreeGenotype) -> str:
    """Infix text with calls rendered as named functions f0..f{M-2}.

    Emits one definition per tree the result depends on, then the top-level
    expression, joined by "; ".
    """
    layout = space.layout
    ab = space.alphabet
    local = local_active_masks(space, g)
    used_trees = _called_trees(space, g, local)
    used_args = arg_usage(space, g)

    def render(t: int, pos: int) -> str:
        code = int(g.codes[t, pos])
        kind = ab.kind(code)
        if kind == KIND_CONST:
            return _format_const(float(g.consts[t, pos]))
        if kind == KIND_FEATURE:
            return f"x{ab.feature_index(code)}"
        if kind == KIND_ARG:
            return "a" if ab.arg_slot(code) == 0 else "b"
        left, right = layout.children(pos)
        if left < 0:
            name = ab.op_name(code) if kind == KIND_OP else f"f{ab.callee_index(code)}"
            return f"{name}(?)"
        if kind == KIND_OP:
            name = ab.op_name(code)
            if ab.arity(code) == 1:
                return f"{name}({render(t, left)})"
            if name in INFIX_SYMBOLS:
                return f"({render(t, left)} {INFIX_SYMBOLS[name]} {render(t, right)})"
            return f"{name}({render(t, left)}, {render(t, right)})"
        callee = ab.callee_index(code)
        args = []
        if used_args[callee, 0]:
            args.append(render(t, left))
        if used_args[callee, 1]:
            args.append(render(t, right))
        return f"f{callee}({', '.join(args)})"

    parts = []
    for t in range(g.n_trees - 1):
        if used_trees[t]:
            params = [name for slot, name in enumerate(("a", "b")) if used_args[t, slot]]
            parts.append(f"f{t}({', '.join(params)}) = {render(t, 0)}")
    parts.append(f"y = {render(g.n_trees - 1, 0)}")
    return "; ".join(parts)


# ---------------------------------------------------------------------------
# JSON serialization


def _symbol_to_tag(ab: Alphabet, code: int, const: float) -> str:
    kind = ab.kind(code)
    if kind == KIND_OP:
        return ab.op_name(code)
    if kind == KIND_CONST:
        return f"c:{const!r}"
    if kind == KIND_FEATURE:
        return f"x{ab.feature_index(code)}"
    if kind == KIND_ARG:
        return f"arg{ab.arg_slot(code)}"
    return f"call:{ab.callee_index(code)}"


def _tag_to_symbol(ab: Alphabet, tag: str) -> tuple[int, float]:
    if tag.startswith("c:"):
        return ab.const_code, float(tag[2:])
    if tag.startswith("call:"):
        return ab.call_code(int(tag[5:])), 0.0
    if tag.startswith("arg"):
        return ab.arg_code(int(tag[3:])), 0.0
    if tag.startswith("x") and tag[1:].isdigit():
        return ab.feature_code(int(tag[1:])), 0.0
    return ab.op_code(tag), 0.0


def genotype_to_json(space: SearchSpace, g: MultiTreeGenotype) -> str:
    ab = space.alphabet
    trees = [
        [_symbol_to_tag(ab, int(g.codes[t, p]), float(g.consts[t, p])) for p in range(g.tree_size)]
        for t in range(g.n_trees)
    ]
    return json.dumps({"height": space.height, "trees": trees})


def genotype_from_json(space: SearchSpace, text: str) -> MultiTreeGenotype:
    doc = json.loads(text)
    if doc["height"] != space.height:
        raise ValueError("genotype height does not match the search space")
    trees = doc["trees"]
    if len(trees) != space.n_trees:
        raise ValueError("tree count does not match the search space")
    codes = np.empty((space.n_trees, space.tree_size), dtype=np.int64)
    consts = np.zeros((space.n_trees, space.tree_size))
    for t, tags in enumerate(trees):
        for p, tag in enumerate(tags):
            codes[t, p], consts[t, p] = _tag_to_symbol(space.alphabet, tag)
    return MultiTreeGenotype(codes, consts)
