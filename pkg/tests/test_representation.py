import json

import numpy as np
import pytest

from gomsr.representation import (
    MultiTreeGenotype,
    SamplerParams,
    active_mask,
    count_nodes,
    count_operator,
    dedup_size,
    expand,
    expression_size,
    genotype_from_json,
    genotype_to_json,
    initialize_population,
    local_active_masks,
    make_space,
    reuse_report,
    sample_genotype,
    sample_tree,
    template_layout,
    to_expanded_infix,
    to_modular_infix,
    to_sexpr,
)

from conftest import random_genotype


def build_genotype(space, trees: dict[int, tuple]) -> MultiTreeGenotype:
    """Construct a genotype from nested tuples:
    ("op", left, right|None), ("x", i), ("c", v), ("arg", s),
    ("call", callee, left, right). Unset slots stay introns (op code 0)."""
    ab = space.alphabet
    layout = space.layout
    codes = np.zeros((space.n_trees, space.tree_size), dtype=np.int64)
    consts = np.zeros((space.n_trees, space.tree_size))

    def place(t, pos, node):
        if node is None:
            return
        head = node[0]
        if head == "x":
            codes[t, pos] = ab.feature_code(node[1])
        elif head == "c":
            codes[t, pos] = ab.const_code
            consts[t, pos] = node[1]
        elif head == "arg":
            codes[t, pos] = ab.arg_code(node[1])
        elif head == "call":
            codes[t, pos] = ab.call_code(node[1])
            place(t, layout.left[pos], node[2])
            place(t, layout.right[pos], node[3])
        else:
            codes[t, pos] = ab.op_code(head)
            children = node[1:]
            if len(children) >= 1:
                place(t, layout.left[pos], children[0])
            if len(children) == 2:
                place(t, layout.right[pos], children[1])

    for t, node in trees.items():
        place(t, 0, node)
    return MultiTreeGenotype(codes, consts)


class TestTemplateLayout:
    def test_height_one(self):
        lay = template_layout(1)
        assert lay.size == 3
        assert lay.children(0) == (1, 2)

    def test_height_four_has_31_nodes(self):
        assert template_layout(4).size == 31

    def test_height_two_root_children(self):
        # left subtree of the root spans indices 1-3, so the right child is 4
        assert template_layout(2).children(0) == (1, 4)

    def test_parent_depth_consistency(self):
        lay = template_layout(3)
        for i in range(lay.size):
            for child in lay.children(i):
                if child >= 0:
                    assert lay.parent[child] == i
                    assert lay.depth[child] == lay.depth[i] + 1


class TestSampling:
    def test_full_fills_internals_with_functions(self, rng):
        space = make_space(4, 1, 3)
        params = SamplerParams()
        for _ in range(20):
            codes, _ = sample_tree(space, "full", 0, params, rng)
            for pos in range(space.tree_size):
                if space.layout.depth[pos] < 4:
                    assert space.alphabet.arity(int(codes[pos])) >= 1

    def test_grow_terminal_at_root_gives_one_active_node(self, rng):
        space = make_space(3, 1, 3)
        params = SamplerParams(terminal_probability=1.0)  # force a terminal immediately
        g = sample_genotype(space, "grow", params, rng)
        assert active_mask(space, g).sum() == 1

    def test_grow_root_terminal_frequency(self):
        space = make_space(3, 1, 3)
        params = SamplerParams()
        rng = np.random.default_rng(99)
        hits = 0
        for _ in range(10_000):
            codes, _ = sample_tree(space, "grow", 0, params, rng)
            hits += space.alphabet.arity(int(codes[0])) == 0
        assert 0.48 <= hits / 10_000 <= 0.52

    def test_population_split_and_call_legality(self, rng):
        space = make_space(3, 4, 3)
        pop = initialize_population(space, 10, SamplerParams(), rng)
        assert len(pop) == 10
        ab = space.alphabet
        full_count = 0
        for g in pop:
            internals_all_functions = all(
                ab.arity(int(g.codes[t, p])) >= 1
                for t in range(4)
                for p in range(space.tree_size)
                if space.layout.depth[p] < 3
            )
            full_count += internals_all_functions
            for t in range(4):
                for p in range(space.tree_size):
                    code = int(g.codes[t, p])
                    if ab.kind(code) == "call":
                        assert ab.callee_index(code) < t
                    if ab.kind(code) == "arg":
                        assert t < 3
        assert full_count == 5  # grow samples at h=3 are virtually never all-function

    def test_population_size_validation(self, rng):
        with pytest.raises(ValueError):
            initialize_population(make_space(2, 1, 1), 0, SamplerParams(), rng)


class TestActiveMask:
    def test_feature_root_only(self, small_space):
        g = build_genotype(small_space, {2: ("x", 0)})
        assert active_mask(small_space, g).sum() == 1

    def test_unary_uses_left_child_only(self, small_space):
        g = build_genotype(small_space, {2: ("sin", ("x", 0))})
        mask = active_mask(small_space, g)
        assert mask.sum() == 2
        assert mask[2, 0] and mask[2, 1]

    def test_call_activates_callee(self, small_space):
        g = build_genotype(small_space, {0: ("add", ("x", 0), ("x", 1)), 2: ("call", 0, ("c", 1.0), ("c", 2.0))})
        mask = active_mask(small_space, g)
        assert mask[0, [0, 1, 4]].all()  # callee's active nodes
        assert mask[2, 0]
        # the callee consumes no args, so the call's children are introns
        assert not mask[2, 1] and not mask[2, 4]

    def test_call_child_active_per_arg_usage(self, small_space):
        g = build_genotype(
            small_space,
            {0: ("add", ("arg", 1), ("arg", 1)), 2: ("call", 0, ("x", 0), ("x", 1))},
        )
        mask = active_mask(small_space, g)
        assert not mask[2, 1]  # arg0 unused
        assert mask[2, 4]  # arg1 bound to x1

    def test_uncalled_trees_are_inactive(self, small_space):
        g = build_genotype(small_space, {0: ("add", ("x", 0), ("x", 1)), 2: ("x", 2)})
        mask = active_mask(small_space, g)
        assert mask.sum() == 1

    def test_parent_arity_invariant_on_random_genotypes(self, rng):
        space = make_space(3, 3, 4)
        for _ in range(50):
            g = random_genotype(space, rng, scrambles=3)
            mask = active_mask(space, g)
            local = local_active_masks(space, g)
            ab, lay = space.alphabet, space.layout
            for t in range(space.n_trees):
                for p in np.flatnonzero(mask[t]):
                    parent = lay.parent[p]
                    if parent < 0:
                        continue
                    assert mask[t, parent], "active node with inactive parent"
                    pcode = int(g.codes[t, parent])
                    if ab.kind(pcode) == "op" and ab.arity(pcode) == 1:
                        assert p == lay.left[parent]


class TestExpandAndSize:
    def test_no_calls_matches_active_subtree(self, small_space):
        g = build_genotype(small_space, {2: ("add", ("x", 0), ("c", 2.5))})
        assert expand(small_space, g) == ("op", "add", (("feat", 0), ("const", 2.5)))

    def test_arg_substitution(self, small_space):
        # top calls t0 with children x1 and the constant 9; t0 = arg0 + arg1
        g = build_genotype(
            small_space,
            {0: ("add", ("arg", 0), ("arg", 1)), 2: ("call", 0, ("x", 1), ("c", 9.0))},
        )
        assert expand(small_space, g) == ("op", "add", (("feat", 1), ("const", 9.0)))

    def test_size_examples(self, small_space):
        assert expression_size(small_space, build_genotype(small_space, {2: ("x", 0)})) == 1
        assert expression_size(small_space, build_genotype(small_space, {2: ("add", ("x", 0), ("c", 1.0))})) == 3

    def test_repeated_call_counts_size_via_expansion(self, small_space):
        # top tree calls a size-3 subexpression twice with single-leaf args
        g = build_genotype(
            small_space,
            {
                0: ("add", ("arg", 0), ("c", 1.0)),
                2: ("add", ("call", 0, ("x", 0), None), ("call", 0, ("x", 1), None)),
            },
        )
        expansion = expand(small_space, g)
        assert count_nodes(expansion) == 7
        assert expression_size(small_space, g) == 7

    def test_size_equals_expansion_count_on_random_genotypes(self, rng):
        space = make_space(3, 4, 4)
        for _ in range(300):
            g = random_genotype(space, rng, scrambles=2)
            assert expression_size(space, g) == count_nodes(expand(space, g))

    def test_cos_count_equals_expansion_scan(self, rng):
        space = make_space(3, 4, 4)

        def count_cos(node):
            if node[0] != "op":
                return 0
            return (node[1] == "cos") + sum(count_cos(c) for c in node[2])

        for _ in range(300):
            g = random_genotype(space, rng, scrambles=2)
            assert count_operator(space, g, "cos") == count_cos(expand(space, g))


def oracle_dedup(expansion) -> int:
    """Subtree-serialization oracle for the de-duplicated size."""

    def serialize(node):
        if node[0] == "op":
            return f"({node[1]} {' '.join(serialize(c) for c in node[2])})"
        return repr(node)

    seen = set()
    total = 0
    dup = 0

    def walk(node):
        nonlocal total, dup
        total += 1
        if node[0] == "op" and node[2]:
            key = serialize(node)
            if key in seen:
                dup += 1
            else:
                seen.add(key)
            for c in node[2]:
                walk(c)

    walk(expansion)
    return total - dup


class TestDedupSize:
    def test_no_duplicates(self, small_space):
        g = build_genotype(small_space, {2: ("add", ("x", 0), ("c", 1.0))})
        assert dedup_size(small_space, g) == 3

    def test_repeated_sum(self, small_space):
        g = build_genotype(
            small_space,
            {2: ("add", ("add", ("x", 0), ("x", 1)), ("add", ("x", 0), ("x", 1)))},
        )
        assert expression_size(small_space, g) == 7
        assert dedup_size(small_space, g) == 6

    def test_nested_sin_differs(self, small_space):
        g = build_genotype(small_space, {2: ("sin", ("sin", ("x", 0)))})
        assert dedup_size(small_space, g) == 3

    def test_constants_compare_by_exact_value(self, small_space):
        same = build_genotype(
            small_space, {2: ("add", ("sin", ("c", 1.0)), ("sin", ("c", 1.0)))}
        )
        diff = build_genotype(
            small_space, {2: ("add", ("sin", ("c", 1.0)), ("sin", ("c", 1.0000001)))}
        )
        assert dedup_size(small_space, same) == 4  # one sin subtree repeated
        assert dedup_size(small_space, diff) == 5

    def test_matches_oracle_on_random_genotypes(self, rng):
        space = make_space(3, 3, 3)
        for _ in range(200):
            g = random_genotype(space, rng, scrambles=2)
            assert dedup_size(space, g) == oracle_dedup(expand(space, g))
            assert dedup_size(space, g) <= expression_size(space, g)
            assert expression_size(space, g) >= 1


class TestReuseReport:
    def test_no_calls(self, small_space):
        g = build_genotype(small_space, {2: ("add", ("x", 0), ("x", 1))})
        rep = reuse_report(small_space, g)
        assert (rep.uses, rep.reuses, rep.functional_reuses) == (0, 0, 0)

    def test_single_call_of_arg_free_tree(self, small_space):
        g = build_genotype(
            small_space, {0: ("add", ("x", 0), ("x", 1)), 2: ("call", 0, None, None)}
        )
        rep = reuse_report(small_space, g)
        assert (rep.uses, rep.reuses, rep.functional_reuses) == (1, 0, 0)

    def test_reference_reuse_configuration(self, small_space):
        # t2 calls t1 twice; t1 calls t0 twice with a bound argument; t0
        # consumes arg0. Expanding: t1 instantiated twice, t0 four times ->
        # 6 uses, (2-1)+(4-1) = 4 re-uses, 3 of them functional (t0 only,
        # since t1 consumes no arguments and its call children are introns).
        g = build_genotype(
            small_space,
            {
                0: ("sin", ("arg", 0)),
                1: ("add", ("call", 0, ("x", 0), None), ("call", 0, ("x", 1), None)),
                2: ("add", ("call", 1, None, None), ("call", 1, None, None)),
            },
        )
        rep = reuse_report(small_space, g)
        assert (rep.uses, rep.reuses, rep.functional_reuses) == (6, 4, 3)
        mask = active_mask(small_space, g)
        # t1's call sites in t2 sit at slots 1 and 4; their children stay introns
        assert not mask[2, [2, 3, 5, 6]].any()


class TestExport:
    def test_modular_infix(self, small_space):
        g = build_genotype(
            small_space,
            {0: ("sin", ("arg", 0)), 2: ("add", ("call", 0, ("x", 1), None), ("c", 2.0))},
        )
        text = to_modular_infix(small_space, g)
        assert text == "f0(a) = sin(a); y = (f0(x1) + 2.0)"

    def test_expanded_infix_and_sexpr(self, small_space):
        g = build_genotype(
            small_space,
            {0: ("sin", ("arg", 0)), 2: ("add", ("call", 0, ("x", 1), None), ("c", 2.0))},
        )
        assert to_expanded_infix(small_space, g) == "(sin(x1) + 2.0)"
        assert to_sexpr(small_space, g) == "(add (sin x1) 2.0)"

    def test_json_roundtrip(self, rng):
        space = make_space(3, 3, 4)
        for _ in range(20):
            g = random_genotype(space, rng, scrambles=1)
            doc = genotype_to_json(space, g)
            back = genotype_from_json(space, doc)
            assert back.equals(g)
            json.loads(doc)  # stays valid JSON
