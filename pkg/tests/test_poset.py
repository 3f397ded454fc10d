import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arboreal.errors import CycleError, UnreachableError
from arboreal.poset import (
    Poset,
    add_root,
    close_relation,
    connected_components,
    incomparable_pairs,
    induced_subposet,
    is_arboreal,
    levels,
    poset_from_labeled_pairs,
    poset_from_relations,
    to_dot,
    transitive_reduction,
    violations,
)
from small_posets import TWO_MINIMA_COVERS, TWO_MINIMA_RELATION, LADDER_COVERS, two_minima, one_jump, label_arcs


def lab(p, *names):
    return [p.index(str(x)) for x in names]


def test_closure_adds_transitive_pair():
    p = poset_from_relations(3, [(0, 1), (1, 2)])
    assert p.leq(0, 2)
    assert p.root == 0


def test_two_cycle_rejected():
    with pytest.raises(CycleError) as info:
        poset_from_relations(2, [(0, 1), (1, 0)])
    assert set(info.value.witness) == {0, 1}


def test_out_of_range_pair():
    with pytest.raises(ValueError):
        poset_from_relations(2, [(0, 2)])


def test_two_minima_relation():
    p = two_minima()
    got = {(int(p.labels[x]), int(p.labels[y])) for x, y in p.pairs()}
    assert got == set(TWO_MINIMA_RELATION)
    # plus the 7 reflexive pairs
    assert p.num_pairs() + p.n == 21


def test_two_minima_reduction_is_hasse_diagram():
    p = two_minima()
    c = transitive_reduction(p)
    assert label_arcs(p, c.arcs) == set(TWO_MINIMA_COVERS)
    assert len(c.arcs) == 7


def test_chain_reduces_to_path():
    n = 6
    p = poset_from_relations(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
    assert transitive_reduction(p).arcs == tuple((i, i + 1) for i in range(n - 1))


def test_root_below_antichain():
    p = poset_from_labeled_pairs([("r", "a"), ("r", "b")])
    assert label_set(p, transitive_reduction(p).arcs) == {("r", "a"), ("r", "b")}


def label_set(p, arcs):
    return {(p.labels[x], p.labels[y]) for x, y in arcs}


def test_incomparable_pairs_two_minima():
    p = two_minima()
    pairs = {frozenset((p.labels[x], p.labels[y])) for x, y in incomparable_pairs(p)}
    assert frozenset(("4", "2")) in pairs
    assert frozenset(("1", "7")) not in pairs


def test_incomparable_pairs_chain():
    p = poset_from_relations(4, [(0, 1), (1, 2), (2, 3)])
    assert incomparable_pairs(p) == []


def test_two_minima_violations():
    # 4 is covered by 1 and 6, and 5 is covered by 2 and 4
    p = two_minima()
    rep = violations(transitive_reduction(p))
    assert sorted(p.labels[z] for z in rep.violators) == ["4", "5"]
    assert (rep.numvior, rep.numvion) == (2, 2)
    trip = {(p.labels[x], p.labels[y], p.labels[z]) for x, y, z in rep.violations}
    assert ("1", "6", "4") in trip


def test_violations_sorted_and_counted():
    # z covered by three elements gives C(3, 2) = 3 violations
    p = poset_from_labeled_pairs([("r", "a"), ("r", "b"), ("r", "c"), ("a", "z"), ("b", "z"), ("c", "z")])
    rep = violations(transitive_reduction(p))
    assert (rep.numvior, rep.numvion) == (1, 3)
    assert list(rep.violations) == sorted(rep.violations, key=lambda t: (t[2], t[0], t[1]))


def test_arborescence_has_no_violations():
    p = poset_from_labeled_pairs([("r", "a"), ("r", "b"), ("a", "c")])
    rep = violations(transitive_reduction(p))
    assert rep.numvior == rep.numvion == 0
    assert is_arboreal(p)


def test_is_arboreal_examples():
    assert is_arboreal(poset_from_relations(1, []))
    assert not is_arboreal(two_minima())
    ext = one_jump()
    assert ext.is_valid()
    assert is_arboreal(Poset(ext.le.copy(), ext.base.labels))


def test_add_root_two_chains():
    p = poset_from_labeled_pairs([("a", "b"), ("c", "d")])
    q, k = add_root(p)
    assert k == 2
    assert q.root == p.n and q.labels[q.root] == "r"
    new_arcs = [(x, y) for x, y in transitive_reduction(q).arcs if x == q.root]
    assert len(new_arcs) == 2


def test_add_root_on_rooted_is_identity():
    p = poset_from_labeled_pairs([("s", "a"), ("s", "b")])
    q, k = add_root(p)
    assert q is p and k == 1


def test_add_root_star_and_fresh_label():
    p = poset_from_labeled_pairs([], elements=["r", "x", "y"])
    q, k = add_root(p)
    assert k == 3
    assert q.labels[q.root] == "r_"
    assert all(len(ps) == 1 for ps in transitive_reduction(q).preds[:3])


def test_levels_path_and_star():
    p = poset_from_labeled_pairs([("r", "a"), ("a", "b")])
    lv = levels(transitive_reduction(p), p.root)
    assert lv[p.index("b")] == 2
    s = poset_from_labeled_pairs([("r", x) for x in "abcd"])
    lv = levels(transitive_reduction(s), s.root)
    assert sorted(lv) == [0, 1, 1, 1, 1]


def _longest_from(arcs, src, n):
    # independent longest-path by exhaustive DFS over all paths
    succ = {i: [] for i in range(n)}
    for x, y in arcs:
        succ[x].append(y)
    best = [-1] * n

    def walk(u, d):
        best[u] = max(best[u], d)
        for w in succ[u]:
            walk(w, d + 1)

    walk(src, 0)
    return best


def test_levels_ladder_with_extra_root():
    p = poset_from_labeled_pairs(LADDER_COVERS + [("0", "10"), ("0", "9")], elements=range(1, 11))
    c = transitive_reduction(p)
    root = p.index("0")
    lv = levels(c, root)
    assert lv[p.index("1")] == 6
    assert lv == _longest_from(c.arcs, root, p.n)


def test_levels_unreachable():
    p = two_minima()
    with pytest.raises(UnreachableError):
        levels(transitive_reduction(p), p.index("1"))


def test_induced_subposet_upper_part():
    p = two_minima()
    sub = induced_subposet(p, lab(p, 3, 4, 6, 7))
    got = {(sub.labels[x], sub.labels[y]) for x, y in sub.pairs()}
    assert got == {("6", "4"), ("6", "7"), ("4", "7")}
    assert sub.labels == ("3", "4", "6", "7")


def test_induced_subposet_full_and_empty():
    p = two_minima()
    assert induced_subposet(p, range(p.n)) == p
    assert induced_subposet(p, []).n == 0


def test_components_two_minima_and_two_chains():
    assert len(connected_components(transitive_reduction(two_minima()))) == 1
    p = poset_from_labeled_pairs([("a", "b"), ("c", "d")], elements=["e"])
    comps = connected_components(transitive_reduction(p))
    assert [[p.labels[i] for i in c] for c in comps] == [["e"], ["a", "b"], ["c", "d"]]


def test_dot_output():
    p, _ = add_root(two_minima())
    dot = to_dot(p, "two_minima")
    assert dot.startswith('digraph "two_minima"')
    assert dot.count("->") == len(transitive_reduction(p).arcs)
    assert "rank=same" in dot


@st.composite
def dags(draw, max_n=64):
    n = draw(st.integers(1, max_n))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n))
    return n, [(min(a, b), max(a, b)) for a, b in pairs if a != b]


@settings(max_examples=60, deadline=None)
@given(dags())
def test_reduction_between_input_and_closure(data):
    n, pairs = data
    p = poset_from_relations(n, pairs)
    arcs = set(transitive_reduction(p).arcs)
    inputs = set(pairs)
    assert arcs <= inputs
    assert all(p.le[x, y] for x, y in inputs)
    # re-closing the reduction gives the same order
    adj = np.zeros((n, n), dtype=bool)
    for x, y in arcs:
        adj[x, y] = True
    assert np.array_equal(close_relation(adj), p.le)
    # no 2-step path between the ends of a covering arc
    for x, y in arcs:
        assert not (p.strict()[x] & p.strict()[:, y]).any()


@settings(max_examples=60, deadline=None)
@given(dags(max_n=30))
def test_add_root_and_violation_counts(data):
    n, pairs = data
    p = poset_from_relations(n, pairs)
    q, k = add_root(p)
    if p.root is None:
        assert q.num_pairs() - p.num_pairs() == n
        assert q.root == n
    assert all(q.le[q.root])
    c = transitive_reduction(q)
    rep = violations(c)
    assert rep.numvion >= rep.numvior
    indeg = [len(ps) for ps in c.preds]
    assert (rep.numvion == rep.numvior) == all(d == 2 for d in indeg if d >= 2)
    lv = levels(c, q.root)
    assert all(lv[x] < lv[y] for x, y in c.arcs)
    assert all(lv[x] < lv[y] for x, y in q.pairs())
