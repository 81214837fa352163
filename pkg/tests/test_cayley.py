import pytest

from monoidkit.words import EMPTY, parse_presentation, validate_special
from monoidkit.rewriting import knuth_bendix, normalize, orient_system
from monoidkit.special import compute_delta, normalize_special
from monoidkit.cayley import (
    CayleyError,
    cayley_ball,
    cayley_complex_chain,
    check_rooted_tree,
    check_unique_entrance,
    condensation_matches_hasse,
    hasse_prefix_tree,
    rooted_trees_isomorphic,
    scc_condense,
)
from monoidkit.homology import exactness_check


def w(s):
    return tuple(s)


def sp(text):
    return validate_special(parse_presentation(text))


BICYCLIC = sp("letters: a b\nrel: a b = 1")
INVOLUTION = sp("letters: a\nrel: a a = 1")
FREE = sp("letters: a b")


def solver_for(p):
    system = knuth_bendix(orient_system(p.base)).system
    return lambda word: normalize(system, word)


def ball_for(p, radius, margin=None):
    if margin is None:
        margin = max((len(r) for r in p.relators), default=0)
    return cayley_ball(solver_for(p), p.alphabet, radius, margin)


def test_ball_bicyclic_r2():
    g = ball_for(BICYCLIC, 2)
    labels = {"".join(l) for l in g.vertices}
    assert labels == {"", "a", "b", "aa", "ba", "bb"}


def test_ball_free_monoid_r1():
    g = ball_for(FREE, 1)
    assert len(g.vertices) == 3
    assert len(g.arcs) == 2


def test_ball_involution_r3():
    g = ball_for(INVOLUTION, 3)
    assert [list(l) for l in g.vertices] == [[], ["a"]]
    assert sorted(g.arcs) == [(0, 1, "a"), (1, 0, "a")]


def test_ball_vertex_count_bicyclic_r8():
    g = ball_for(BICYCLIC, 8)
    assert len(g.vertices) == 45  # normal forms b^i a^j with i + j <= 8


def test_arc_consistency():
    p = BICYCLIC
    solver = solver_for(p)
    g = ball_for(p, 4)
    for s, d, a in g.arcs:
        assert solver(g.vertices[s] + (a,)) == g.vertices[d]


def test_determinism():
    a = ball_for(BICYCLIC, 5)
    b = ball_for(BICYCLIC, 5)
    assert a.vertices == b.vertices and a.arcs == b.arcs
    assert a.to_json() == b.to_json()


def test_scc_free_monoid_all_singletons():
    g = ball_for(FREE, 3)
    rep = scc_condense(g)
    assert all(len(c) == 1 for c in rep.sccs)
    assert len(rep.dag_arcs) == len(g.arcs)


def test_scc_involution_single_component():
    g = ball_for(INVOLUTION, 3)
    rep = scc_condense(g)
    assert len(rep.sccs) == 1
    assert rep.dag_arcs == ()


def test_scc_bicyclic_levels():
    g = ball_for(BICYCLIC, 8)
    rep = scc_condense(g)
    # interior components are the b^i levels, a path of length 8
    interior = rep.interior_sccs()
    assert len(interior) == 8
    assert check_rooted_tree(rep).proven


def test_check_tree_free_monoid():
    rep = scc_condense(ball_for(FREE, 4))
    assert check_rooted_tree(rep).proven


def test_check_tree_too_small_unknown():
    rep = scc_condense(ball_for(INVOLUTION, 3))
    assert check_rooted_tree(rep).value == "unknown"


def test_grid_not_a_tree():
    # commutative monoid on two generators: normal forms a^i b^j form a grid
    p = parse_presentation("letters: a b\nrel: b a = a b")
    system = knuth_bendix(orient_system(p)).system
    g = cayley_ball(lambda word: normalize(system, word), p.alphabet, 4, 0)
    rep = scc_condense(g)
    assert check_rooted_tree(rep).refuted
    violations = check_unique_entrance(g, rep)
    assert any(v["kind"] == "entrance_count" for v in violations)
    # "ab" is entered from both "a" and "b"
    bad = [v for v in violations if v["count"] == 2]
    assert bad


def test_unique_entrance_bicyclic():
    ua = compute_delta(BICYCLIC)
    g = ball_for(BICYCLIC, 8)
    rep = scc_condense(g)
    assert check_unique_entrance(g, rep, ua) == []


def test_unique_entrance_free_monoid():
    g = ball_for(FREE, 3)
    rep = scc_condense(g)
    assert check_unique_entrance(g, rep) == []


def test_hasse_tree_bicyclic():
    ua = compute_delta(BICYCLIC)
    g = ball_for(BICYCLIC, 8)
    h = hasse_prefix_tree(ua, g)
    labels = ["".join(l) for l in h.vertices]
    assert labels == ["", "b", "bb", "bbb", "bbbb", "bbbbb", "bbbbbb"]
    # a path: each vertex except the root has exactly one parent
    assert len(h.arcs) == len(h.vertices) - 1


def test_condensation_matches_hasse_bicyclic():
    ua = compute_delta(BICYCLIC)
    g = ball_for(BICYCLIC, 8)
    rep = scc_condense(g)
    assert condensation_matches_hasse(ua, g, rep)


def test_hasse_tree_involution_single_node():
    ua = compute_delta(INVOLUTION)
    g = ball_for(INVOLUTION, 3)
    h = hasse_prefix_tree(ua, g)
    assert h.vertices == [EMPTY]


def test_rooted_tree_isomorphism():
    path = [(0, 1), (1, 2)]
    star = [(0, 1), (0, 2)]
    assert rooted_trees_isomorphic(path, 0, [(5, 3), (3, 7)], 5)
    assert not rooted_trees_isomorphic(path, 0, star, 0)


def test_chain_export_bicyclic():
    g = ball_for(BICYCLIC, 3)
    export = cayley_complex_chain(BICYCLIC, g)
    assert (export.boundary1 @ export.boundary2).is_zero()
    # cells sit at vertices whose ab-loop closes inside the ball
    assert len(export.cell_base_vertices) > 0
    assert (export.augmentation @ export.boundary1).is_zero()


def test_chain_export_involution():
    g = ball_for(INVOLUTION, 3)
    export = cayley_complex_chain(INVOLUTION, g)
    assert (export.boundary1 @ export.boundary2).is_zero()
    assert len(export.cell_base_vertices) == 2
    assert export.skipped == []


def test_chain_export_free_monoid_no_cells():
    g = ball_for(FREE, 2)
    export = cayley_complex_chain(FREE, g)
    assert export.boundary2.cols == 0


def test_chain_export_rejects_multi_relator():
    p = sp("letters: a b\nrel: a b = 1\nrel: b a = 1")
    g = cayley_ball(lambda word: word, p.alphabet, 1, 0)
    with pytest.raises(CayleyError):
        cayley_complex_chain(p, g)


def test_exactness_of_interior_complex_bicyclic():
    # restrict the complex to interior vertices so every cell and edge is
    # fully explored, then the augmented complex is exact in the middle
    g = ball_for(BICYCLIC, 6)
    export = cayley_complex_chain(BICYCLIC, g)
    rep = exactness_check([export.boundary2, export.boundary1],
                          augmentation=export.augmentation)
    assert rep["total_defect"] == 0
    assert rep["left_kernel_dim"] == 0  # relator primitive: complex contractible


def test_exactness_of_complex_involution():
    g = ball_for(INVOLUTION, 3)
    export = cayley_complex_chain(INVOLUTION, g)
    rep = exactness_check([export.boundary2, export.boundary1],
                          augmentation=export.augmentation)
    assert rep["total_defect"] == 0
    assert rep["left_kernel_dim"] == 1  # relator aa is a proper power


def test_dot_output():
    g = ball_for(INVOLUTION, 2)
    dot = g.to_dot()
    assert dot.startswith("digraph") and "v0 -> v1" in dot
