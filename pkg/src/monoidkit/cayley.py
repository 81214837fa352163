"""Bounded-radius right Cayley graphs: construction by BFS over normal
forms, strongly connected component condensation, rooted-tree and
unique-entrance checks, the transversal prefix tree, and the chain complex
of the relator-filled 2-complex.

Vertices are numbered by discovery order, which is determined by the
alphabet order, so identical inputs always produce identical graphs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .words import EMPTY, Alphabet, Word, format_word
from .rewriting import Verdict
from .homology import SparseIntMatrix


class CayleyError(Exception):
    pass


@dataclass
class LabeledDigraph:
    alphabet: Alphabet
    vertices: list          # vertex id -> label (a normal-form Word)
    arcs: list              # (src id, dst id, letter)
    interior: list          # vertex id -> bool
    depth: list             # vertex id -> BFS distance from the root
    radius: int
    margin: int

    def id_of(self, label: Word):
        return self._ids[label]

    def interior_ids(self):
        return [i for i, flag in enumerate(self.interior) if flag]

    def to_json(self):
        return {
            "radius": self.radius,
            "margin": self.margin,
            "vertices": [
                {"id": i, "label": format_word(l), "interior": self.interior[i]}
                for i, l in enumerate(self.vertices)
            ],
            "arcs": [
                {"src": s, "dst": d, "letter": a} for s, d, a in self.arcs
            ],
        }

    def to_dot(self):
        lines = ["digraph cayley {"]
        for i, label in enumerate(self.vertices):
            shape = "" if self.interior[i] else ", style=dashed"
            lines.append(f'  v{i} [label="{format_word(label)}"{shape}];')
        for s, d, a in self.arcs:
            lines.append(f'  v{s} -> v{d} [label="{a}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def cayley_ball(solver, alphabet: Alphabet, radius: int,
                margin: int = 0) -> LabeledDigraph:
    """BFS over right multiplication from the identity, radius levels.

    solver maps a word to its canonical normal form.  A vertex is interior
    iff its distance from the root is at most radius - margin; callers pass
    the maximum relator length as the margin so that facts about interior
    vertices cannot be spoiled by unexplored return paths.
    """
    root = solver(EMPTY)
    ids = {root: 0}
    vertices = [root]
    depth = [0]
    arcs = []
    queue = deque([0])
    while queue:
        v = queue.popleft()
        if depth[v] == radius:
            continue
        for a in alphabet.order:
            nf = solver(vertices[v] + (a,))
            if nf not in ids:
                ids[nf] = len(vertices)
                vertices.append(nf)
                depth.append(depth[v] + 1)
                queue.append(ids[nf])
            arcs.append((v, ids[nf], a))
    interior = [d <= radius - margin for d in depth]
    g = LabeledDigraph(alphabet, vertices, arcs, interior, depth,
                       radius, margin)
    g._ids = ids
    return g


@dataclass
class CondensationReport:
    sccs: tuple             # tuple of tuples of vertex ids
    dag_arcs: tuple         # (src scc, dst scc, letter), deduplicated
    root_scc: int
    partial_sccs: tuple     # scc indices containing a non-interior vertex
    is_tree: Verdict = None
    entrance_violations: list = field(default_factory=list)

    def interior_sccs(self):
        partial = set(self.partial_sccs)
        return [i for i in range(len(self.sccs)) if i not in partial]

    def to_json(self):
        out = {
            "sccs": [list(c) for c in self.sccs],
            "dag_arcs": [
                {"src": s, "dst": d, "letter": a} for s, d, a in self.dag_arcs
            ],
            "root_scc": self.root_scc,
            "partial_sccs": list(self.partial_sccs),
            "entrance_violations": self.entrance_violations,
        }
        if self.is_tree is not None:
            out["is_tree"] = self.is_tree.value
        return out


def scc_condense(g: LabeledDigraph) -> CondensationReport:
    """Tarjan's algorithm (iterative), then the condensation with arcs
    deduplicated per (source component, target component, letter)."""
    n = len(g.vertices)
    out_arcs = [[] for _ in range(n)]
    for s, d, a in g.arcs:
        out_arcs[s].append(d)

    index = [None] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    comp_of = [None] * n
    comps = []
    counter = 0
    for start in range(n):
        if index[start] is not None:
            continue
        work = [(start, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi, len(out_arcs[v])):
                u = out_arcs[v][k]
                if index[u] is None:
                    work[-1] = (v, k + 1)
                    work.append((u, 0))
                    advanced = True
                    break
                if on_stack[u]:
                    low[v] = min(low[v], index[u])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    on_stack[u] = False
                    comp.append(u)
                    if u == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])

    comps.sort(key=lambda c: c[0])
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci
    dag = sorted({
        (comp_of[s], comp_of[d], a)
        for s, d, a in g.arcs if comp_of[s] != comp_of[d]
    })
    # a component touching the ball boundary may be a fragment of a larger
    # true component, so it is excluded from structural verdicts
    partial = tuple(sorted({
        ci for ci, comp in enumerate(comps)
        if any(g.depth[v] == g.radius for v in comp)
    }))
    rep = CondensationReport(
        tuple(tuple(c) for c in comps), tuple(dag), comp_of[0], partial)
    rep._comp_of = comp_of
    return rep


def check_rooted_tree(rep: CondensationReport) -> Verdict:
    """Proven iff the interior condensation is a tree rooted at the
    component of the identity with all arcs pointing away from it.  Unknown
    when fewer than two interior components survive the margin."""
    interior = rep.interior_sccs()
    if len(interior) < 2 or rep.root_scc not in interior:
        rep.is_tree = Verdict("unknown", None, 0)
        return rep.is_tree
    inside = set(interior)
    edges = {(s, d) for s, d, _ in rep.dag_arcs if s in inside and d in inside}
    children = {}
    for s, d in edges:
        children.setdefault(s, set()).add(d)
    # BFS from the root along arc direction must reach everything once
    seen = {rep.root_scc}
    queue = deque([rep.root_scc])
    while queue:
        v = queue.popleft()
        for u in children.get(v, ()):
            if u not in seen:
                seen.add(u)
                queue.append(u)
    ok = (seen == inside and len(edges) == len(inside) - 1
          and all(d != rep.root_scc for _, d in edges))
    rep.is_tree = Verdict("proven" if ok else "refuted",
                          sorted(edges), 0)
    return rep.is_tree


def check_unique_entrance(g: LabeledDigraph, rep: CondensationReport,
                          ua=None) -> list:
    """Every interior component other than the root must be entered by
    exactly one arc from outside; with a units analysis supplied, that
    arc must land on the transversal element of the component."""
    comp_of = rep._comp_of
    violations = []
    for ci in rep.interior_sccs():
        if ci == rep.root_scc:
            continue
        entering = [(s, d, a) for s, d, a in g.arcs
                    if comp_of[d] == ci and comp_of[s] != ci]
        if len(entering) != 1:
            violations.append({
                "kind": "entrance_count", "scc": ci,
                "count": len(entering),
                "arcs": [[s, d, a] for s, d, a in entering],
            })
            continue
        if ua is not None:
            from .special import transversal_factor

            label = g.vertices[entering[0][1]]
            if transversal_factor(ua, label).u_part != EMPTY:
                violations.append({
                    "kind": "entrance_not_transversal", "scc": ci,
                    "label": format_word(label),
                })
    rep.entrance_violations = violations
    return violations


def hasse_prefix_tree(ua, ball: LabeledDigraph,
                      labels=None) -> LabeledDigraph:
    """Hasse diagram of the reverse prefix order on the transversal parts
    of the given labels (default: the ball's interior labels).  The parent
    of a transversal word is its longest proper prefix in the set."""
    from .special import transversal_factor

    if labels is None:
        labels = [ball.vertices[i] for i in ball.interior_ids()]
    parts = {transversal_factor(ua, l).w_part for l in labels}
    alphabet = ball.alphabet
    ordered = sorted(parts, key=alphabet.shortlex_key)
    ids = {w: i for i, w in enumerate(ordered)}
    arcs = []
    for w in ordered:
        if not w:
            continue
        for k in range(len(w) - 1, -1, -1):
            if w[:k] in parts:
                arcs.append((ids[w[:k]], ids[w], format_word(w[k:])))
                break
    g = LabeledDigraph(alphabet, ordered, arcs,
                       [True] * len(ordered), [None] * len(ordered),
                       ball.radius, 0)
    g._ids = ids
    return g


def _ahu_code(children, root):
    """Canonical code of an unordered rooted tree."""
    code = sorted(_ahu_code(children, c) for c in children.get(root, ()))
    return "(" + "".join(code) + ")"


def rooted_trees_isomorphic(edges_a, root_a, edges_b, root_b) -> bool:
    """edges are (parent, child) pairs; labels are ignored."""
    def children_map(edges):
        m = {}
        for p, c in edges:
            m.setdefault(p, []).append(c)
        return m

    return (_ahu_code(children_map(edges_a), root_a)
            == _ahu_code(children_map(edges_b), root_b))


def condensation_matches_hasse(ua, g: LabeledDigraph,
                               rep: CondensationReport) -> bool:
    """Interior condensation and the transversal prefix tree built from the
    same vertices agree as rooted trees."""
    inside = set(rep.interior_sccs())
    labels = [g.vertices[v] for ci in inside for v in rep.sccs[ci]]
    hasse = hasse_prefix_tree(ua, g, labels)
    cond_edges = [(s, d) for s, d, _ in rep.dag_arcs
                  if s in inside and d in inside]
    hasse_edges = [(s, d) for s, d, _ in hasse.arcs]
    root_h = hasse.id_of(EMPTY)
    return rooted_trees_isomorphic(cond_edges, rep.root_scc,
                                   hasse_edges, root_h)


@dataclass
class ChainComplexExport:
    boundary1: SparseIntMatrix   # vertices x edges
    boundary2: SparseIntMatrix   # edges x 2-cells
    augmentation: SparseIntMatrix  # 1 x vertices, all ones
    cell_base_vertices: list     # 2-cell id -> base vertex id
    skipped: list                # vertices whose relator loop leaves the ball

    def to_json(self):
        return {
            "cells": len(self.cell_base_vertices),
            "skipped": self.skipped,
        }


def cayley_complex_chain(sp, ball: LabeledDigraph) -> ChainComplexExport:
    """Fill in one 2-cell per vertex whose relator-labeled loop closes
    inside the ball; export the integer boundary maps.

    Requires at most one relator (none for a free monoid, which gets an
    empty degree-2 part)."""
    if len(sp.relators) > 1:
        raise CayleyError("chain export expects a one-relator presentation")
    arc_index = {}
    for k, (s, d, a) in enumerate(ball.arcs):
        arc_index[s, a] = (d, k)

    n_v = len(ball.vertices)
    n_e = len(ball.arcs)
    b1 = SparseIntMatrix(n_v, n_e)
    for k, (s, d, _a) in enumerate(ball.arcs):
        b1.add_at(d, k, 1)
        b1.add_at(s, k, -1)

    cells = []
    skipped = []
    relator = sp.relators[0] if sp.relators else None
    if relator is not None:
        for v in range(n_v):
            cur = v
            path = []
            ok = True
            for a in relator:
                hit = arc_index.get((cur, a))
                if hit is None:
                    ok = False
                    break
                cur, k = hit
                path.append(k)
            if not ok:
                skipped.append(v)
                continue
            if cur != v:
                raise CayleyError(
                    f"relator loop at vertex {v} does not close")
            cells.append((v, path))

    b2 = SparseIntMatrix(n_e, len(cells))
    for ci, (_v, path) in enumerate(cells):
        for k in path:
            b2.add_at(k, ci, 1)

    aug = SparseIntMatrix(1, n_v, {(0, i): 1 for i in range(n_v)})
    if not (b1 @ b2).is_zero():
        raise CayleyError("boundary composite is non-zero")
    return ChainComplexExport(b1, b2, aug,
                              [v for v, _ in cells], skipped)
