"""Analysis of special presentations (every relation reads w = 1):
invertibility certificates, minimal invertible words, the units and
right-units presentations, lazy normalization, and the transversal order.

The pipeline is Unknown-tolerant: invertibility of a word is semi-decidable,
so searches prove or give up, and anything left uncertain is surfaced in the
diagnostics instead of being guessed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .words import (
    EMPTY,
    Alphabet,
    Presentation,
    SpecialPresentation,
    Word,
    WordError,
    format_word,
)
from .rewriting import (
    COMPLETE,
    DEFAULT_BUDGET,
    Budget,
    BudgetExhausted,
    RewriteSystem,
    Verdict,
    _ball_with_parents,
    _witness_path,
    equal_words,
    knuth_bendix,
    normalize,
    orient_system,
)


class SpecialAnalysisError(WordError):
    pass


class NotOneRelatorError(SpecialAnalysisError):
    pass


class UnitsNotCompletedError(SpecialAnalysisError):
    pass


class NonCertifiedDeltaError(SpecialAnalysisError):
    pass


class NotIrreducibleError(SpecialAnalysisError):
    pass


@dataclass
class InvertibilityCertificate:
    word: Word
    right_inverse: Word
    left_inverse: Word
    # each trace is a word sequence from the product down to the empty word
    right_trace: list = None
    left_trace: list = None

    def to_json(self):
        return {
            "word": format_word(self.word),
            "right_inverse": format_word(self.right_inverse),
            "left_inverse": format_word(self.left_inverse),
        }


def _unit_ball(sp: SpecialPresentation, max_len: int, budget: Budget):
    """Words provably equal to the empty word, with BFS parents for traces."""
    try:
        return _ball_with_parents(sp.base, EMPTY, max_len, budget), True
    except BudgetExhausted as e:
        return e.partial, False


def _certify_from_ball(u: Word, ball_parents) -> InvertibilityCertificate | None:
    right = left = None
    for w in sorted(ball_parents, key=lambda x: (len(x), x)):
        if right is None and w[:len(u)] == u:
            right = w[len(u):]
            right_trace = _witness_path(ball_parents, w)[::-1]
        if left is None and len(w) >= len(u) and w[len(w) - len(u):] == u:
            left = w[:len(w) - len(u)]
            left_trace = _witness_path(ball_parents, w)[::-1]
        if right is not None and left is not None:
            return InvertibilityCertificate(u, right, left, right_trace, left_trace)
    return None


def _longest_relator(sp: SpecialPresentation) -> int:
    return max((len(r) for r in sp.relators), default=0)


def certify_invertible(sp: SpecialPresentation, u: Word,
                       budget_limit=DEFAULT_BUDGET, system=None) -> Verdict:
    """Search for a right inverse v (uv = 1) and a left inverse v' (v'u = 1)
    inside a budgeted ball around the empty word.

    Refuted is only possible when a completed rewriting system for the monoid
    is supplied: if the normal form of u begins with a letter that no rule's
    left side begins with, right multiplication can never erase it, so u has
    no right inverse (symmetrically for the last letter and left inverses).
    """
    budget = Budget(budget_limit)
    cap = 2 * len(u) + 2 * _longest_relator(sp)
    parents, closed = _unit_ball(sp, cap, budget)
    cert = _certify_from_ball(u, parents)
    if cert is not None:
        return Verdict("proven", [cert], budget.spent)
    if system is not None and system.status == COMPLETE:
        nf = normalize(system, u)
        if nf != EMPTY and _dead_letter(system, nf):
            return Verdict("refuted", None, budget.spent)
    return Verdict("unknown", None, budget.spent)


def _dead_letter(system: RewriteSystem, nf: Word) -> bool:
    """An irreducible word keeps its first letter under right multiplication
    unless some rule's lhs starts with it, and keeps its last letter under
    left multiplication unless some lhs ends with it."""
    first_live = any(r.lhs[:1] == nf[:1] for r in system.rules)
    last_live = any(r.lhs[-1:] == nf[-1:] for r in system.rules)
    return not first_live or not last_live


def indecomposable_factorization(sp: SpecialPresentation, v: Word,
                                 budget_limit=DEFAULT_BUDGET, system=None):
    """Split v by repeatedly removing the shortest prefix that certifies
    invertible.  Raises BudgetExhausted (carrying the stuck position and
    the factors found so far) if some suffix has no certifiable prefix."""
    factors = []
    pos = 0
    rest = v
    while rest:
        split = None
        for k in range(1, len(rest) + 1):
            verdict = certify_invertible(sp, rest[:k], budget_limit, system)
            if verdict.proven:
                split = k
                break
        if split is None:
            raise BudgetExhausted({"position": pos, "factors": factors})
        factors.append(rest[:split])
        rest = rest[split:]
        pos += split
    return factors


@dataclass
class UnitsAnalysis:
    sp: SpecialPresentation
    factors: tuple = ()            # per relator, its minimal-factor sequence
    delta: tuple = ()              # sorted minimal invertible words
    partition: tuple = ()          # classes of delta, each sorted
    representatives: tuple = ()    # shortlex-least member per class
    b_alphabet: Alphabet = None    # fresh letters b1..bm
    t0: tuple = ()                 # relations over B, all of the form (s, 1)
    units_system: RewriteSystem = None
    units_completed: bool = False
    I: tuple = ()                  # non-empty prefixes of delta words
    I0: tuple = ()
    diagnostics: list = field(default_factory=list)
    certified: bool = True

    def phi_letter(self, d: Word) -> str:
        return self._phi[d]

    def rep_of(self, b: str) -> Word:
        return self._rep[b]

    def phi(self, w: Word) -> Word:
        """Image of a Delta*-word under the block map; None if w fails to
        parse (Delta is a prefix code, so parsing is deterministic)."""
        out = []
        i = 0
        while i < len(w):
            hit = None
            for d in self.delta:
                if w[i:i + len(d)] == d:
                    hit = d
                    break
            if hit is None:
                return None
            out.append(self._phi[hit])
            i += len(hit)
        return tuple(out)


def _flag(ua: UnitsAnalysis, kind, **details):
    ua.diagnostics.append({"kind": kind, **details})


def compute_delta(sp: SpecialPresentation,
                  budget_limit=DEFAULT_BUDGET) -> UnitsAnalysis:
    """Minimal invertible words and their partition by equality in M.

    Every relator is factored into indecomposable invertible words; the
    candidates are all words up to the minimum relator length that certify
    invertible, indecomposable, and provably equal to some minimal factor.
    Candidates whose searches ran out of budget are listed in diagnostics
    and mark the analysis non-certified.
    """
    ua = UnitsAnalysis(sp)
    alphabet = sp.alphabet
    if not sp.relators:
        ua.b_alphabet = Alphabet(())
        ua.units_system = RewriteSystem(ua.b_alphabet, (), COMPLETE)
        ua.units_completed = True
        ua._phi, ua._rep = {}, {}
        return ua

    factor_lists = []
    for rel in sp.relators:
        try:
            factor_lists.append(tuple(indecomposable_factorization(
                sp, rel, budget_limit)))
        except BudgetExhausted as e:
            _flag(ua, "relator_factorization_stuck",
                  relator=format_word(rel), position=e.partial["position"])
            ua.certified = False
            factor_lists.append((rel,))
    ua.factors = tuple(factor_lists)
    minimal_factors = {f for fl in factor_lists for f in fl}

    min_len = min(len(r) for r in sp.relators)
    budget = Budget(budget_limit)
    cap = 2 * min_len + 2 * _longest_relator(sp)
    ball, closed = _unit_ball(sp, cap, budget)
    if not closed:
        _flag(ua, "unit_ball_truncated", cap=cap, spent=budget.spent)
        ua.certified = False

    delta = set()
    candidates = []
    for n in range(1, min_len + 1):
        candidates.extend(alphabet.words_of_length(n))
    invertible = {c for c in candidates if _certify_from_ball(c, ball)}
    for c in candidates:
        if c not in invertible:
            continue
        if any(c[:k] in invertible for k in range(1, len(c))):
            continue  # decomposable
        hit = False
        for f in sorted(minimal_factors, key=alphabet.shortlex_key):
            v = equal_words(sp.base, c, f, budget_limit)
            if v.proven:
                hit = True
                break
        if hit:
            delta.add(c)
    ua.delta = tuple(sorted(delta, key=alphabet.shortlex_key))

    for f in minimal_factors:
        if f not in delta:
            _flag(ua, "minimal_factor_outside_delta", word=format_word(f))
            ua.certified = False
    for u in ua.delta:
        for v in ua.delta:
            if u != v and v[:len(u)] == u:
                raise SpecialAnalysisError(
                    f"delta is not a prefix code: {format_word(u)} prefixes "
                    f"{format_word(v)}")

    # partition by provable equality
    parent = {d: d for d in ua.delta}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, u in enumerate(ua.delta):
        for v in ua.delta[i + 1:]:
            if find(u) != find(v) and equal_words(sp.base, u, v, budget_limit).proven:
                parent[find(u)] = find(v)
    classes = {}
    for d in ua.delta:
        classes.setdefault(find(d), []).append(d)
    parts = sorted(
        (sorted(c, key=alphabet.shortlex_key) for c in classes.values()),
        key=lambda c: alphabet.shortlex_key(c[0]))
    ua.partition = tuple(tuple(c) for c in parts)
    ua.representatives = tuple(c[0] for c in ua.partition)

    letters = tuple(f"b{j + 1}" for j in range(len(ua.partition)))
    ua.b_alphabet = Alphabet(letters)
    ua._phi = {d: letters[j] for j, cls in enumerate(ua.partition) for d in cls}
    ua._rep = dict(zip(letters, ua.representatives))

    t0 = set()
    for rel in sp.relators:
        image = ua.phi(rel)
        if image is None:
            _flag(ua, "relator_not_delta_parseable", relator=format_word(rel))
            ua.certified = False
            continue
        for k in range(len(image)):
            t0.add(image[k:] + image[:k])
    ua.t0 = tuple(
        (s, EMPTY) for s in sorted(t0, key=ua.b_alphabet.shortlex_key))

    result = knuth_bendix(
        orient_system(units_presentation(ua)), budget_limit)
    ua.units_system = result.system
    ua.units_completed = result.completed
    if not result.completed:
        _flag(ua, "units_completion_partial", steps=result.steps)
    compute_I_I0(ua)
    return ua


def units_presentation(ua: UnitsAnalysis) -> Presentation:
    """The group of units, presented over B by all cyclic permutations of
    the relator images (each set equal to 1)."""
    return Presentation(ua.b_alphabet, ua.t0, name="units")


def torsion_flag(sp: SpecialPresentation, ua: UnitsAnalysis = None) -> dict:
    """For a one-relator presentation w = 1 with w = p^k (p primitive), the
    group of units has torsion exactly when k > 1."""
    from .words import primitive_root

    if len(sp.relators) != 1:
        raise NotOneRelatorError(
            f"expected exactly one relator, got {len(sp.relators)}")
    _, k = primitive_root(sp.relators[0])
    return {"k": k, "torsion": k > 1}


def compute_I_I0(ua: UnitsAnalysis):
    """I: non-empty prefixes of delta words.  I0: members of I \\ I^2 that
    are irreducible under normalize_special.

    A certified I0 needs the completed units system; otherwise raw
    membership in I \\ I^2 is reported and flagged approximate.  The
    expectation that I0 meets each delta class exactly once is checked and
    flagged, not enforced."""
    alphabet = ua.sp.alphabet
    I = {d[:k] for d in ua.delta for k in range(1, len(d) + 1)}
    ua.I = tuple(sorted(I, key=alphabet.shortlex_key))

    def in_I_star_square(w):
        return any(w[:k] in I and w[k:] in I for k in range(1, len(w)))

    base = [w for w in ua.I if not in_I_star_square(w)]
    if ua.units_completed and ua.certified:
        I0 = [w for w in base if normalize_special(ua, w) == w]
    else:
        I0 = base
        _flag(ua, "I0_approximate")
    ua.I0 = tuple(sorted(I0, key=alphabet.shortlex_key))

    for j, cls in enumerate(ua.partition):
        count = sum(1 for w in ua.I0 if w in cls)
        if count != 1:
            _flag(ua, "I0_delta_class_mismatch", class_index=j + 1,
                  count=count)
    return ua.I, ua.I0


def right_units_presentation(ua: UnitsAnalysis) -> tuple[Presentation, dict]:
    """The right units: free product of the units group with a free monoid
    on Z, where Z matches the I0 words that are not class representatives.

    Returns the presentation over B plus Z and the map from z-letters to the
    words they stand for."""
    alphabet = ua.sp.alphabet
    reps = set(ua.representatives)
    z_words = [w for w in ua.I0 if w not in reps]
    z_words.sort(key=alphabet.shortlex_key)
    z_letters = tuple(f"z{j + 1}" for j in range(len(z_words)))
    letters = ua.b_alphabet.letters + z_letters
    pres = Presentation(Alphabet(letters), ua.t0, name="right-units")
    return pres, dict(zip(z_letters, (tuple(w) for w in z_words)))


def _delta_runs(ua: UnitsAnalysis, w: Word):
    """Maximal runs of consecutive delta-word occurrences, greedily parsed.
    Greedy parsing is exact because delta is a prefix code."""
    runs = []
    i = 0
    n = len(w)
    while i < n:
        start = i
        blocks = []
        while i < n:
            hit = None
            for d in ua.delta:
                if w[i:i + len(d)] == d:
                    hit = d
                    break
            if hit is None:
                break
            blocks.append(hit)
            i += len(hit)
        if blocks:
            runs.append((start, i, blocks))
        else:
            i += 1
    return runs


def normalize_special(ua: UnitsAnalysis, w: Word) -> Word:
    """Reduce w using the relation set induced by the units group: each
    maximal delta-block is mapped through phi, normalized over B, and mapped
    back via the class representatives.  A replacement is kept only when it
    is shortlex-smaller, and the scan repeats to a fixed point."""
    if ua.units_system is None or ua.units_system.status != COMPLETE:
        raise UnitsNotCompletedError("units system is not completed")
    if not ua.certified:
        raise NonCertifiedDeltaError(
            "delta analysis carries unresolved diagnostics")
    alphabet = ua.sp.alphabet
    changed = True
    while changed:
        changed = False
        for start, end, blocks in _delta_runs(ua, w):
            image = tuple(ua._phi[d] for d in blocks)
            nf = normalize(ua.units_system, image)
            if nf == image:
                continue
            back = EMPTY
            for b in nf:
                back = back + ua._rep[b]
            candidate = w[:start] + back + w[end:]
            if alphabet.shortlex_less(candidate, w):
                w = candidate
                changed = True
                break
    return w


@dataclass(frozen=True)
class TransversalFactorization:
    w_part: Word
    u_part: Word


def transversal_factor(ua: UnitsAnalysis, v: Word) -> TransversalFactorization:
    """Unique splitting v = w.t where t is the longest suffix of v lying in
    I*; then w has no suffix in I."""
    if normalize_special(ua, v) != v:
        raise NotIrreducibleError(format_word(v))
    I = set(ua.I)
    n = len(v)
    in_istar = [False] * (n + 1)
    in_istar[n] = True
    for i in range(n - 1, -1, -1):
        in_istar[i] = any(
            v[i:j] in I and in_istar[j] for j in range(i + 1, n + 1))
    cut = next(i for i in range(n + 1) if in_istar[i])
    return TransversalFactorization(v[:cut], v[cut:])


def r_order_leq(ua: UnitsAnalysis, m: Word, n: Word) -> Verdict:
    """m lies below n in the right-divisibility preorder exactly when the
    transversal part of n is a prefix of the transversal part of m."""
    wm = transversal_factor(ua, normalize_special(ua, m)).w_part
    wn = transversal_factor(ua, normalize_special(ua, n)).w_part
    if wm[:len(wn)] == wn:
        return Verdict("proven", [wm, wn], 0)
    return Verdict("refuted", [wm, wn], 0)


def loop_generators(ua: UnitsAnalysis, a: str,
                    budget_limit=DEFAULT_BUDGET) -> set:
    """Words w in I with [w] and [w.a] in the same R-class; these generate
    {m : m R ma} as a left ideal."""
    ua.sp.alphabet.check_word((a,))
    out = set()
    for w in ua.I:
        wa = w + (a,)
        if (r_order_leq(ua, w, wa).proven
                and r_order_leq(ua, wa, w).proven):
            out.add(w)
    return out
