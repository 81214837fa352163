"""String rewriting over words: reduction, critical pairs, budgeted
Knuth-Bendix completion, and the congruence-ball oracle.

The reduction order is always shortlex over the alphabet order.  All
searches are budgeted; one rule application or one critical-pair join
attempt costs one step, so results are machine independent.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .words import EMPTY, Alphabet, Presentation, Word

RAW = "raw"
ORIENTED = "oriented"
COMPLETE = "complete"
PARTIAL = "partial"

DEFAULT_BUDGET = 10**6


class RewritingError(Exception):
    pass


class UnorientedSystemError(RewritingError):
    pass


class UnorientableError(RewritingError):
    def __init__(self, pair):
        self.pair = pair
        super().__init__(f"cannot orient pair {pair}")


class BudgetExhausted(RewritingError):
    """Carries whatever partial result the search had produced."""

    def __init__(self, partial):
        self.partial = partial
        super().__init__("search budget exhausted")


class Budget:
    def __init__(self, limit=DEFAULT_BUDGET):
        self.limit = limit
        self.spent = 0

    def spend(self, n=1) -> bool:
        """Charge n steps; False once the limit would be exceeded."""
        if self.spent + n > self.limit:
            return False
        self.spent += n
        return True


@dataclass(frozen=True)
class RewriteRule:
    lhs: Word
    rhs: Word


@dataclass(frozen=True)
class RewriteSystem:
    alphabet: Alphabet
    rules: tuple[RewriteRule, ...]
    status: str = RAW

    def require_oriented(self):
        if self.status not in (ORIENTED, COMPLETE, PARTIAL):
            raise UnorientedSystemError(f"system has status {self.status!r}")


@dataclass
class Verdict:
    value: str  # "proven" | "refuted" | "unknown"
    witness: list = None
    budget_spent: int = 0

    @property
    def proven(self):
        return self.value == "proven"

    @property
    def refuted(self):
        return self.value == "refuted"

    def to_json(self):
        out = {"verdict": self.value, "steps": self.budget_spent}
        if self.witness is not None:
            out["witness"] = [" ".join(w) if w else "1" for w in self.witness]
        return out


@dataclass
class CompletionResult:
    system: RewriteSystem
    completed: bool
    steps: int


def orient_system(source, alphabet: Alphabet = None) -> RewriteSystem:
    """Orient a presentation (or raw rule list) into shortlex-decreasing rules."""
    if isinstance(source, Presentation):
        alphabet = source.alphabet
        pairs = list(source.relations)
    else:
        pairs = [(r.lhs, r.rhs) for r in source]
    rules = []
    for u, v in pairs:
        if u == v:
            continue
        if alphabet.shortlex_less(u, v):
            u, v = v, u
        rules.append(RewriteRule(u, v))
    return RewriteSystem(alphabet, tuple(rules), ORIENTED)


def _find_leftmost(rules, w: Word):
    """(position, rule index) of the leftmost redex, lowest rule index first."""
    n = len(w)
    for pos in range(n):
        for ri, rule in enumerate(rules):
            ln = len(rule.lhs)
            if pos + ln <= n and w[pos:pos + ln] == rule.lhs:
                return pos, ri
    return None


def reduce_once(s: RewriteSystem, w: Word, budget: Budget = None):
    """Apply the leftmost-lowest-index rule once, or None if w is irreducible."""
    s.require_oriented()
    hit = _find_leftmost(s.rules, w)
    if hit is None:
        return None
    pos, ri = hit
    rule = s.rules[ri]
    if budget is not None and not budget.spend():
        raise BudgetExhausted(w)
    return w[:pos] + rule.rhs + w[pos + len(rule.lhs):]


def normalize(s: RewriteSystem, w: Word, budget: Budget = None) -> Word:
    """Reduce to a fixed point.  Terminates: every rule is shortlex-decreasing."""
    s.require_oriented()
    while True:
        nxt = reduce_once(s, w, budget)
        if nxt is None:
            return w
        w = nxt


def normalize_trace(s: RewriteSystem, w: Word) -> list[Word]:
    trace = [w]
    while True:
        nxt = reduce_once(s, w)
        if nxt is None:
            return trace
        w = nxt
        trace.append(w)


def critical_pairs(s: RewriteSystem):
    """All overlap and containment critical pairs, one-step reduced both ways.

    Each entry is (left, right, provenance) where provenance is
    (kind, rule_i, rule_j, position) and position is the start of rule_j's
    lhs inside the superposition word.
    """
    s.require_oriented()
    out = []
    rules = s.rules
    for i, r1 in enumerate(rules):
        for j, r2 in enumerate(rules):
            l1, l2 = r1.lhs, r2.lhs
            found = []
            # proper overlap: non-empty proper suffix of l1 = prefix of l2
            for k in range(1, min(len(l1), len(l2))):
                if l1[len(l1) - k:] == l2[:k]:
                    left = r1.rhs + l2[k:]
                    right = l1[:len(l1) - k] + r2.rhs
                    found.append((len(l1) - k, ("overlap", i, j, len(l1) - k),
                                  left, right))
            # containment: l2 occurs inside l1 (distinct rules)
            if i != j and len(l2) <= len(l1):
                for p in range(len(l1) - len(l2) + 1):
                    if l1[p:p + len(l2)] == l2:
                        left = r1.rhs
                        right = l1[:p] + r2.rhs + l1[p + len(l2):]
                        found.append((p, ("contain", i, j, p), left, right))
            for _, prov, left, right in sorted(found, key=lambda t: t[0]):
                out.append((left, right, prov))
    return out


def _interreduce(alphabet: Alphabet, rules):
    """Canonical interreduced rule set: no lhs/rhs reducible by another rule."""
    work = list(rules)
    changed = True
    while changed:
        changed = False
        work.sort(key=lambda r: alphabet.shortlex_key(r.lhs))
        for idx, rule in enumerate(work):
            others = RewriteSystem(
                alphabet, tuple(work[:idx] + work[idx + 1:]), ORIENTED)
            lhs = normalize(others, rule.lhs)
            rhs = normalize(others, rule.rhs)
            if lhs == rule.lhs and rhs == rule.rhs:
                continue
            del work[idx]
            if lhs != rhs:
                if alphabet.shortlex_less(lhs, rhs):
                    lhs, rhs = rhs, lhs
                new_rule = RewriteRule(lhs, rhs)
                if new_rule not in work:
                    work.append(new_rule)
            changed = True
            break
    work.sort(key=lambda r: alphabet.shortlex_key(r.lhs))
    # dedupe while preserving the sort
    seen, final = set(), []
    for r in work:
        if r not in seen:
            seen.add(r)
            final.append(r)
    return final


def knuth_bendix(s: RewriteSystem, budget_limit=DEFAULT_BUDGET) -> CompletionResult:
    """Budgeted completion.  Every added rule is a consequence of the input,
    so the congruence is preserved whether or not completion finishes."""
    s.require_oriented()
    budget = Budget(budget_limit)
    alphabet = s.alphabet
    rules = _interreduce(alphabet, s.rules)

    while True:
        current = RewriteSystem(alphabet, tuple(rules), ORIENTED)
        added = False
        for left, right, _prov in critical_pairs(current):
            if not budget.spend():  # join attempt
                return CompletionResult(
                    RewriteSystem(alphabet, tuple(rules), PARTIAL),
                    False, budget.spent)
            try:
                u = normalize(current, left, budget)
                v = normalize(current, right, budget)
            except BudgetExhausted:
                return CompletionResult(
                    RewriteSystem(alphabet, tuple(rules), PARTIAL),
                    False, budget.spent)
            if u == v:
                continue
            if alphabet.shortlex_less(u, v):
                u, v = v, u
            rules = _interreduce(alphabet, rules + [RewriteRule(u, v)])
            added = True
            break
        if not added:
            return CompletionResult(
                RewriteSystem(alphabet, tuple(rules), COMPLETE),
                True, budget.spent)


def _ball_with_parents(p: Presentation, w: Word, max_len: int, budget: Budget):
    parents = {w: None}
    queue = deque([w])
    while queue:
        cur = queue.popleft()
        for lhs, rhs in p.relations:
            for a, b in ((lhs, rhs), (rhs, lhs)):
                la = len(a)
                for pos in range(len(cur) - la + 1):
                    if cur[pos:pos + la] != a:
                        continue
                    if not budget.spend():
                        raise BudgetExhausted(parents)
                    nxt = cur[:pos] + b + cur[pos + la:]
                    if len(nxt) > max_len or nxt in parents:
                        continue
                    parents[nxt] = cur
                    queue.append(nxt)
    return parents


def congruence_ball(p: Presentation, w: Word, max_len: int,
                    budget_limit=DEFAULT_BUDGET):
    """BFS closure of {w} under both directions of every relation, capped at
    max_len.  This is the brute-force oracle the rest of the suite checks
    against.

    Raises BudgetExhausted (carrying the partial word set) if the step
    budget runs out before the ball is closed.
    """
    budget = Budget(budget_limit)
    try:
        parents = _ball_with_parents(p, w, max_len, budget)
    except BudgetExhausted as e:
        raise BudgetExhausted(set(e.partial)) from None
    return set(parents)


def _witness_path(parents, target):
    path = []
    cur = target
    while cur is not None:
        path.append(cur)
        cur = parents[cur]
    path.reverse()
    return path


def default_ball_cap(p: Presentation, u: Word, v: Word) -> int:
    longest = 1
    for lhs, rhs in p.relations:
        longest = max(longest, len(lhs), len(rhs))
    return max(len(u), len(v)) + 2 * longest


def equal_words(ctx, u: Word, v: Word, budget_limit=DEFAULT_BUDGET,
                max_len: int = None) -> Verdict:
    """Three-valued word equality.

    With a completed RewriteSystem, compares normal forms (may refute).
    With a Presentation, runs a budgeted congruence-ball search from u and
    answers proven or unknown; budget exhaustion never refutes.
    """
    if isinstance(ctx, RewriteSystem):
        if ctx.status == COMPLETE:
            budget = Budget(budget_limit)
            nu = normalize(ctx, u, budget)
            nv = normalize(ctx, v, budget)
            if nu == nv:
                witness = normalize_trace(ctx, u) + normalize_trace(ctx, v)[::-1]
                return Verdict("proven", witness, budget.spent)
            return Verdict("refuted", [nu, nv], budget.spent)
        raise UnorientedSystemError(
            "equal_words needs a completed system or a presentation")

    p: Presentation = ctx
    if u == v:
        return Verdict("proven", [u], 0)
    cap = max_len if max_len is not None else default_ball_cap(p, u, v)
    budget = Budget(budget_limit)
    try:
        parents = _ball_with_parents(p, u, cap, budget)
    except BudgetExhausted as e:
        parents = e.partial
    if v in parents:
        return Verdict("proven", _witness_path(parents, v), budget.spent)
    # the ball may be closed under the cap, but equality could still need
    # longer intermediate words, so absence proves nothing
    return Verdict("unknown", None, budget.spent)


def irreducible_words(s: RewriteSystem, max_len: int):
    """All irreducible words of length <= max_len, shortlex order."""
    out = []
    for n in range(max_len + 1):
        for w in s.alphabet.words_of_length(n):
            if _find_leftmost(s.rules, w) is None:
                out.append(w)
    return out
