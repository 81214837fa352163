"""Monoid presentations and words over finite ordered alphabets.

A word is a tuple of letters; letters are printable identifiers (possibly
multi-character), so generated alphabets like ``b1``, ``z3`` are
representable.  The empty tuple is the empty word and is written ``1`` in
the surface syntax.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

Word = tuple[str, ...]

EMPTY: Word = ()


class WordError(Exception):
    pass


class PresentationSyntaxError(WordError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownLetterError(WordError):
    def __init__(self, letter, line=None):
        self.letter = letter
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unknown letter {letter!r}{where}")


class DuplicateLetterError(WordError):
    def __init__(self, letter):
        self.letter = letter
        super().__init__(f"duplicate letter {letter!r}")


class NotSpecialError(WordError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"relation {index} has a non-empty right-hand side")


class EmptyRelatorError(WordError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"relation {index} has an empty left-hand side")


class EmptyWordError(WordError):
    pass


@dataclass(frozen=True)
class Alphabet:
    """Finite set of distinct letters with a total order used for shortlex."""

    letters: tuple[str, ...]
    order: tuple[str, ...] = None  # defaults to declaration order

    def __post_init__(self):
        if self.order is None:
            object.__setattr__(self, "order", self.letters)
        seen = set()
        for a in self.letters:
            if a in seen:
                raise DuplicateLetterError(a)
            seen.add(a)
        if sorted(self.order) != sorted(self.letters):
            raise WordError("order must be a permutation of the letters")
        object.__setattr__(self, "_rank", {a: i for i, a in enumerate(self.order)})

    def __contains__(self, letter):
        return letter in self._rank

    def rank(self, letter):
        return self._rank[letter]

    def shortlex_key(self, w: Word):
        return (len(w), tuple(self._rank[a] for a in w))

    def shortlex_less(self, u: Word, v: Word) -> bool:
        return self.shortlex_key(u) < self.shortlex_key(v)

    def check_word(self, w: Word, line=None):
        for a in w:
            if a not in self._rank:
                raise UnknownLetterError(a, line)

    def words_of_length(self, n: int):
        """All words of exactly length n, in lexicographic (order) sequence."""
        if n == 0:
            yield EMPTY
            return
        for prefix in self.words_of_length(n - 1):
            for a in self.order:
                yield prefix + (a,)


@dataclass(frozen=True)
class Presentation:
    alphabet: Alphabet
    relations: tuple[tuple[Word, Word], ...]
    name: str = None

    def __post_init__(self):
        for lhs, rhs in self.relations:
            self.alphabet.check_word(lhs)
            self.alphabet.check_word(rhs)


@dataclass(frozen=True)
class SpecialPresentation:
    """A presentation in which every relation reads w = 1."""

    base: Presentation
    relators: tuple[Word, ...]

    @property
    def alphabet(self):
        return self.base.alphabet


def format_word(w: Word) -> str:
    return " ".join(w) if w else "1"


def parse_word_tokens(tokens, alphabet: Alphabet = None, line=None) -> Word:
    if tokens == ["1"]:
        return EMPTY
    w = tuple(tokens)
    if alphabet is not None:
        alphabet.check_word(w, line)
    return w


def parse_presentation(text: str, name: str = None, order=None) -> Presentation:
    """Parse the line-oriented presentation format.

    Line 1 (after comments): ``letters:`` followed by identifiers.
    Each following line: ``rel: <word> = <word>`` with ``1`` for the empty
    word.  ``#`` starts a comment.
    """
    alphabet = None
    relations = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if alphabet is None:
            if not line.startswith("letters:"):
                raise PresentationSyntaxError(
                    "expected 'letters:' declaration", lineno)
            letters = tuple(line[len("letters:"):].split())
            alphabet = Alphabet(letters, tuple(order) if order else None)
            continue
        if not line.startswith("rel:"):
            raise PresentationSyntaxError("expected 'rel:' line", lineno)
        body = line[len("rel:"):]
        if body.count("=") != 1:
            raise PresentationSyntaxError(
                "relation must contain exactly one '='", lineno)
        lhs_text, rhs_text = body.split("=")
        lhs_tokens = lhs_text.split()
        rhs_tokens = rhs_text.split()
        if not lhs_tokens or not rhs_tokens:
            raise PresentationSyntaxError(
                "both sides of a relation must be non-empty "
                "(write '1' for the empty word)", lineno)
        lhs = parse_word_tokens(lhs_tokens, alphabet, lineno)
        rhs = parse_word_tokens(rhs_tokens, alphabet, lineno)
        relations.append((lhs, rhs))
    if alphabet is None:
        raise PresentationSyntaxError("missing 'letters:' declaration")
    return Presentation(alphabet, tuple(relations), name)


def serialize_presentation(p: Presentation) -> str:
    lines = ["letters: " + " ".join(p.alphabet.letters)]
    for lhs, rhs in p.relations:
        lines.append(f"rel: {format_word(lhs)} = {format_word(rhs)}")
    return "\n".join(lines) + "\n"


def presentation_to_json(p: Presentation) -> dict:
    return {
        "letters": list(p.alphabet.letters),
        "relations": [
            {"lhs": list(lhs), "rhs": list(rhs)} for lhs, rhs in p.relations
        ],
    }


def presentation_from_json(data: dict, name=None) -> Presentation:
    alphabet = Alphabet(tuple(data["letters"]))
    relations = tuple(
        (tuple(r["lhs"]), tuple(r["rhs"])) for r in data["relations"]
    )
    return Presentation(alphabet, relations, name)


def presentation_to_json_str(p: Presentation) -> str:
    return json.dumps(presentation_to_json(p), sort_keys=True)


def validate_special(p: Presentation) -> SpecialPresentation:
    relators = []
    for i, (lhs, rhs) in enumerate(p.relations):
        if rhs != EMPTY:
            raise NotSpecialError(i)
        if lhs == EMPTY:
            raise EmptyRelatorError(i)
        relators.append(lhs)
    return SpecialPresentation(p, tuple(relators))


def primitive_root(w: Word) -> tuple[Word, int]:
    """Decompose w = p**k with p primitive and k maximal.

    Uniqueness of the decomposition is classical (Lyndon-Schutzenberger);
    we take the smallest period whose length divides |w|.
    """
    if not w:
        raise EmptyWordError("the empty word has no primitive root")
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w[:d] * (n // d) == w:
            return w[:d], n // d
    raise AssertionError("unreachable: every word is a power of itself")
