"""Token grammar of the rendered explanations.

Every explanation the rule engine emits is a flat token sequence over a
small closed vocabulary. This module owns that vocabulary and a strict
recursive-descent parser used to machine-check outputs (and anything a
learned model generates) against the template grammar:

  explanation   := attn_sentence? main_sentence result_sentence?
  attn_sentence := "objects(object)" kind_list "have" "drawn" "attention" "of" "pacman" "."
  kind_list     := kind | kind+ "and" kind
  main_sentence := "the" "pacman" "moves" DIR "to" verb_phrases "."
                 | "the" "pacman" "is" "moving" DIR "." "because" "he" "wants" "to" verb_phrases "."
  verb_phrases  := ("eat"|"avoid") group_list ("and" ("eat"|"avoid") group_list)?
  result_sentence := "as" "a" "result" "," "the" "pacman" "is"
                     ("approaching"|"leaving") group_list
                     ("and" ("approaching"|"leaving") group_list)? "."
  group_list    := group ("," group)* ("and" group)?
  group         := "the" (COUNT)? kind_plural dir_phrase ("and" dir_phrase)*
  DIR           := "up"|"down"|"left"|"right" ;  COUNT := "2"|"3"|"4"
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import PacxplainError
from .gridworld import ObjectKind


class GrammarError(PacxplainError):
    """Token sequence does not match the explanation grammar."""


TERMINALS = (
    "objects(object)",
    "have",
    "drawn",
    "attention",
    "of",
    "pacman",
    ".",
    "the",
    "moves",
    "up",
    "down",
    "left",
    "right",
    "to",
    "eat",
    "avoid",
    "is",
    "moving",
    "because",
    "he",
    "wants",
    "as",
    "a",
    "result",
    ",",
    "approaching",
    "leaving",
    "and",
    "ghost",
    "ghosts",
    "edible",
    "cherry",
    "cherries",
    "pellet",
    "pellets",
    "dot",
    "dots",
    "above",
    "below",
    "her",
    "on",
    "in",
    "upper-left",
    "upper-right",
    "lower-left",
    "lower-right",
    "2",
    "3",
    "4",
)

DIR_TOKENS = ("up", "down", "left", "right")
COUNT_TOKENS = ("2", "3", "4")
MAIN_VERBS = ("eat", "avoid")
RESULT_VERBS = ("approaching", "leaving")
_DIR_STARTERS = ("above", "below", "on", "in")

_SINGULAR_KINDS = {
    "ghost": ObjectKind.GHOST,
    "cherry": ObjectKind.CHERRY,
    "pellet": ObjectKind.PELLET,
    "dot": ObjectKind.DOT,
}
_PLURAL_KINDS = {
    "ghosts": ObjectKind.GHOST,
    "cherries": ObjectKind.CHERRY,
    "pellets": ObjectKind.PELLET,
    "dots": ObjectKind.DOT,
}


@dataclass(frozen=True)
class Group:
    kind: ObjectKind
    count: int
    dirs: tuple[str, ...]


@dataclass(frozen=True)
class VerbPhrase:
    verb: str
    groups: tuple[Group, ...]


@dataclass(frozen=True)
class ParsedExplanation:
    attention_kinds: tuple[ObjectKind, ...] | None
    form: str  # "moves" or "moving"
    direction: str
    reason: tuple[VerbPhrase, ...]
    result: tuple[VerbPhrase, ...] | None

    def mentioned_objects(self) -> int:
        phrases = self.reason + (self.result or ())
        return sum(g.count for vp in phrases for g in vp.groups)

    def mentioned_dots(self) -> int:
        phrases = self.reason + (self.result or ())
        return sum(
            g.count for vp in phrases for g in vp.groups if g.kind == ObjectKind.DOT
        )


class _Parser:
    def __init__(self, tokens):
        self.tokens = list(tokens)
        self.pos = 0

    def peek(self, ahead: int = 0):
        i = self.pos + ahead
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise GrammarError("unexpected end of explanation")
        self.pos += 1
        return tok

    def expect(self, *expected: str):
        for want in expected:
            got = self.next()
            if got != want:
                raise GrammarError(f"expected {want!r}, got {got!r} at token {self.pos - 1}")

    def parse(self) -> ParsedExplanation:
        attention = None
        if self.peek() == "objects(object)":
            attention = self._attention_sentence()
        form, direction, reason = self._main_sentence()
        result = None
        if self.peek() == "as":
            result = self._result_sentence()
        if self.peek() is not None:
            raise GrammarError(f"trailing tokens from position {self.pos}")
        return ParsedExplanation(
            attention_kinds=attention,
            form=form,
            direction=direction,
            reason=reason,
            result=result,
        )

    def _kind(self, plural: bool) -> ObjectKind:
        table = _PLURAL_KINDS if plural else _SINGULAR_KINDS
        tok = self.next()
        if tok == "edible":
            self.expect("ghosts" if plural else "ghost")
            return ObjectKind.EDIBLE_GHOST
        if tok in table:
            return table[tok]
        raise GrammarError(f"expected object kind, got {tok!r}")

    def _attention_sentence(self) -> tuple[ObjectKind, ...]:
        self.expect("objects(object)")
        kinds = [self._kind(plural=False)]
        saw_and = False
        while self.peek() != "have":
            if self.peek() == "and":
                self.next()
                kinds.append(self._kind(plural=False))
                saw_and = True
                break
            kinds.append(self._kind(plural=False))
        if len(kinds) >= 2 and not saw_and:
            raise GrammarError("kind list of 2+ needs 'and' before the last kind")
        self.expect("have", "drawn", "attention", "of", "pacman", ".")
        return tuple(kinds)

    def _main_sentence(self):
        self.expect("the", "pacman")
        tok = self.next()
        if tok == "moves":
            direction = self.next()
            if direction not in DIR_TOKENS:
                raise GrammarError(f"bad direction {direction!r}")
            self.expect("to")
            reason = self._verb_phrases(MAIN_VERBS)
            self.expect(".")
            return "moves", direction, reason
        if tok == "is":
            self.expect("moving")
            direction = self.next()
            if direction not in DIR_TOKENS:
                raise GrammarError(f"bad direction {direction!r}")
            self.expect(".", "because", "he", "wants", "to")
            reason = self._verb_phrases(MAIN_VERBS)
            self.expect(".")
            return "moving", direction, reason
        raise GrammarError(f"expected 'moves' or 'is', got {tok!r}")

    def _result_sentence(self) -> tuple[VerbPhrase, ...]:
        self.expect("as", "a", "result", ",", "the", "pacman", "is")
        phrases = self._verb_phrases(RESULT_VERBS)
        self.expect(".")
        return phrases

    def _verb_phrases(self, verbs) -> tuple[VerbPhrase, ...]:
        phrases = [self._one_verb_phrase(verbs)]
        if self.peek() == "and" and self.peek(1) in verbs:
            self.next()
            phrases.append(self._one_verb_phrase(verbs))
        return tuple(phrases)

    def _one_verb_phrase(self, verbs) -> VerbPhrase:
        verb = self.next()
        if verb not in verbs:
            raise GrammarError(f"expected one of {verbs}, got {verb!r}")
        return VerbPhrase(verb=verb, groups=self._group_list())

    def _group_list(self) -> tuple[Group, ...]:
        groups = [self._group()]
        while True:
            if self.peek() == ",":
                self.next()
                groups.append(self._group())
            elif self.peek() == "and" and self.peek(1) == "the":
                self.next()
                groups.append(self._group())
                break
            else:
                break
        return tuple(groups)

    def _group(self) -> Group:
        self.expect("the")
        count = 1
        if self.peek() in COUNT_TOKENS:
            count = int(self.next())
        kind = self._kind(plural=count >= 2)
        dirs = [self._dir_phrase()]
        while self.peek() == "and" and self.peek(1) in _DIR_STARTERS:
            self.next()
            dirs.append(self._dir_phrase())
        return Group(kind=kind, count=count, dirs=tuple(dirs))

    def _dir_phrase(self) -> str:
        tok = self.next()
        if tok in ("above", "below"):
            self.expect("her")
            return f"{tok} her"
        if tok == "on":
            self.expect("the")
            side = self.next()
            if side not in ("left", "right"):
                raise GrammarError(f"bad side {side!r}")
            return f"on the {side}"
        if tok == "in":
            self.expect("the")
            corner = self.next()
            if corner not in ("upper-left", "upper-right", "lower-left", "lower-right"):
                raise GrammarError(f"bad corner {corner!r}")
            return f"in the {corner}"
        raise GrammarError(f"expected a direction phrase, got {tok!r}")


def parse_explanation(tokens) -> ParsedExplanation:
    """Parse a token sequence; raises GrammarError if it is not grammatical."""
    if not tokens:
        raise GrammarError("empty token sequence")
    return _Parser(tokens).parse()


def is_grammatical(tokens) -> bool:
    try:
        parse_explanation(tokens)
        return True
    except GrammarError:
        return False
