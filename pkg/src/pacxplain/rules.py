"""Rule-based verbal explanations.

Pipeline per frame: keep salient objects near pacman, cap how many may be
mentioned, split them into objects the action agrees with (approach food,
avoid ghosts) and objects it contradicts, then render fixed templates. A
frame with no "agrees" objects is unexplainable and skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import UsageError
from .gridworld import BENEFICIAL_KINDS, Cell, Direction, GameState, ObjectKind
from .saliency import ObjectSaliency

VERB_EAT = "eat"
VERB_AVOID = "avoid"
VERB_APPROACHING = "approaching"
VERB_LEAVING = "leaving"


@dataclass(frozen=True)
class RuleConfig:
    attention_radius: int = 8
    max_objects: int = 4
    max_dots: int = 1

    def __post_init__(self):
        if self.attention_radius < 1:
            raise UsageError("attention_radius must be >= 1")
        if self.max_objects < 1:
            raise UsageError("max_objects must be >= 1")


class RelDir(Enum):
    """Eight relative positions, as they appear in the rendered text."""

    RIGHT = ("on", "the", "right")
    UPPER_RIGHT = ("in", "the", "upper-right")
    ABOVE = ("above", "her")
    UPPER_LEFT = ("in", "the", "upper-left")
    LEFT = ("on", "the", "left")
    LOWER_LEFT = ("in", "the", "lower-left")
    BELOW = ("below", "her")
    LOWER_RIGHT = ("in", "the", "lower-right")

    @property
    def tokens(self) -> tuple[str, ...]:
        return self.value


# sectors counter-clockwise from east, 45 degrees apart
_SECTOR_ORDER = (
    RelDir.RIGHT,
    RelDir.UPPER_RIGHT,
    RelDir.ABOVE,
    RelDir.UPPER_LEFT,
    RelDir.LEFT,
    RelDir.LOWER_LEFT,
    RelDir.BELOW,
    RelDir.LOWER_RIGHT,
)


def relative_direction(pacman: Cell, obj: Cell) -> RelDir:
    """Octant of the object as seen from pacman. Exact sector boundaries
    (odd multiples of 22.5 degrees) resolve toward the diagonal."""
    dx = obj[0] - pacman[0]
    dy = pacman[1] - obj[1]  # screen rows grow downward; flip to math y
    if dx == 0 and dy == 0:
        raise UsageError("object shares pacman's cell; no relative direction")
    deg = math.degrees(math.atan2(dy, dx)) % 360.0
    best = None
    for i, sector in enumerate(_SECTOR_ORDER):
        diff = abs(deg - 45.0 * i)
        diff = min(diff, 360.0 - diff)
        # diagonals sit at odd indices; prefer them on exact ties
        key = (diff, i % 2 == 0)
        if best is None or key < best[0]:
            best = (key, sector)
    return best[1]


@dataclass(frozen=True)
class AccordanceClass:
    """Selected objects split by whether the action matches expectations.

    class1 holds (saliency, verb) pairs the move agrees with (eat/avoid),
    class2 pairs it contradicts (approaching a ghost, leaving food).
    """

    class1: tuple[tuple[ObjectSaliency, str], ...]
    class2: tuple[tuple[ObjectSaliency, str], ...]


@dataclass(frozen=True)
class Explanation:
    text: tuple[str, ...]
    action: Direction
    selected: tuple[ObjectSaliency, ...]
    classes: AccordanceClass
    explainable: bool

    def text_str(self) -> str:
        return " ".join(self.text)


def attention_filter(
    state: GameState, sal: list[ObjectSaliency], cfg: RuleConfig
) -> list[ObjectSaliency]:
    """Keep objects within the attention radius (BFS cells from pacman) that
    carry strictly positive unified saliency."""
    dmap = state.maze.distance_map(state.pacman_pos)
    kept = []
    for s in sal:
        obj = state.object_by_id(s.object_id)
        d = dmap[obj.pos[1], obj.pos[0]]
        if 0 <= d <= cfg.attention_radius and s.unified > 0:
            kept.append(s)
    return kept


def _selection_key(s: ObjectSaliency):
    # unified descending, then kind priority, then id
    return (-s.unified, int(s.kind), s.object_id)


def select_objects(
    candidates: list[ObjectSaliency], cfg: RuleConfig
) -> list[ObjectSaliency]:
    """Cap the mention set: top specials (non-dot) by unified saliency, plus
    at most one dot, and at most max_objects in total. The best dot joins
    only if nothing else was kept or it beats the weakest kept special; when
    that overflows the cap the weakest special gives way."""
    specials = sorted((s for s in candidates if s.kind != ObjectKind.DOT), key=_selection_key)
    kept = specials[: cfg.max_objects]
    dots = sorted((s for s in candidates if s.kind == ObjectKind.DOT), key=_selection_key)
    if dots:
        best_dot = dots[0]
        if not kept:
            kept = [best_dot]
        elif best_dot.unified > min(s.unified for s in kept):
            kept = kept + [best_dot]
            if len(kept) > cfg.max_objects:
                weakest = max(kept[:-1], key=lambda s: _selection_key(s))
                kept = [s for s in kept if s is not weakest]
    return sorted(kept, key=_selection_key)


def classify_accordance(
    state: GameState, action: Direction, selected: list[ObjectSaliency]
) -> AccordanceClass:
    """Compare BFS distance to each object before and after pacman's move.
    Approaching food / backing off a ghost accords with expectations."""
    maze = state.maze
    dc, dr = action.delta
    post = (state.pacman_pos[0] + dc, state.pacman_pos[1] + dr)
    if maze.is_wall(post):
        post = state.pacman_pos
    d0_map = maze.distance_map(state.pacman_pos)
    d1_map = maze.distance_map(post)
    class1 = []
    class2 = []
    for s in selected:
        obj = state.object_by_id(s.object_id)
        d0 = d0_map[obj.pos[1], obj.pos[0]]
        d1 = d1_map[obj.pos[1], obj.pos[0]]
        if s.kind in BENEFICIAL_KINDS:
            if d1 < d0:
                class1.append((s, VERB_EAT))
            else:
                class2.append((s, VERB_LEAVING))
        else:
            if d1 > d0:
                class1.append((s, VERB_AVOID))
            else:
                class2.append((s, VERB_APPROACHING))
    return AccordanceClass(class1=tuple(class1), class2=tuple(class2))


# --- template rendering ----------------------------------------------------

_SINGULAR = {
    ObjectKind.GHOST: ("ghost",),
    ObjectKind.EDIBLE_GHOST: ("edible", "ghost"),
    ObjectKind.CHERRY: ("cherry",),
    ObjectKind.PELLET: ("pellet",),
    ObjectKind.DOT: ("dot",),
}
_PLURAL = {
    ObjectKind.GHOST: ("ghosts",),
    ObjectKind.EDIBLE_GHOST: ("edible", "ghosts"),
    ObjectKind.CHERRY: ("cherries",),
    ObjectKind.PELLET: ("pellets",),
    ObjectKind.DOT: ("dots",),
}


def _attention_sentence(selected) -> list[str]:
    kinds = sorted({s.kind for s in selected})
    tokens = ["objects(object)"]
    for i, kind in enumerate(kinds):
        if len(kinds) >= 2 and i == len(kinds) - 1:
            tokens.append("and")
        tokens.extend(_SINGULAR[kind])
    tokens.extend(["have", "drawn", "attention", "of", "pacman", "."])
    return tokens


def _group_tokens(kind: ObjectKind, members, state: GameState) -> list[str]:
    """One noun phrase: "the [N] <kind(s)> <dir> [and <dir> ...]"."""
    tokens = ["the"]
    if len(members) >= 2:
        tokens.append(str(len(members)))
        tokens.extend(_PLURAL[kind])
    else:
        tokens.extend(_SINGULAR[kind])
    for i, s in enumerate(members):
        if i > 0:
            tokens.append("and")
        obj = state.object_by_id(s.object_id)
        tokens.extend(relative_direction(state.pacman_pos, obj.pos).tokens)
    return tokens


def _group_list_tokens(entries, state: GameState) -> list[str]:
    """Groups per kind, priority order, joined ", " with "and" before the last."""
    by_kind: dict[ObjectKind, list[ObjectSaliency]] = {}
    for s, _verb in entries:
        by_kind.setdefault(s.kind, []).append(s)
    groups = []
    for kind in sorted(by_kind):
        members = sorted(by_kind[kind], key=_selection_key)
        groups.append(_group_tokens(kind, members, state))
    tokens: list[str] = []
    for i, group in enumerate(groups):
        if i > 0:
            tokens.append("and" if i == len(groups) - 1 else ",")
        tokens.extend(group)
    return tokens


def _verb_phrases(entries, verb_order, state: GameState) -> list[str]:
    tokens: list[str] = []
    for verb in verb_order:
        bucket = [(s, v) for s, v in entries if v == verb]
        if not bucket:
            continue
        if tokens:
            tokens.append("and")
        tokens.append(verb)
        tokens.extend(_group_list_tokens(bucket, state))
    return tokens


def explain(
    state: GameState,
    action: Direction,
    sal: list[ObjectSaliency],
    cfg: RuleConfig | None = None,
) -> Explanation:
    """Full rule pipeline: filter, select, classify, render.

    Both classes present -> attention sentence, "moves <dir> to ..." and an
    "as a result ..." sentence. Class #1 alone -> the two-sentence
    "is moving ... because he wants to ..." form. Class #2 alone (or nothing
    selected) -> unexplainable, empty text.
    """
    cfg = cfg or RuleConfig()
    candidates = attention_filter(state, sal, cfg)
    selected = tuple(select_objects(candidates, cfg))
    classes = classify_accordance(state, action, list(selected)) if selected else AccordanceClass((), ())
    if not classes.class1:
        return Explanation(
            text=(), action=action, selected=selected, classes=classes, explainable=False
        )

    dir_token = action.name.lower()
    if classes.class2:
        tokens = _attention_sentence(selected)
        tokens += ["the", "pacman", "moves", dir_token, "to"]
        tokens += _verb_phrases(classes.class1, (VERB_EAT, VERB_AVOID), state)
        tokens.append(".")
        tokens += ["as", "a", "result", ",", "the", "pacman", "is"]
        tokens += _verb_phrases(classes.class2, (VERB_APPROACHING, VERB_LEAVING), state)
        tokens.append(".")
    else:
        tokens = ["the", "pacman", "is", "moving", dir_token, "."]
        tokens += ["because", "he", "wants", "to"]
        tokens += _verb_phrases(classes.class1, (VERB_EAT, VERB_AVOID), state)
        tokens.append(".")
    return Explanation(
        text=tuple(tokens),
        action=action,
        selected=selected,
        classes=classes,
        explainable=True,
    )
