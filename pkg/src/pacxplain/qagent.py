"""Q-value providers over game states.

ScriptedQ is the default oracle: a closed-form potential field in which every
beneficial object pulls and every inedible ghost pushes, discounted by BFS
distance. It stands in for a pretrained network so that the saliency sign
structure holds by construction and everything downstream is deterministic.

TabularQ is a small Q-learning agent over a compact state abstraction, kept
to show the pipeline also runs on a learned provider.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import FormatError, UsageError
from .gridworld import (
    BENEFICIAL_KINDS,
    Direction,
    GameState,
    Layout,
    ObjectKind,
    _hash64,
    new_game,
    step,
)

QVALUE_DTYPE = np.float64


class QProvider(Protocol):
    def q_values(self, state: GameState) -> np.ndarray:
        """4 reals indexed by Direction. Pure: equal states, equal values."""
        ...


def _post_action_cell(state: GameState, action: Direction):
    dc, dr = action.delta
    cell = (state.pacman_pos[0] + dc, state.pacman_pos[1] + dr)
    return state.pacman_pos if state.maze.is_wall(cell) else cell


SCRIPTED_WEIGHTS = {
    ObjectKind.DOT: 1.0,
    ObjectKind.PELLET: 5.0,
    ObjectKind.CHERRY: 10.0,
    ObjectKind.EDIBLE_GHOST: 20.0,
    ObjectKind.GHOST: 50.0,
}


class ScriptedQ:
    """Q(s,a) = sum over beneficial o of w(o) * gamma^d_a(o)
             - sum over inedible ghosts g of w_ghost * gamma^d_a(g),
    where d_a(x) is the BFS distance from pacman's post-action cell to x
    (the pre-action cell when a is wall-blocked)."""

    def __init__(self, gamma: float = 0.9, weights=None):
        if not 0.0 < gamma < 1.0:
            raise UsageError("gamma must be in (0, 1)")
        self.gamma = gamma
        self.weights = dict(SCRIPTED_WEIGHTS if weights is None else weights)
        if any(w <= 0 for w in self.weights.values()):
            raise UsageError("scripted weights must be positive")
        self._powers = np.power(gamma, np.arange(4096), dtype=QVALUE_DTYPE)

    def q_values(self, state: GameState) -> np.ndarray:
        q = np.zeros(4, dtype=QVALUE_DTYPE)
        for action in Direction:
            cell = _post_action_cell(state, action)
            dmap = state.maze.distance_map(cell)
            total = 0.0
            for obj in state.objects:
                d = dmap[obj.pos[1], obj.pos[0]]
                if d < 0:
                    continue
                w = self.weights[obj.kind] * self._powers[d]
                total += w if obj.kind in BENEFICIAL_KINDS else -w
            q[action] = total
        return q


def argmax_action(qp: QProvider, state: GameState) -> Direction:
    """Greedy action; ties break by Direction order Up < Down < Left < Right."""
    return Direction(int(np.argmax(qp.q_values(state))))


# ---------------------------------------------------------------------------
# Tabular Q-learning over a compact abstraction

OFFSET_CLIP = 4
_NO_OBJECT = (OFFSET_CLIP + 5, OFFSET_CLIP + 5)
_ABS_KINDS = (
    ObjectKind.GHOST,
    ObjectKind.EDIBLE_GHOST,
    ObjectKind.CHERRY,
    ObjectKind.PELLET,
    ObjectKind.DOT,
)


def abstract_state(state: GameState) -> tuple:
    """(pacman cell, clipped offset to the nearest object of each kind)."""
    dmap = state.maze.distance_map(state.pacman_pos)
    offsets = []
    for kind in _ABS_KINDS:
        best = None
        for obj in state.objects:
            if obj.kind != kind:
                continue
            d = dmap[obj.pos[1], obj.pos[0]]
            key = (d, obj.id)
            if best is None or key < best[0]:
                best = (key, obj.pos)
        if best is None:
            offsets.append(_NO_OBJECT)
        else:
            dc = best[1][0] - state.pacman_pos[0]
            dr = best[1][1] - state.pacman_pos[1]
            offsets.append(
                (
                    int(np.clip(dc, -OFFSET_CLIP, OFFSET_CLIP)),
                    int(np.clip(dr, -OFFSET_CLIP, OFFSET_CLIP)),
                )
            )
    return (state.pacman_pos, tuple(offsets))


@dataclass
class TabularQ:
    """Q table over abstract_state keys; missing keys read as 0."""

    learning_rate: float = 0.2
    exploration: float = 0.15
    discount: float = 0.95
    table: dict = field(default_factory=dict)

    def q_values(self, state: GameState) -> np.ndarray:
        key = abstract_state(state)
        vals = self.table.get(key)
        if vals is None:
            return np.zeros(4, dtype=QVALUE_DTYPE)
        return vals.copy()

    def _row(self, key) -> np.ndarray:
        row = self.table.get(key)
        if row is None:
            row = np.zeros(4, dtype=QVALUE_DTYPE)
            self.table[key] = row
        return row


def train_tabular(
    layout: Layout | None,
    episodes: int,
    seed: int = 0,
    max_ticks: int = 120,
    learning_rate: float = 0.2,
    exploration: float = 0.15,
    discount: float = 0.95,
) -> tuple[TabularQ, list[int]]:
    """Standard Q-learning over the abstraction. Deterministic given seed.
    Returns the trained table and the per-episode final score log."""
    if episodes < 1:
        raise UsageError("episodes must be >= 1")
    tq = TabularQ(learning_rate, exploration, discount)
    scores: list[int] = []
    draw = 0
    for ep in range(episodes):
        state = new_game(layout, seed=_hash64(seed, ep) % (1 << 31))
        for _ in range(max_ticks):
            if state.done:
                break
            key = abstract_state(state)
            row = tq._row(key)
            draw += 1
            if _hash64(seed, 7, draw) % 10_000 < exploration * 10_000:
                action = Direction(_hash64(seed, 8, draw) % 4)
            else:
                action = Direction(int(np.argmax(row)))
            nxt, reward, done = step(state, action)
            target = float(reward)
            if not done:
                target += discount * float(np.max(tq._row(abstract_state(nxt))))
            row[action] += learning_rate * (target - row[action])
            state = nxt
        scores.append(state.score)
    return tq, scores


def save_tabular(tq: TabularQ, path) -> None:
    """Sorted key<TAB>4-floats text lines, for diffability."""
    lines = []
    for key, row in tq.table.items():
        (pc, pr), offsets = key
        off = ";".join(f"{dc},{dr}" for dc, dr in offsets)
        lines.append(f"{pc},{pr}|{off}\t" + " ".join(f"{v:.9g}" for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(sorted(lines)))
        if lines:
            fh.write("\n")


def load_tabular(path) -> TabularQ:
    tq = TabularQ()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                keytext, values = line.split("\t")
                pac, off = keytext.split("|")
                pc, pr = (int(v) for v in pac.split(","))
                offsets = tuple(
                    tuple(int(v) for v in part.split(",")) for part in off.split(";")
                )
                row = np.array([float(v) for v in values.split()], dtype=QVALUE_DTYPE)
                if row.shape != (4,):
                    raise ValueError("expected 4 q-values")
            except ValueError as exc:
                raise FormatError(f"bad tabular-q line {lineno}: {exc}") from exc
            tq.table[((pc, pr), offsets)] = row
    return tq
