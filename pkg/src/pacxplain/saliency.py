"""Object saliency via masking.

An object's saliency is the change in the chosen action's Q-value when the
object is removed from the state. Signs are then unified so that larger
always means more important, for every kind: removing a ghost raises Q
(delta kept as-is), removing a beneficial object lowers Q (delta negated).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import FormatError, UsageError
from .gridworld import CELL_PX, GameState, ObjectKind, PACMAN_ID
from .qagent import QProvider, argmax_action

SALIENCY_CHANNELS = 6
SALIENCY_MAGIC = "XRLSAL1"


@dataclass(frozen=True)
class ObjectSaliency:
    object_id: int
    kind: ObjectKind
    raw_delta: float
    unified: float


def mask_object(state: GameState, object_id: int) -> GameState:
    """State with one object removed, as if it never appeared."""
    if object_id == PACMAN_ID:
        raise UsageError("cannot mask pacman")
    remaining = tuple(o for o in state.objects if o.id != object_id)
    if len(remaining) == len(state.objects):
        raise UsageError(f"no object with id {object_id}")
    return replace(state, objects=remaining)


def object_saliency(qp: QProvider, state: GameState, object_id: int) -> ObjectSaliency:
    """Saliency of one object for the agent's chosen action a*."""
    if object_id == PACMAN_ID:
        raise UsageError("cannot mask pacman")
    obj = state.object_by_id(object_id)
    best = argmax_action(qp, state)
    q_full = qp.q_values(state)[best]
    q_masked = qp.q_values(mask_object(state, object_id))[best]
    raw = float(q_masked - q_full)
    unified = raw if obj.kind == ObjectKind.GHOST else -raw
    return ObjectSaliency(object_id=object_id, kind=obj.kind, raw_delta=raw, unified=unified)


def all_saliencies(qp: QProvider, state: GameState) -> list[ObjectSaliency]:
    """Saliency of every non-pacman object, in object-id order."""
    best = argmax_action(qp, state)
    q_full = qp.q_values(state)[best]
    out = []
    for obj in sorted(state.objects, key=lambda o: o.id):
        q_masked = qp.q_values(mask_object(state, obj.id))[best]
        raw = float(q_masked - q_full)
        unified = raw if obj.kind == ObjectKind.GHOST else -raw
        out.append(ObjectSaliency(obj.id, obj.kind, raw, unified))
    return out


def saliency_tensor(qp: QProvider, state: GameState) -> np.ndarray:
    """(H*5, W*5, 6) float32 map: each object's rendered block carries its
    unified saliency in its kind's channel (max on same-kind overlap); the
    pacman channel carries 1 at pacman's block."""
    maze = state.maze
    tensor = np.zeros((maze.height * CELL_PX, maze.width * CELL_PX, SALIENCY_CHANNELS), dtype=np.float32)
    blocks: dict[tuple[ObjectKind, tuple[int, int]], float] = {}
    for sal in all_saliencies(qp, state):
        obj = state.object_by_id(sal.object_id)
        key = (sal.kind, obj.pos)
        if key not in blocks or sal.unified > blocks[key]:
            blocks[key] = sal.unified
    for (kind, (col, row)), value in blocks.items():
        tensor[
            row * CELL_PX : (row + 1) * CELL_PX,
            col * CELL_PX : (col + 1) * CELL_PX,
            kind,
        ] = np.float32(value)
    col, row = state.pacman_pos
    tensor[
        row * CELL_PX : (row + 1) * CELL_PX,
        col * CELL_PX : (col + 1) * CELL_PX,
        ObjectKind.PACMAN,
    ] = 1.0
    return tensor


def save_saliency(path, tensor: np.ndarray) -> None:
    """Binary export: ASCII header line, then channel-major little-endian f32."""
    h, w, c = tensor.shape
    with open(path, "wb") as fh:
        fh.write(f"{SALIENCY_MAGIC} {h} {w} {c}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(tensor.transpose(2, 0, 1), dtype="<f4").tobytes())


def load_saliency(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline()
        parts = header.decode("ascii", errors="replace").split()
        if len(parts) != 4 or parts[0] != SALIENCY_MAGIC:
            raise FormatError("bad saliency header", offset=0)
        h, w, c = (int(p) for p in parts[1:])
        payload = fh.read()
        expected = h * w * c * 4
        if len(payload) != expected:
            raise FormatError(
                f"saliency payload has {len(payload)} bytes, expected {expected}",
                offset=len(header) + len(payload),
            )
        arr = np.frombuffer(payload, dtype="<f4").reshape(c, h, w)
        return np.ascontiguousarray(arr.transpose(1, 2, 0))
