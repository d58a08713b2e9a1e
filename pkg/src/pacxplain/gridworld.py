"""Deterministic Pacman-like gridworld with pixel rendering.

The world is a walled maze of square cells. Pacman moves one cell per step,
eats what it lands on, and dies on contact with an inedible ghost. Ghosts
chase when close, flee while edible, and otherwise wander on a seeded hash
stream, so a whole episode is a pure function of (layout, seed, actions).

Rendering maps each cell to a 5x5 pixel block; the default 20x20 board
therefore renders at 100x100 pixels.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import LayoutError, UsageError

CELL_PX = 5

# reward points per eaten object kind
DOT_POINTS = 10
PELLET_POINTS = 50
CHERRY_POINTS = 100
EDIBLE_GHOST_POINTS = 200
DEATH_REWARD = -500

FRIGHTEN_TICKS = 40
CHASE_RADIUS = 6
DOT_FRACTION = 0.35

# id 0 is reserved for pacman herself; real objects start at 1
PACMAN_ID = 0


class Direction(IntEnum):
    """Movement actions. Row 0 is the top of the maze."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def delta(self) -> tuple[int, int]:
        """(dcol, drow) offset of one step in this direction."""
        return _DELTAS[self]


_DELTAS = {
    Direction.UP: (0, -1),
    Direction.DOWN: (0, 1),
    Direction.LEFT: (-1, 0),
    Direction.RIGHT: (1, 0),
}


class ObjectKind(IntEnum):
    """Object kinds. The numeric value doubles as both the saliency channel
    index and the mention-priority rank (lower value = higher priority)."""

    GHOST = 0
    EDIBLE_GHOST = 1
    CHERRY = 2
    PELLET = 3
    DOT = 4
    PACMAN = 5


BENEFICIAL_KINDS = frozenset(
    {ObjectKind.EDIBLE_GHOST, ObjectKind.CHERRY, ObjectKind.PELLET, ObjectKind.DOT}
)
ITEM_KINDS = frozenset({ObjectKind.CHERRY, ObjectKind.PELLET, ObjectKind.DOT})

# Render colors, RGB in [0, 1]. All distinct; background distinct from all.
BACKGROUND_COLOR = (0.0, 0.0, 0.0)
KIND_COLORS = {
    ObjectKind.GHOST: (1.0, 0.0, 0.0),
    ObjectKind.EDIBLE_GHOST: (0.2, 0.4, 1.0),
    ObjectKind.CHERRY: (1.0, 0.0, 1.0),
    ObjectKind.PELLET: (0.0, 1.0, 0.0),
    ObjectKind.DOT: (1.0, 0.8, 0.4),
    ObjectKind.PACMAN: (1.0, 1.0, 0.0),
}

# draw order: later kinds cover earlier ones when sharing a cell
_Z_ORDER = {
    ObjectKind.DOT: 0,
    ObjectKind.PELLET: 1,
    ObjectKind.CHERRY: 2,
    ObjectKind.EDIBLE_GHOST: 3,
    ObjectKind.GHOST: 4,
}

Cell = tuple[int, int]


class Maze:
    """Immutable wall grid. Border cells must be walls and the free cells must
    form one 4-connected component."""

    def __init__(self, walls: np.ndarray):
        walls = np.asarray(walls, dtype=bool)
        if walls.ndim != 2:
            raise LayoutError("maze walls must be a 2-D grid")
        self.height, self.width = walls.shape
        self.walls = walls
        self.walls.setflags(write=False)
        self._dist_maps: dict[Cell, np.ndarray] = {}
        self._validate()

    def _validate(self) -> None:
        w = self.walls
        if self.width < 3 or self.height < 3:
            raise LayoutError("maze too small")
        if not (w[0, :].all() and w[-1, :].all() and w[:, 0].all() and w[:, -1].all()):
            raise LayoutError("maze border must be all walls")
        free = self.free_cells()
        if not free:
            raise LayoutError("maze has no free cells")
        reached = self._bfs_from(free[0])
        if (reached >= 0).sum() != len(free):
            raise LayoutError("free cells are not a single connected component")

    def is_wall(self, cell: Cell) -> bool:
        col, row = cell
        if not (0 <= col < self.width and 0 <= row < self.height):
            return True
        return bool(self.walls[row, col])

    def free_cells(self) -> list[Cell]:
        """All non-wall cells in row-major order."""
        rows, cols = np.nonzero(~self.walls)
        return [(int(c), int(r)) for r, c in zip(rows, cols)]

    def _bfs_from(self, src: Cell) -> np.ndarray:
        dist = np.full((self.height, self.width), -1, dtype=np.int32)
        col, row = src
        dist[row, col] = 0
        q = deque([src])
        while q:
            c, r = q.popleft()
            d = dist[r, c] + 1
            for dc, dr in ((0, -1), (0, 1), (-1, 0), (1, 0)):
                nc, nr = c + dc, r + dr
                if not self.walls[nr, nc] and dist[nr, nc] < 0:
                    dist[nr, nc] = d
                    q.append((nc, nr))
        dist.setflags(write=False)
        return dist

    def distance_map(self, src: Cell) -> np.ndarray:
        """BFS distances from src to every cell (-1 for walls/unreachable).

        Maps are memoized on the maze; walls never change so entries stay valid.
        """
        if self.is_wall(src):
            raise UsageError(f"distance_map source {src} is a wall")
        cached = self._dist_maps.get(src)
        if cached is None:
            cached = self._bfs_from(src)
            self._dist_maps[src] = cached
        return cached

    def __eq__(self, other) -> bool:
        return isinstance(other, Maze) and np.array_equal(self.walls, other.walls)

    def __hash__(self):
        return hash((self.width, self.height, self.walls.tobytes()))


@dataclass(frozen=True)
class Layout:
    """A maze plus the start cells read from a layout file."""

    maze: Maze
    pacman_start: Cell
    ghost_starts: tuple[Cell, ...]


@dataclass(frozen=True)
class GameObject:
    """One non-pacman entity on the board.

    `home` is the respawn cell for ghosts (None for items). A ghost's kind is
    GHOST while edible_ticks == 0 and EDIBLE_GHOST while edible_ticks > 0.
    """

    id: int
    kind: ObjectKind
    pos: Cell
    edible_ticks: int = 0
    home: Cell | None = None


@dataclass(frozen=True)
class GameState:
    maze: Maze
    objects: tuple[GameObject, ...]
    pacman_pos: Cell
    pacman_dir: Direction
    score: int
    tick: int
    rng_state: int
    done: bool = False

    def object_by_id(self, object_id: int) -> GameObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise UsageError(f"no object with id {object_id}")


DEFAULT_LAYOUT_TEXT = """\
####################
#........#.........#
#.##.###.#.###.##.##
#..................#
#.##.#.#####.#.##..#
#....#...#...#.....#
####.###.#.###.#####
#......#.G.#.......#
#.####.#.#.#.####..#
#......#...#.......#
#.####.#####.####..#
#........G.........#
#.##.###.#.###.##..#
#..#.....#.....#...#
#..#.##.###.##.#...#
#......#...#.......#
#.####.#.#.#.####..#
#....#...P...#.....#
#.##.###.#.###.##..#
####################"""


def parse_layout(text: str) -> Layout:
    """Parse a layout file: '#'=wall, '.'=free, 'P'=pacman start, 'G'=ghost start.

    Strict: rows must be equal length, charset is fixed, exactly one P.
    """
    rows = text.rstrip("\n").split("\n")
    if not rows:
        raise LayoutError("empty layout")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise LayoutError("layout rows have unequal lengths")
    pacman = None
    ghosts = []
    walls = np.zeros((len(rows), width), dtype=bool)
    for r, line in enumerate(rows):
        for c, ch in enumerate(line):
            if ch == "#":
                walls[r, c] = True
            elif ch == "P":
                if pacman is not None:
                    raise LayoutError("layout has more than one pacman start")
                pacman = (c, r)
            elif ch == "G":
                ghosts.append((c, r))
            elif ch != ".":
                raise LayoutError(f"invalid layout character {ch!r} at row {r}, col {c}")
    if pacman is None:
        raise LayoutError("layout has no pacman start ('P')")
    return Layout(maze=Maze(walls), pacman_start=pacman, ghost_starts=tuple(ghosts))


def default_layout() -> Layout:
    return parse_layout(DEFAULT_LAYOUT_TEXT)


def _hash64(*vals: int) -> int:
    """Deterministic splitmix64-style mix of integers; the game's only RNG."""
    mask = (1 << 64) - 1
    x = 0x243F6A8885A308D3
    for v in vals:
        x = (x + (v & mask)) & mask
        x ^= x >> 30
        x = (x * 0xBF58476D1CE4E5B9) & mask
        x ^= x >> 27
        x = (x * 0x94D049BB133111EB) & mask
        x ^= x >> 31
    return x


def _nearest_free(maze: Maze, target: Cell, taken: set[Cell]) -> Cell:
    """Free cell closest to target by Manhattan distance, row-major tie-break."""
    best = None
    for col, row in maze.free_cells():
        if (col, row) in taken:
            continue
        d = abs(col - target[0]) + abs(row - target[1])
        key = (d, row, col)
        if best is None or key < best[0]:
            best = (key, (col, row))
    if best is None:
        raise LayoutError("no free cell available for placement")
    return best[1]


def new_game(layout: Layout | None = None, seed: int = 0) -> GameState:
    """Build the initial state: pellets at the corners' nearest free cells,
    2 ghosts (or the layout's G markers), 1 cherry, dots on a fixed fraction
    of the remaining free cells. All placement is a pure function of seed."""
    if layout is None:
        layout = default_layout()
    maze = layout.maze
    pacman = layout.pacman_start
    if maze.is_wall(pacman):
        raise LayoutError("pacman start is a wall")

    objects: list[GameObject] = []
    next_id = PACMAN_ID + 1
    taken = {pacman}

    ghost_starts = layout.ghost_starts
    if not ghost_starts:
        free = [c for c in maze.free_cells() if c not in taken]
        picks = sorted(free, key=lambda c: _hash64(seed, 101, c[0], c[1]))[:2]
        ghost_starts = tuple(picks)
    for cell in ghost_starts:
        if maze.is_wall(cell):
            raise LayoutError("ghost start is a wall")
        objects.append(GameObject(next_id, ObjectKind.GHOST, cell, home=cell))
        next_id += 1
    taken.update(ghost_starts)

    corners = [
        (1, 1),
        (maze.width - 2, 1),
        (1, maze.height - 2),
        (maze.width - 2, maze.height - 2),
    ]
    pellet_cells: list[Cell] = []
    for corner in corners:
        cell = _nearest_free(maze, corner, taken)
        pellet_cells.append(cell)
        taken.add(cell)
    for cell in pellet_cells:
        objects.append(GameObject(next_id, ObjectKind.PELLET, cell))
        next_id += 1

    eligible = [c for c in maze.free_cells() if c not in taken]
    cherry_cell = sorted(eligible, key=lambda c: _hash64(seed, 202, c[0], c[1]))[0]
    objects.append(GameObject(next_id, ObjectKind.CHERRY, cherry_cell))
    next_id += 1
    taken.add(cherry_cell)

    eligible = [c for c in eligible if c != cherry_cell]
    n_dots = int(len(eligible) * DOT_FRACTION)
    dot_cells = sorted(eligible, key=lambda c: _hash64(seed, 303, c[0], c[1]))[:n_dots]
    for cell in sorted(dot_cells, key=lambda c: (c[1], c[0])):
        objects.append(GameObject(next_id, ObjectKind.DOT, cell))
        next_id += 1

    return GameState(
        maze=maze,
        objects=tuple(objects),
        pacman_pos=pacman,
        pacman_dir=Direction.LEFT,
        score=0,
        tick=0,
        rng_state=seed,
    )


def _board_cleared(objects) -> bool:
    return not any(o.kind in ITEM_KINDS for o in objects)


def _ghost_move(state: GameState, ghost: GameObject, pacman: Cell) -> Cell:
    """One ghost step: flee while edible, chase when near, otherwise wander."""
    maze = state.maze
    options = []
    for d in Direction:
        dc, dr = d.delta
        cell = (ghost.pos[0] + dc, ghost.pos[1] + dr)
        if not maze.is_wall(cell):
            options.append(cell)
    if not options:
        return ghost.pos
    dmap = maze.distance_map(pacman)
    if ghost.edible_ticks > 0:
        return max(options, key=lambda c: (dmap[c[1], c[0]], -options.index(c)))
    here = dmap[ghost.pos[1], ghost.pos[0]]
    if here <= CHASE_RADIUS:
        return min(options, key=lambda c: (dmap[c[1], c[0]], options.index(c)))
    pick = _hash64(state.rng_state, state.tick, ghost.id) % len(options)
    return options[pick]


def step(state: GameState, action: Direction) -> tuple[GameState, int, bool]:
    """Advance one tick. Returns (next_state, reward, done).

    Reward is the points eaten this step, or -500 when pacman dies (death
    overrides; the score only ever accumulates positive rewards).
    """
    if state.done:
        raise UsageError("cannot step a terminal state")

    maze = state.maze
    dc, dr = action.delta
    dest = (state.pacman_pos[0] + dc, state.pacman_pos[1] + dr)
    if maze.is_wall(dest):
        dest = state.pacman_pos
        new_dir = state.pacman_dir
    else:
        new_dir = action

    # pacman walking into an inedible ghost ends the episode immediately
    for obj in state.objects:
        if obj.pos == dest and obj.kind == ObjectKind.GHOST:
            next_state = replace(
                state,
                pacman_pos=dest,
                pacman_dir=new_dir,
                tick=state.tick + 1,
                done=True,
            )
            return next_state, DEATH_REWARD, True

    points = 0
    frighten = False
    survivors: list[GameObject] = []
    respawned_ids: set[int] = set()
    for obj in state.objects:
        if obj.pos != dest:
            survivors.append(obj)
            continue
        if obj.kind == ObjectKind.DOT:
            points += DOT_POINTS
        elif obj.kind == ObjectKind.PELLET:
            points += PELLET_POINTS
            frighten = True
        elif obj.kind == ObjectKind.CHERRY:
            points += CHERRY_POINTS
        elif obj.kind == ObjectKind.EDIBLE_GHOST:
            points += EDIBLE_GHOST_POINTS
            survivors.append(
                replace(obj, kind=ObjectKind.GHOST, pos=obj.home, edible_ticks=0)
            )
            respawned_ids.add(obj.id)
        else:
            survivors.append(obj)

    if frighten:
        survivors = [
            replace(o, kind=ObjectKind.EDIBLE_GHOST, edible_ticks=FRIGHTEN_TICKS)
            if o.kind in (ObjectKind.GHOST, ObjectKind.EDIBLE_GHOST)
            and o.id not in respawned_ids
            else o
            for o in survivors
        ]

    # ghosts move after pacman; freshly respawned ghosts sit out this tick
    moved: list[GameObject] = []
    died = False
    for obj in survivors:
        if obj.kind not in (ObjectKind.GHOST, ObjectKind.EDIBLE_GHOST):
            moved.append(obj)
            continue
        if obj.id in respawned_ids:
            moved.append(obj)
            continue
        cell = _ghost_move(state, obj, dest)
        obj = replace(obj, pos=cell)
        if cell == dest:
            if obj.kind == ObjectKind.EDIBLE_GHOST:
                points += EDIBLE_GHOST_POINTS
                obj = replace(obj, kind=ObjectKind.GHOST, pos=obj.home, edible_ticks=0)
            else:
                died = True
        moved.append(obj)

    # frighten timers run down at the end of every tick
    final: list[GameObject] = []
    for obj in moved:
        if obj.edible_ticks > 0:
            ticks = obj.edible_ticks - 1
            kind = ObjectKind.EDIBLE_GHOST if ticks > 0 else ObjectKind.GHOST
            obj = replace(obj, edible_ticks=ticks, kind=kind)
        final.append(obj)

    reward = DEATH_REWARD if died else points
    done = died or _board_cleared(final)
    next_state = replace(
        state,
        objects=tuple(final),
        pacman_pos=dest,
        pacman_dir=new_dir,
        score=state.score + max(reward, 0),
        tick=state.tick + 1,
        done=done,
    )
    return next_state, reward, done


def _fill_block(pixels: np.ndarray, cell: Cell, value) -> None:
    col, row = cell
    pixels[row * CELL_PX : (row + 1) * CELL_PX, col * CELL_PX : (col + 1) * CELL_PX] = value


def render(state: GameState) -> np.ndarray:
    """Render to (H*5, W*5, 3) float32 in [0,1]. Pure function of the state:
    background everywhere, one flat 5x5 color block per object, pacman last."""
    maze = state.maze
    pixels = np.empty((maze.height * CELL_PX, maze.width * CELL_PX, 3), dtype=np.float32)
    pixels[:] = BACKGROUND_COLOR
    for obj in sorted(state.objects, key=lambda o: (_Z_ORDER[o.kind], o.id)):
        _fill_block(pixels, obj.pos, KIND_COLORS[obj.kind])
    _fill_block(pixels, state.pacman_pos, KIND_COLORS[ObjectKind.PACMAN])
    return pixels


def render_pacman(state: GameState) -> np.ndarray:
    """Binary (H*5, W*5) float32 map with exactly pacman's block set to 1."""
    maze = state.maze
    pixels = np.zeros((maze.height * CELL_PX, maze.width * CELL_PX), dtype=np.float32)
    _fill_block(pixels, state.pacman_pos, 1.0)
    return pixels


def bfs_distance(state: GameState, src: Cell, dst: Cell) -> int | None:
    """Shortest 4-connected path length between two free cells (None if
    unreachable, which a valid maze never produces)."""
    maze = state.maze
    if maze.is_wall(src):
        raise UsageError(f"bfs_distance source {src} is a wall")
    if maze.is_wall(dst):
        raise UsageError(f"bfs_distance target {dst} is a wall")
    d = int(maze.distance_map(src)[dst[1], dst[0]])
    return d if d >= 0 else None
