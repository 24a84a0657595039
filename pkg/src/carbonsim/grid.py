"""Two-dimensional map: agent positions, built properties, certified projects,
and per-cell pollution.

Cell content is one of empty / property(owner) / project(complete flag);
content is permanent within an episode once placed. Pollution only ever
attaches to cells that were empty when polluted.
"""

from __future__ import annotations

from typing import NamedTuple

from .config import RngStream

EMPTY = 0
PROPERTY = 1
PROJECT = 2

DIRECTIONS = {"N": (0, 1), "S": (0, -1), "E": (1, 0), "W": (-1, 0)}
DIRECTION_NAMES = ("N", "S", "E", "W")


class Cell(NamedTuple):
    kind: int
    owner: int  # enterprise id for PROPERTY, else -1
    complete: bool  # meaningful for PROJECT only
    pollution: float


class MoveResult(NamedTuple):
    kind: str  # "moved" | "blocked" | "project"
    pos: tuple[int, int] | None


class Grid:
    def __init__(self, width: int, height: int):
        n = width * height
        self.width = width
        self.height = height
        self.kind = bytearray(n)
        self.owner = [-1] * n
        self.complete = bytearray(n)
        self.pollution = [0.0] * n
        self.agent_positions: dict[int, tuple[int, int]] = {}
        self._agent_at: dict[tuple[int, int], int] = {}
        self.occupied = bytearray(n)  # 1 where an agent stands (index mirror of _agent_at)
        self.n_properties = 0
        self.n_projects = 0

    def _idx(self, x: int, y: int) -> int:
        return y * self.width + x

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def cell(self, x: int, y: int) -> Cell:
        i = self._idx(x, y)
        return Cell(self.kind[i], self.owner[i], bool(self.complete[i]), self.pollution[i])

    def place_agent(self, agent: int, pos: tuple[int, int]) -> None:
        if pos in self._agent_at:
            raise ValueError(f"cell {pos} already holds an agent")
        if self.kind[self._idx(*pos)] != EMPTY:
            raise ValueError(f"cell {pos} is not empty")
        self.agent_positions[agent] = pos
        self._agent_at[pos] = agent
        self.occupied[self._idx(*pos)] = 1

    def try_move(self, agent: int, direction: str) -> MoveResult:
        """Resolve a move; project entry effects are applied by the caller.

        Blocked when the target is off-map, holds an agent, holds any
        property (own included), or holds a completed project. An incomplete
        project yields a "project" result with the agent staying put.
        """
        if agent not in self.agent_positions:
            raise KeyError(f"unknown agent {agent}")
        x, y = self.agent_positions[agent]
        dx, dy = DIRECTIONS[direction]
        nx, ny = x + dx, y + dy
        if not self.in_bounds(nx, ny):
            return MoveResult("blocked", None)
        i = self._idx(nx, ny)
        if self.occupied[i]:
            return MoveResult("blocked", None)
        k = self.kind[i]
        if k == PROPERTY:
            return MoveResult("blocked", None)
        if k == PROJECT:
            if self.complete[i]:
                return MoveResult("blocked", None)
            return MoveResult("project", (nx, ny))
        del self._agent_at[(x, y)]
        self.occupied[self._idx(x, y)] = 0
        self.agent_positions[agent] = (nx, ny)
        self._agent_at[(nx, ny)] = agent
        self.occupied[i] = 1
        return MoveResult("moved", (nx, ny))

    def place_property(self, pos: tuple[int, int], owner: int) -> None:
        i = self._idx(*pos)
        if self.kind[i] != EMPTY:
            raise ValueError(f"cell {pos} is not empty")
        if self.agent_positions.get(owner) != pos:
            raise ValueError(f"agent {owner} is not standing at {pos}")
        self.kind[i] = PROPERTY
        self.owner[i] = owner
        self.n_properties += 1

    def apply_pollution(self, center: tuple[int, int], rng: RngStream,
                        radius: int, increment: float, prob: float) -> list[tuple[int, int]]:
        """Independently pollute empty cells within Chebyshev `radius` of center.

        Cells are visited in a fixed row-major order so the draw sequence is
        replay-stable. Returns the cells whose pollution level changed.
        """
        cx, cy = center
        changed = []
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                if dx == 0 and dy == 0:
                    continue
                x, y = cx + dx, cy + dy
                if not self.in_bounds(x, y):
                    continue
                i = self._idx(x, y)
                if self.kind[i] != EMPTY:
                    continue
                if rng.random() < prob:
                    new = min(1.0, self.pollution[i] + increment)
                    if new != self.pollution[i]:
                        self.pollution[i] = new
                        changed.append((x, y))
        return changed

    def production_multiplier(self, pos: tuple[int, int], discount: float) -> float:
        level = self.pollution[self._idx(*pos)]
        return 1.0 - level * discount

    def empty_cells(self) -> list[tuple[int, int]]:
        return [
            (i % self.width, i // self.width)
            for i in range(self.width * self.height)
            if self.kind[i] == EMPTY and not self.occupied[i]
        ]

    def place_project(self, rng: RngStream) -> tuple[int, int]:
        """Turn a uniformly chosen empty, unoccupied cell into an incomplete project."""
        empties = self.empty_cells()
        if not empties:
            raise ValueError("no empty cell available for project placement")
        pos = empties[rng.randrange(len(empties))]
        i = self._idx(*pos)
        self.kind[i] = PROJECT
        self.complete[i] = 0
        self.n_projects += 1
        return pos

    def complete_project(self, pos: tuple[int, int]) -> None:
        i = self._idx(*pos)
        if self.kind[i] != PROJECT or self.complete[i]:
            raise ValueError(f"cell {pos} is not an incomplete project")
        self.complete[i] = 1

    def rle_snapshot(self) -> list[list]:
        """Run-length-encoded cell list: [count, kind, owner, complete, pollution]."""
        runs: list[list] = []
        for i in range(self.width * self.height):
            entry = [self.kind[i], self.owner[i], int(self.complete[i]), self.pollution[i]]
            if runs and runs[-1][1:] == entry:
                runs[-1][0] += 1
            else:
                runs.append([1] + entry)
        return runs
