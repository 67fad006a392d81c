"""Deterministic grid world and its value-iteration oracle."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# N, E, S, W as (d_row, d_col)
MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))
ACTION_NAMES = ("N", "E", "S", "W")

Cell = tuple[int, int]


@dataclass(frozen=True)
class GridWorld:
    """Grid with walls and one absorbing goal.

    Entering the goal pays 1 and ends the episode; every other move pays
    ``step_reward``. Bumping into a wall or the border leaves the agent in
    place. With ``start=None`` episodes begin in a uniformly random free cell.
    """

    width: int
    height: int
    goal: Cell
    walls: frozenset = field(default_factory=frozenset)
    start: Optional[Cell] = None
    step_reward: float = 0.0

    num_actions = 4
    two_player = False

    def __post_init__(self):
        object.__setattr__(self, "walls", frozenset(tuple(w) for w in self.walls))
        object.__setattr__(self, "goal", tuple(self.goal))
        if self.start is not None:
            object.__setattr__(self, "start", tuple(self.start))
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        if not self._inside(self.goal) or self.goal in self.walls:
            raise ValueError("goal must be a free cell")
        reach = self._reaches_goal()
        unreachable = [c for c in self.free_cells() if c not in reach]
        if unreachable:
            raise ValueError(f"goal is unreachable from {unreachable[:3]}")

    def _inside(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def free_cells(self) -> list[Cell]:
        return [(r, c) for r in range(self.height) for c in range(self.width) if (r, c) not in self.walls]

    def _move(self, cell: Cell, action: int) -> Cell:
        dr, dc = MOVES[action]
        nxt = (cell[0] + dr, cell[1] + dc)
        if not self._inside(nxt) or nxt in self.walls:
            return cell
        return nxt

    def _reaches_goal(self) -> set:
        seen = {self.goal}
        queue = deque([self.goal])
        while queue:
            cell = queue.popleft()
            for dr, dc in MOVES:
                prev = (cell[0] - dr, cell[1] - dc)
                if self._inside(prev) and prev not in self.walls and prev not in seen:
                    seen.add(prev)
                    queue.append(prev)
        return seen

    # Environment protocol

    def initial_state(self, rng: Optional[np.random.Generator] = None) -> Cell:
        if self.start is not None:
            return self.start
        cells = [c for c in self.free_cells() if c != self.goal]
        if rng is None:
            return cells[0]
        return cells[int(rng.integers(len(cells)))]

    def legal_mask(self, state) -> np.ndarray:
        return np.ones(4, dtype=bool)

    def step(self, state: Cell, action: int):
        nxt = self._move(state, action)
        if nxt == self.goal:
            return nxt, 1.0, True
        return nxt, self.step_reward, False

    def is_terminal(self, state: Cell) -> bool:
        return state == self.goal

    def to_play(self, state) -> int:
        return 0

    def key(self, state: Cell) -> tuple:
        return tuple(state)

    def reachable_from(self, start: Cell) -> list[Cell]:
        seen = {start}
        queue = deque([start])
        while queue:
            cell = queue.popleft()
            if cell == self.goal:
                continue
            for a in range(4):
                nxt = self._move(cell, a)
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return sorted(seen)


def value_iteration(env: GridWorld, gamma: float, tol: float = 1e-10, max_iters: int = 100_000):
    """Optimal state values and a greedy policy by synchronous value iteration.

    The goal is absorbing with value 0 (its reward is paid on entry). Returns
    ``(values, policy)`` as dicts keyed by cell; ``policy`` maps each non-goal
    cell to the list of optimal actions.
    """
    cells = env.free_cells()
    values = {c: 0.0 for c in cells}

    def backup(cell, vals):
        out = []
        for a in range(4):
            nxt, r, done = env.step(cell, a)
            out.append(r + (0.0 if done else gamma * vals[nxt]))
        return out

    for _ in range(max_iters):
        new = {c: (0.0 if c == env.goal else max(backup(c, values))) for c in cells}
        residual = max(abs(new[c] - values[c]) for c in cells)
        values = new
        if residual < tol:
            break
    policy = {}
    for c in cells:
        if c == env.goal:
            continue
        qs = backup(c, values)
        best = max(qs)
        policy[c] = [a for a, q in enumerate(qs) if q >= best - 1e-12]
    return values, policy


def policy_return(env: GridWorld, start: Cell, choose, gamma: float, max_steps: int = 1000) -> float:
    """Discounted return of the deterministic policy ``choose(cell) -> action`` from ``start``."""
    rewards = []
    cell = start
    for _ in range(max_steps):
        if cell == env.goal:
            break
        cell, r, done = env.step(cell, choose(cell))
        rewards.append(r)
        if done:
            break
    g = 0.0
    for r in reversed(rewards):
        g = r + gamma * g
    return g
