"""Grid-world robot navigation CMDP.

A rectangular grid where the agent moves in four directions with slip
probability delta, pays -1 per step, collects a one-time goal bonus, and
accrues cost for every entry into an obstacle cell.  Coordinates are
(column, row) with (1, 1) at the bottom-left; the state index of cell
(c, r) is (r - 1) * width + (c - 1), and index width * height is the
absorbing terminal reached from the goal.
"""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import Cmdp

# Action order: up, down, left, right (up increases the row).
ACTIONS = ("up", "down", "left", "right")
_DELTAS = ((0, 1), (0, -1), (-1, 0), (1, 0))


@dataclass(frozen=True)
class GridConfig:
    width: int = 20
    height: int = 20
    start: tuple = (2, 18)
    goal: tuple = (19, 18)
    obstacles: object = None      # list of cells, or {"count": n, "seed": s}
    slip: float = 0.05
    gamma: float = 0.99
    goal_reward: float = None     # defaults to 2 / (1 - gamma)
    obstacle_cost: float = None   # defaults to goal_reward
    step_reward: float = -1.0
    constraint_bound: float = 40.0

    def resolved_goal_reward(self):
        return 2.0 / (1.0 - self.gamma) if self.goal_reward is None else self.goal_reward

    def resolved_obstacle_cost(self):
        return self.resolved_goal_reward() if self.obstacle_cost is None else self.obstacle_cost

    def check(self):
        if self.width < 2 or self.height < 2:
            raise ValueError("grid must be at least 2x2")
        if not (0.0 <= self.slip <= 1.0):
            raise ValueError(f"slip must be in [0, 1], got {self.slip}")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        for name, cell in (("start", self.start), ("goal", self.goal)):
            c, r = cell
            if not (1 <= c <= self.width and 1 <= r <= self.height):
                raise ValueError(f"{name} cell {cell} out of bounds")
        if tuple(self.start) == tuple(self.goal):
            raise ValueError("start must differ from goal")


def generate_obstacles(width, height, count, seed, start, goal,
                       corridor_sigma=2.0, max_attempts=200):
    """Seed-deterministic obstacle layout biased toward the straight
    corridor between start and goal.

    Start and goal are never used; a breadth-first search certifies that
    an obstacle-free path remains.  The corridor bias makes the short path
    risky and the detour safe.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count >= width * height - 2:
        raise ValueError("too many obstacles for the grid")
    if count == 0:
        return []
    start = tuple(start)
    goal = tuple(goal)
    rng = np.random.default_rng(seed)
    cells = [(c, r) for r in range(1, height + 1) for c in range(1, width + 1)
             if (c, r) != start and (c, r) != goal]
    weights = np.array([math.exp(-_segment_distance(cell, start, goal) / corridor_sigma)
                        for cell in cells])
    weights /= weights.sum()
    for _ in range(max_attempts):
        chosen = rng.choice(len(cells), size=count, replace=False, p=weights)
        layout = [cells[i] for i in sorted(chosen)]
        if _path_exists(width, height, set(layout), start, goal):
            return layout
    raise RuntimeError(f"no connected layout found in {max_attempts} attempts")


def _segment_distance(cell, a, b):
    """Euclidean distance from a cell to the segment a-b."""
    px, py = cell
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    norm2 = dx * dx + dy * dy
    if norm2 == 0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / norm2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _path_exists(width, height, obstacles, start, goal):
    seen = {start}
    queue = deque([start])
    while queue:
        c, r = queue.popleft()
        if (c, r) == goal:
            return True
        for dc, dr in _DELTAS:
            nxt = (c + dc, r + dr)
            if (1 <= nxt[0] <= width and 1 <= nxt[1] <= height
                    and nxt not in obstacles and nxt not in seen):
                seen.add(nxt)
                queue.append(nxt)
    return False


@dataclass
class GridWorld:
    """Built grid-world instance: CMDP plus layout metadata."""

    config: GridConfig
    cmdp: Cmdp
    obstacles: list
    start_state: int
    goal_state: int
    terminal_state: int
    obstacle_states: frozenset = field(default=frozenset())

    def cell_to_state(self, cell):
        c, r = cell
        return (r - 1) * self.config.width + (c - 1)

    def state_to_cell(self, state):
        return (state % self.config.width + 1, state // self.config.width + 1)

    # Success predicates for rollouts (the path is a state sequence).
    def reached_goal(self, path):
        return self.terminal_state in path or self.goal_state in path

    def reached_goal_clean(self, path):
        return self.reached_goal(path) and not any(
            s in self.obstacle_states for s in path)


def build_gridworld(config):
    """Assemble the CMDP for a grid configuration; returns the Cmdp only.
    Use :func:`build_gridworld_model` when layout metadata is needed."""
    return build_gridworld_model(config).cmdp


def build_gridworld_model(config):
    config.check()
    width, height = config.width, config.height
    n_cells = width * height
    n_states = n_cells + 1  # absorbing terminal after the goal
    n_actions = 4
    terminal = n_cells
    big = config.resolved_goal_reward()
    obstacle_cost = config.resolved_obstacle_cost()
    delta = config.slip

    obstacles = config.obstacles
    if obstacles is None:
        obstacles = []
    elif isinstance(obstacles, dict):
        obstacles = generate_obstacles(
            width, height, obstacles["count"], obstacles["seed"],
            config.start, config.goal)
    obstacles = [tuple(c) for c in obstacles]
    for cell in obstacles:
        c, r = cell
        if not (1 <= c <= width and 1 <= r <= height):
            raise ValueError(f"obstacle {cell} out of bounds")
        if cell == tuple(config.start) or cell == tuple(config.goal):
            raise ValueError(f"obstacle {cell} collides with start or goal")

    def index(cell):
        c, r = cell
        return (r - 1) * width + (c - 1)

    goal_state = index(config.goal)
    start_state = index(config.start)
    obstacle_states = frozenset(index(c) for c in obstacles)

    rewards = np.zeros((n_states, n_actions))
    costs = np.zeros((n_states, n_actions))
    rows, cols, vals = [], [], []

    def add(state, action, next_state, prob):
        rows.append(state * n_actions + action)
        cols.append(next_state)
        vals.append(prob)

    for r in range(1, height + 1):
        for c in range(1, width + 1):
            state = index((c, r))
            if state == goal_state:
                # Goal absorbs: the bonus was paid on arrival.
                for a in range(n_actions):
                    add(state, a, terminal, 1.0)
                continue
            for a in range(n_actions):
                dest = {}
                for move, (dc, dr) in enumerate(_DELTAS):
                    prob = (1.0 - delta if move == a else 0.0) + delta / 4.0
                    nc, nr = c + dc, r + dr
                    if not (1 <= nc <= width and 1 <= nr <= height):
                        nxt = state  # wall bounce: stay in place
                    else:
                        nxt = index((nc, nr))
                    dest[nxt] = dest.get(nxt, 0.0) + prob
                p_goal = dest.get(goal_state, 0.0)
                p_obstacle = sum(p for s, p in dest.items() if s in obstacle_states)
                rewards[state, a] = config.step_reward + big * p_goal
                costs[state, a] = obstacle_cost * p_obstacle
                for nxt, prob in sorted(dest.items()):
                    add(state, a, nxt, prob)
    for a in range(n_actions):
        add(terminal, a, terminal, 1.0)

    transitions = sp.csr_matrix(
        (vals, (rows, cols)), shape=(n_states * n_actions, n_states))
    beta = np.zeros(n_states)
    beta[start_state] = 1.0
    cmdp = Cmdp(n_states, n_actions, transitions, rewards, costs, beta,
                config.gamma, config.constraint_bound)
    return GridWorld(config=config, cmdp=cmdp, obstacles=obstacles,
                     start_state=start_state, goal_state=goal_state,
                     terminal_state=terminal, obstacle_states=obstacle_states)
