"""Sparse-reward gridworlds with slippery moves, walls and lava."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ..mdp import InvalidInputError, TabularMdp, TabularPolicy, solve_optimal

ACTIONS = ("up", "down", "left", "right", "stay")
MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))
CELL_CHARS = {"S": "start", "G": "goal", "L": "lava", "#": "wall", ".": "open"}

NAMED_LAYOUTS = {
    "single-critical": "single_critical.txt",
    "multiple-critical": "multiple_critical.txt",
    "cliffwalk": "cliffwalk.txt",
}


@dataclass(frozen=True)
class GridSpec:
    """Grid of cell characters (see ``CELL_CHARS``) plus dynamics settings."""

    rows: tuple
    slip_prob: float = 0.1
    gamma: float = 0.95
    name: str = "grid"

    def __post_init__(self):
        rows = tuple(str(r) for r in self.rows)
        if not rows or not rows[0]:
            raise InvalidInputError("grid is empty")
        if any(len(r) != len(rows[0]) for r in rows):
            raise InvalidInputError("grid rows are ragged")
        bad = {c for r in rows for c in r} - set(CELL_CHARS)
        if bad:
            raise InvalidInputError(f"unknown grid characters {sorted(bad)}")
        text = "".join(rows)
        if text.count("S") != 1:
            raise InvalidInputError("grid needs exactly one start cell")
        if text.count("G") < 1:
            raise InvalidInputError("grid needs at least one goal cell")
        if not 0.0 <= self.slip_prob < 1.0:
            raise InvalidInputError("slip_prob must lie in [0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise InvalidInputError("gamma must lie in (0, 1)")
        object.__setattr__(self, "rows", rows)

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def cell(self, r: int, c: int) -> str:
        return CELL_CHARS[self.rows[r][c]]

    @classmethod
    def from_text(cls, text: str, **kwargs) -> "GridSpec":
        lines = [ln.rstrip("\r") for ln in text.splitlines()]
        while lines and not lines[-1].strip():
            lines.pop()
        return cls(tuple(lines), **kwargs)

    @classmethod
    def load(cls, path, **kwargs) -> "GridSpec":
        path = Path(path)
        kwargs.setdefault("name", path.stem)
        return cls.from_text(path.read_text(), **kwargs)

    @classmethod
    def named(cls, name: str, **kwargs) -> "GridSpec":
        if name not in NAMED_LAYOUTS:
            raise InvalidInputError(f"unknown layout {name!r}; choose from {sorted(NAMED_LAYOUTS)}")
        text = resources.files("offrl.envs").joinpath("layouts", NAMED_LAYOUTS[name]).read_text()
        kwargs.setdefault("name", name)
        return cls.from_text(text, **kwargs)


@dataclass(frozen=True, eq=False)
class GridIndex:
    """Mapping between non-wall cells and MDP state ids (row-major order)."""

    cells: tuple
    kinds: tuple
    start: int

    def state_of(self, r: int, c: int) -> int:
        return self.cells.index((r, c))

    def mask(self, kind: str) -> np.ndarray:
        return np.array([k == kind for k in self.kinds])


def grid_index(spec: GridSpec) -> GridIndex:
    cells, kinds = [], []
    for r in range(spec.height):
        for c in range(spec.width):
            kind = spec.cell(r, c)
            if kind != "wall":
                cells.append((r, c))
                kinds.append(kind)
    return GridIndex(tuple(cells), tuple(kinds), kinds.index("start"))


def build_gridworld(layout, slip_prob: float | None = None,
                    gamma: float | None = None) -> tuple[GridSpec, TabularMdp]:
    """MDP over non-wall cells with five actions.

    A move succeeds with probability 1 - slip and otherwise goes in one of the
    other three compass directions, chosen uniformly. ``stay`` never slips.
    Blocked moves leave the agent in place. Entering a goal pays 1; goals and
    lava absorb with no further reward.
    """
    if isinstance(layout, GridSpec):
        spec = layout
        if slip_prob is not None or gamma is not None:
            spec = GridSpec(spec.rows, spec.slip_prob if slip_prob is None else slip_prob,
                            spec.gamma if gamma is None else gamma, spec.name)
    else:
        kwargs = {}
        if slip_prob is not None:
            kwargs["slip_prob"] = slip_prob
        if gamma is not None:
            kwargs["gamma"] = gamma
        path = Path(str(layout))
        spec = GridSpec.load(path, **kwargs) if path.suffix == ".txt" and path.exists() \
            else GridSpec.named(str(layout), **kwargs)
    idx = grid_index(spec)
    lookup = {cell: i for i, cell in enumerate(idx.cells)}
    ns, na = len(idx.cells), len(ACTIONS)
    p = np.zeros((ns, na, ns))
    tr = np.zeros((ns, na, ns))

    def dest(r, c, move):
        nr, nc = r + move[0], c + move[1]
        if 0 <= nr < spec.height and 0 <= nc < spec.width and spec.cell(nr, nc) != "wall":
            return lookup[(nr, nc)]
        return lookup[(r, c)]

    for s, (r, c) in enumerate(idx.cells):
        if idx.kinds[s] in ("goal", "lava"):
            p[s, :, s] = 1.0
            continue
        for a in range(4):
            p[s, a, dest(r, c, MOVES[a])] += 1.0 - spec.slip_prob
            for other in range(4):
                if other != a:
                    p[s, a, dest(r, c, MOVES[other])] += spec.slip_prob / 3.0
        p[s, 4, s] = 1.0
        tr[s, :, idx.mask("goal")] = 1.0
    reward = (p * tr).sum(axis=2)
    rho = np.zeros(ns)
    rho[idx.start] = 1.0
    mdp = TabularMdp(p, reward, spec.gamma, rho, reward_mode="transition",
                     transition_reward=tr, bounded_return=True, name=spec.name)
    return spec, mdp


def derive_expert(mdp: TabularMdp, tol: float = 1e-10) -> TabularPolicy:
    """Deterministic optimal policy with lowest-index tie-breaking."""
    return solve_optimal(mdp, tol)[1]


def epsilon_greedy(policy: TabularPolicy, eps: float) -> TabularPolicy:
    if not 0.0 <= eps <= 1.0:
        raise InvalidInputError("eps must lie in [0, 1]")
    na = policy.probs.shape[1]
    return TabularPolicy((1.0 - eps) * policy.probs + eps / na)


def open_cells_init(spec: GridSpec) -> np.ndarray:
    """Uniform distribution over the start and open cells."""
    idx = grid_index(spec)
    mask = np.array([k in ("start", "open") for k in idx.kinds], dtype=float)
    return mask / mask.sum()


def render_policy(spec: GridSpec, policy: TabularPolicy) -> str:
    glyph = "^v<>o"
    idx = grid_index(spec)
    acts = policy.greedy_actions()
    out = [list(r) for r in spec.rows]
    for s, (r, c) in enumerate(idx.cells):
        if idx.kinds[s] in ("open", "start"):
            out[r][c] = glyph[acts[s]]
    return "\n".join("".join(r) for r in out)
