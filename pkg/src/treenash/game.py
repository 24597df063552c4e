"""Tree polymatrix games: payoff storage, utilities, regrets, normalization checks.

A game lives on an undirected graph; every edge (u, v) carries two payoff
matrices, one per endpoint, and a player's utility is the sum of bilinear
payoffs over incident edges. All functions here are pure reads of immutable
game data and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    InvalidGame,
    InvalidPlayerId,
    MissingNeighborStrategy,
    NotATree,
)

# |sum(probs) - 1| allowed on any mixed strategy.
SIMPLEX_TOL = 1e-9
# Best-response comparisons are biased toward acceptance by this much.
BR_TOL = 1e-9
# A certificate is accepted when max regret <= epsilon + VERIFY_TOL.
VERIFY_TOL = 1e-9


def _as_payoff_matrix(values, num_actions: int, owner: int, other: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, order="C")
    if arr.shape != (num_actions, num_actions):
        raise InvalidGame(
            f"payoff matrix for ({owner}, {other}) has shape {arr.shape}, "
            f"expected ({num_actions}, {num_actions})"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidGame(f"payoff matrix for ({owner}, {other}) has non-finite entries")
    if np.any(arr < 0.0):
        raise InvalidGame(f"payoff matrix for ({owner}, {other}) has negative entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Edge:
    """One undirected edge; ``payoff_u_v[a_u, a_v]`` pays u, ``payoff_v_u[a_v, a_u]`` pays v."""

    u: int
    v: int
    payoff_u_v: np.ndarray
    payoff_v_u: np.ndarray


@dataclass(eq=False)
class TreePolymatrixGame:
    """Polymatrix game whose interaction graph is expected to be a tree.

    Construction validates local structure (player ids, matrix shapes, signs,
    duplicate edges); tree-ness of the whole edge set is checked separately by
    :func:`validate_and_root`.
    """

    num_players: int
    num_actions: int
    edges: list[Edge]
    _matrices: dict = field(init=False, repr=False)
    _neighbors: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n, m = self.num_players, self.num_actions
        if n < 1:
            raise InvalidGame("num_players must be >= 1")
        if m < 1:
            raise InvalidGame("num_actions must be >= 1")
        matrices: dict[tuple[int, int], np.ndarray] = {}
        neighbors: dict[int, list[int]] = {p: [] for p in range(n)}
        seen: set[tuple[int, int]] = set()
        normalized = []
        for edge in self.edges:
            u, v = edge.u, edge.v
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidGame(f"edge ({u}, {v}) references an unknown player")
            if u == v:
                raise InvalidGame(f"self-loop at player {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InvalidGame(f"duplicate edge ({u}, {v})")
            seen.add(key)
            a_uv = _as_payoff_matrix(edge.payoff_u_v, m, u, v)
            a_vu = _as_payoff_matrix(edge.payoff_v_u, m, v, u)
            normalized.append(Edge(u, v, a_uv, a_vu))
            matrices[(u, v)] = a_uv
            matrices[(v, u)] = a_vu
            neighbors[u].append(v)
            neighbors[v].append(u)
        self.edges = normalized
        self._matrices = matrices
        self._neighbors = {p: sorted(qs) for p, qs in neighbors.items()}

    def neighbors(self, p: int) -> list[int]:
        """Neighbors of p in ascending order."""
        return self._neighbors[p]

    def degree(self, p: int) -> int:
        return len(self._neighbors[p])

    def matrix(self, p: int, q: int) -> np.ndarray:
        """Payoff matrix to p on edge (p, q), indexed ``[a_p, a_q]``."""
        return self._matrices[(p, q)]


@dataclass(eq=False)
class RootedTree:
    """A rooting of the game tree.

    ``order`` is a bottom-up processing sequence: every player appears after
    all of its children. ``descendants[p]`` excludes p itself.
    """

    root: int
    parent: list[int | None]
    children: list[list[int]]
    order: list[int]
    descendants: list[set[int]]


def rooted_tree_from_edges(
    num_players: int, edge_pairs: Sequence[tuple[int, int]], root: int = 0
) -> RootedTree:
    """Root an edge list, verifying that it forms a tree on all players."""
    n = num_players
    if not (0 <= root < n):
        raise InvalidPlayerId(f"root {root} outside [0, {n})")
    if len(edge_pairs) != n - 1:
        raise NotATree(f"a tree on {n} players needs {n - 1} edges, got {len(edge_pairs)}")
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for u, v in edge_pairs:
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidPlayerId(f"edge ({u}, {v}) references an unknown player")
        adjacency[u].append(v)
        adjacency[v].append(u)

    parent: list[int | None] = [None] * n
    visited = [False] * n
    visited[root] = True
    bfs = [root]
    head = 0
    while head < len(bfs):
        node = bfs[head]
        head += 1
        for nb in sorted(adjacency[node]):
            if not visited[nb]:
                visited[nb] = True
                parent[nb] = node
                bfs.append(nb)
    if not all(visited):
        raise NotATree("edge set is disconnected or contains a cycle")

    children: list[list[int]] = [[] for _ in range(n)]
    for p in bfs[1:]:
        children[parent[p]].append(p)  # BFS visits neighbors sorted, so lists are sorted
    order = list(reversed(bfs))
    descendants: list[set[int]] = [set() for _ in range(n)]
    for p in order:
        for c in children[p]:
            descendants[p].add(c)
            descendants[p] |= descendants[c]
    return RootedTree(root=root, parent=parent, children=children, order=order, descendants=descendants)


def validate_and_root(game: TreePolymatrixGame, root: int | None = None) -> RootedTree:
    """Check that the game's edges form a tree and root it (player 0 by default)."""
    return rooted_tree_from_edges(
        game.num_players, [(e.u, e.v) for e in game.edges], root if root is not None else 0
    )


def check_strategy(probs, num_actions: int) -> np.ndarray:
    """Validate a mixed strategy: length, nonnegativity, simplex sum within tolerance."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.shape != (num_actions,):
        raise ValueError(f"strategy has shape {arr.shape}, expected ({num_actions},)")
    if not np.all(np.isfinite(arr)):
        raise ValueError("strategy has non-finite entries")
    if np.any(arr < 0.0):
        raise ValueError("strategy has negative entries")
    total = float(arr.sum())
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"strategy sums to {total!r}, outside 1 +/- {SIMPLEX_TOL}")
    return arr


def check_profile(game: TreePolymatrixGame, strategies: Sequence) -> list[np.ndarray]:
    """Validate one strategy per player."""
    if len(strategies) != game.num_players:
        raise ValueError(
            f"profile has {len(strategies)} strategies, expected {game.num_players}"
        )
    return [check_strategy(s, game.num_actions) for s in strategies]


def action_payoffs(
    game: TreePolymatrixGame, p: int, neighbor_strategies: Mapping[int, np.ndarray]
) -> np.ndarray:
    """Pure-action payoff vector for p: entry j is sum_q A[p,q][j, :] . x_q.

    The map must cover exactly the neighbors of p.
    """
    expected = game.neighbors(p)
    provided = set(neighbor_strategies)
    if provided != set(expected):
        missing = sorted(set(expected) - provided)
        extra = sorted(provided - set(expected))
        raise MissingNeighborStrategy(
            f"player {p}: missing strategies for {missing}, unexpected for {extra}"
        )
    v = np.zeros(game.num_actions)
    for q in expected:
        v += game.matrix(p, q) @ np.asarray(neighbor_strategies[q], dtype=np.float64)
    return v


def mixed_payoff(strategy: np.ndarray, payoffs: np.ndarray) -> float:
    # Computed as (y * v).sum() so that batched evaluations (Y * v).sum(axis=1)
    # agree with the scalar path bit-for-bit.
    return float((np.asarray(strategy, dtype=np.float64) * payoffs).sum())


def expected_utility(game: TreePolymatrixGame, p: int, profile: Sequence[np.ndarray]) -> float:
    """Expected utility of p: sum over incident edges of x_p^T A x_q."""
    v = action_payoffs(game, p, {q: profile[q] for q in game.neighbors(p)})
    return mixed_payoff(profile[p], v)


def deviation_payoff(
    game: TreePolymatrixGame,
    p: int,
    action: int,
    neighbor_strategies: Mapping[int, np.ndarray],
) -> float:
    """Expected payoff to p for the pure action against fixed neighbor strategies."""
    if not (0 <= action < game.num_actions):
        raise ValueError(f"action {action} outside [0, {game.num_actions})")
    v = action_payoffs(game, p, neighbor_strategies)
    return float(v[action])


def regret(game: TreePolymatrixGame, p: int, profile: Sequence[np.ndarray]) -> float:
    """Best pure deviation payoff minus current expected utility, >= 0."""
    v = action_payoffs(game, p, {q: profile[q] for q in game.neighbors(p)})
    gap = float(v.max()) - mixed_payoff(profile[p], v)
    if -1e-12 <= gap < 0.0:
        return 0.0  # floating noise only; larger negatives would be a real bug
    return gap


def is_epsilon_best_response(
    game: TreePolymatrixGame,
    p: int,
    strategy: np.ndarray,
    neighbor_strategies: Mapping[int, np.ndarray],
    epsilon: float,
) -> bool:
    """True iff the strategy's payoff is within epsilon of the best pure action."""
    v = action_payoffs(game, p, neighbor_strategies)
    return mixed_payoff(strategy, v) >= float(v.max()) - epsilon - BR_TOL


def entry_bound(degree: int, num_actions: int, epsilon: float, log_base: float = math.e) -> float:
    """Per-entry payoff cap for a player of the given degree.

    max(1/degree, epsilon / (2 sqrt(6 degree log(num_actions)))). Logarithms are
    natural by default (``log_base``). For single-action games the log term
    vanishes and the cap is 1/degree.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    first = 1.0 / degree
    if num_actions < 2:
        return first
    log_m = math.log(num_actions, log_base)
    return max(first, epsilon / (2.0 * math.sqrt(6.0 * degree * log_m)))


@dataclass(frozen=True)
class EntryViolation:
    player: int
    neighbor: int
    row: int
    col: int
    value: float
    bound: float


@dataclass(frozen=True)
class UtilityRangeViolation:
    player: int
    kind: str  # "max": a pure utility exceeds 1; "min": a pure utility is below 0
    value: float


@dataclass
class NormalizationReport:
    epsilon: float
    entry_violations: list[EntryViolation]
    utility_violations: list[UtilityRangeViolation]

    @property
    def ok(self) -> bool:
        return not self.entry_violations and not self.utility_violations

    def summary(self) -> str:
        if self.ok:
            return f"normalized for epsilon={self.epsilon:g}: ok"
        parts = [
            f"normalized for epsilon={self.epsilon:g}: "
            f"{len(self.entry_violations)} entry / {len(self.utility_violations)} utility violations"
        ]
        for ev in self.entry_violations[:3]:
            parts.append(
                f"  entry A[{ev.player},{ev.neighbor}][{ev.row},{ev.col}] = {ev.value:g} "
                f"outside [0, {ev.bound:g}]"
            )
        for uv in self.utility_violations[:3]:
            parts.append(f"  pure utility of player {uv.player} ({uv.kind}) = {uv.value:g}")
        return "\n".join(parts)


def check_normalized(
    game: TreePolymatrixGame,
    epsilon: float,
    log_base: float = math.e,
    atol: float = 1e-12,
) -> NormalizationReport:
    """Check the per-entry caps and the [0, 1] pure-utility range for every player.

    The utility range is checked exactly through per-edge row maxima/minima,
    which is valid because utilities are separable across edges. Violations are
    reported, never raised.
    """
    entry_violations: list[EntryViolation] = []
    utility_violations: list[UtilityRangeViolation] = []
    for p in range(game.num_players):
        d = game.degree(p)
        if d == 0:
            continue  # isolated player: utility is identically 0
        bound = entry_bound(d, game.num_actions, epsilon, log_base)
        total_max = np.zeros(game.num_actions)
        total_min = np.zeros(game.num_actions)
        for q in game.neighbors(p):
            a = game.matrix(p, q)
            for row, col in np.argwhere((a > bound + atol) | (a < -atol)):
                entry_violations.append(
                    EntryViolation(p, q, int(row), int(col), float(a[row, col]), bound)
                )
            total_max += a.max(axis=1)
            total_min += a.min(axis=1)
        worst_max = float(total_max.max())
        worst_min = float(total_min.min())
        if worst_max > 1.0 + atol:
            utility_violations.append(UtilityRangeViolation(p, "max", worst_max))
        if worst_min < -atol:
            utility_violations.append(UtilityRangeViolation(p, "min", worst_min))
    return NormalizationReport(epsilon, entry_violations, utility_violations)


@dataclass(eq=False)
class EquilibriumCertificate:
    """A verified profile: every player's regret is within epsilon (+ tolerance)."""

    profile: list[np.ndarray]
    epsilon: float
    regrets: np.ndarray

    def __post_init__(self) -> None:
        self.regrets = np.asarray(self.regrets, dtype=np.float64)
        if self.regrets.size and float(self.regrets.max()) > self.epsilon + VERIFY_TOL:
            raise ValueError(
                f"regret {float(self.regrets.max())!r} exceeds epsilon {self.epsilon!r}"
            )
        if self.regrets.size and float(self.regrets.min()) < -1e-12:
            raise ValueError("negative regret in certificate")

    @property
    def max_regret(self) -> float:
        return float(self.regrets.max()) if self.regrets.size else 0.0
