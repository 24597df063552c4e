"""Linear feasibility test for extending a strategy across a player's children,
plus randomized rounding of the fractional solution into concrete choices.

The program LP(player, parent, z, y) carries one mixture variable block per
child (weights alpha over that child's candidate strategies), per-child
aggregate strategies sigma_c coupled to the mixtures, and one row per action j
requiring y to be an (epsilon/2)-best response to the aggregates together with
the parent strategy z. Feasibility is decided operationally through a
phase-one construction: minimize the total constraint violation and accept iff
the optimum is within tolerance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping

import numpy as np
from scipy.optimize import linprog

from .game import RootedTree, TreePolymatrixGame, is_epsilon_best_response, mixed_payoff
from .uniform import UniformStrategySet

if TYPE_CHECKING:  # pragma: no cover
    from .solver import SolveStats

logger = logging.getLogger(__name__)

DEFAULT_LP_TOLERANCE = 1e-7


@dataclass(eq=False)
class LpInstance:
    """One feasibility program; trivially infeasible when a candidate set is empty.

    Variables are laid out as [alpha blocks..., sigma blocks...]; the simplex
    membership of each sigma_c is implied by the coupling and normalization
    rows and is not added separately.
    """

    player: int
    parent: int | None
    child_ids: tuple[int, ...]
    candidate_indices: tuple[np.ndarray, ...]
    candidate_probs: tuple[np.ndarray, ...]
    strategy: np.ndarray  # y, the strategy being extended
    base_payoffs: np.ndarray  # A[player, parent] @ z, or zeros at the root
    epsilon: float
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    alpha_slices: tuple[slice, ...] = ()
    sigma_slices: tuple[slice, ...] = ()
    num_variables: int = 0
    num_alpha: int = 0
    empty_children: tuple[int, ...] = ()

    @property
    def trivially_infeasible(self) -> bool:
        return bool(self.empty_children)


@dataclass(eq=False)
class FractionalExtension:
    """A feasible fractional solution: per-child candidate mixtures and aggregates."""

    child_ids: tuple[int, ...]
    candidate_indices: tuple[np.ndarray, ...]
    candidate_probs: tuple[np.ndarray, ...]
    alphas: tuple[np.ndarray, ...]
    sigmas: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class Extension:
    """Concrete per-child strategy choices, referenced by canonical set index."""

    child_ids: tuple[int, ...]
    strategy_indices: tuple[int, ...]

    def as_mapping(self) -> dict[int, int]:
        return dict(zip(self.child_ids, self.strategy_indices))


def build_lp(
    game: TreePolymatrixGame,
    rooted: RootedTree,
    player: int,
    parent: int | None,
    z: np.ndarray | None,
    y: np.ndarray,
    candidate_sets: Mapping[int, np.ndarray],
    uset: UniformStrategySet,
    epsilon: float,
) -> LpInstance:
    """Assemble LP(player, parent, z, y) for the given per-child candidate sets.

    ``candidate_sets`` maps each child to the canonical indices of its
    candidates; when the player is the root, ``parent`` and ``z`` are omitted
    and the parent terms vanish.
    """
    children = rooted.children[player]
    if set(candidate_sets) != set(children):
        raise ValueError(f"candidate sets must be keyed by the children of {player}")
    if (parent is None) != (z is None):
        raise ValueError("parent and z must be supplied together")
    m = game.num_actions
    y = np.asarray(y, dtype=np.float64)
    if parent is None:
        base = np.zeros(m)
    else:
        base = game.matrix(player, parent) @ np.asarray(z, dtype=np.float64)

    cand_idx = tuple(np.asarray(candidate_sets[c], dtype=np.int64) for c in children)
    cand_probs = tuple(uset.probs[idx] for idx in cand_idx)
    common = dict(
        player=player,
        parent=parent,
        child_ids=tuple(children),
        candidate_indices=cand_idx,
        candidate_probs=cand_probs,
        strategy=y,
        base_payoffs=base,
        epsilon=epsilon,
    )
    empty = tuple(c for c, idx in zip(children, cand_idx) if len(idx) == 0)
    if empty:
        return LpInstance(**common, empty_children=empty)

    sizes = [len(idx) for idx in cand_idx]
    d = len(children)
    num_alpha = sum(sizes)
    num_vars = num_alpha + d * m
    alpha_slices = []
    offset = 0
    for k in sizes:
        alpha_slices.append(slice(offset, offset + k))
        offset += k
    sigma_slices = [slice(num_alpha + i * m, num_alpha + (i + 1) * m) for i in range(d)]

    num_eq = d + d * m
    a_eq = np.zeros((num_eq, num_vars))
    b_eq = np.zeros(num_eq)
    row = 0
    for i in range(d):  # each child's mixture weights sum to one
        a_eq[row, alpha_slices[i]] = 1.0
        b_eq[row] = 1.0
        row += 1
    for i in range(d):  # sigma_c = sum_x alpha_x x, coordinatewise
        x_mat = cand_probs[i]
        for coord in range(m):
            a_eq[row, sigma_slices[i].start + coord] = 1.0
            a_eq[row, alpha_slices[i]] = -x_mat[:, coord]
            row += 1

    # Best-response rows, rearranged to <= form:
    #   sum_c (e_j - y)^T A[player,c] sigma_c <= (y - e_j)^T base + epsilon/2
    a_ub = np.zeros((m, num_vars))
    b_ub = np.zeros(m)
    y_base = mixed_payoff(y, base)
    for j in range(m):
        for i, c in enumerate(children):
            a_c = game.matrix(player, c)
            a_ub[j, sigma_slices[i]] = a_c[j, :] - y @ a_c
        b_ub[j] = y_base - float(base[j]) + epsilon / 2.0

    return LpInstance(
        **common,
        a_eq=a_eq,
        b_eq=b_eq,
        a_ub=a_ub,
        b_ub=b_ub,
        alpha_slices=tuple(alpha_slices),
        sigma_slices=tuple(sigma_slices),
        num_variables=num_vars,
        num_alpha=num_alpha,
    )


def max_residual(instance: LpInstance, frac: FractionalExtension) -> float:
    """Largest constraint violation of a fractional solution, recomputed directly
    from the instance arrays (independent of whatever solver produced it)."""
    x = np.concatenate([np.zeros(0), *frac.alphas, *frac.sigmas])
    worst = 0.0
    if instance.a_eq is not None:
        worst = max(worst, float(np.abs(instance.a_eq @ x - instance.b_eq).max()))
    if instance.a_ub is not None:
        worst = max(worst, float(np.maximum(instance.a_ub @ x - instance.b_ub, 0.0).max()))
    for a in frac.alphas:
        if a.size:
            worst = max(worst, float(max(0.0, -a.min())))
    return worst


def solve_feasibility(
    instance: LpInstance, tolerance: float = DEFAULT_LP_TOLERANCE
) -> FractionalExtension | None:
    """Phase-one solve: returns a fractional extension iff the minimum total
    constraint violation is within tolerance, else None.

    Numerical failures of the backend are logged and treated as infeasible, so
    callers can always fall back to exhaustive search. Identical instances
    yield identical solutions (the backend is deterministic).
    """
    if instance.trivially_infeasible:
        return None
    a_eq, b_eq = instance.a_eq, instance.b_eq
    a_ub, b_ub = instance.a_ub, instance.b_ub
    num_vars = instance.num_variables
    num_eq = a_eq.shape[0]
    num_ub = a_ub.shape[0]

    # Auxiliary nonnegative violation variables: u+ - u- absorbs equality
    # residuals, v relaxes the inequality rows; objective is their sum.
    a_eq_ext = np.hstack([a_eq, np.eye(num_eq), -np.eye(num_eq), np.zeros((num_eq, num_ub))])
    a_ub_ext = np.hstack([a_ub, np.zeros((num_ub, 2 * num_eq)), -np.eye(num_ub)])
    cost = np.concatenate([np.zeros(num_vars), np.ones(2 * num_eq + num_ub)])
    bounds = (
        [(0.0, None)] * instance.num_alpha
        + [(None, None)] * (num_vars - instance.num_alpha)
        + [(0.0, None)] * (2 * num_eq + num_ub)
    )
    result = linprog(
        cost,
        A_ub=a_ub_ext,
        b_ub=b_ub,
        A_eq=a_eq_ext,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
    )
    if result.status != 0:
        if result.status == 2:
            return None
        logger.warning(
            "numerical failure in feasibility solve for player %d (status %d: %s); "
            "treating as infeasible",
            instance.player,
            result.status,
            result.message,
        )
        return None
    if float(result.fun) > tolerance:
        return None

    x = result.x
    alphas = []
    for sl in instance.alpha_slices:
        a = np.clip(x[sl], 0.0, None)  # degenerate tiny negatives are clamped
        total = float(a.sum())
        if total <= 0.0:
            logger.warning(
                "degenerate mixture block for player %d; treating as infeasible",
                instance.player,
            )
            return None
        alphas.append(a / total)
    sigmas = [x[sl].copy() for sl in instance.sigma_slices]
    frac = FractionalExtension(
        child_ids=instance.child_ids,
        candidate_indices=instance.candidate_indices,
        candidate_probs=instance.candidate_probs,
        alphas=tuple(alphas),
        sigmas=tuple(sigmas),
    )
    if max_residual(instance, frac) > tolerance:
        logger.warning(
            "post-clamp residual exceeds tolerance for player %d; treating as infeasible",
            instance.player,
        )
        return None
    return frac


def round_extension(
    game: TreePolymatrixGame,
    rooted: RootedTree,
    player: int,
    z: np.ndarray | None,
    y: np.ndarray,
    frac: FractionalExtension,
    epsilon: float,
    rng_seed,
    max_tries: int = 64,
    stats: "SolveStats | None" = None,
) -> Extension | None:
    """Sample per-child candidates from the fractional mixtures until the drawn
    tuple makes y an epsilon-best response (checked directly), or give up.

    Sampling is reproducible from ``rng_seed``; the generator is owned by this
    call and never shared. Returns None after ``max_tries`` failures, which
    signals the caller to fall back to exhaustive search.
    """
    parent = rooted.parent[player]
    if parent is not None and z is None:
        raise ValueError(f"player {player} has a parent; z is required")
    rng = np.random.default_rng(rng_seed)
    d = len(frac.child_ids)
    cums = [np.cumsum(a) for a in frac.alphas]
    fixed = {parent: np.asarray(z, dtype=np.float64)} if parent is not None else {}
    if stats is not None:
        stats.bump(rounding_calls=1)
    for _ in range(max_tries):
        draws = rng.random(d)
        positions = [
            min(int(np.searchsorted(cums[i], draws[i], side="right")), len(cums[i]) - 1)
            for i in range(d)
        ]
        neighbor_strategies = dict(fixed)
        for i, c in enumerate(frac.child_ids):
            neighbor_strategies[c] = frac.candidate_probs[i][positions[i]]
        if stats is not None:
            stats.bump(rounding_samples=1)
        if is_epsilon_best_response(game, player, y, neighbor_strategies, epsilon):
            if stats is not None:
                stats.bump(rounding_accepts=1)
            return Extension(
                child_ids=frac.child_ids,
                strategy_indices=tuple(
                    int(frac.candidate_indices[i][positions[i]]) for i in range(d)
                ),
            )
    return None


def check_concentration_event(
    game: TreePolymatrixGame,
    player: int,
    sampled: Extension,
    frac: FractionalExtension,
    epsilon: float,
) -> bool:
    """True iff every action's sampled aggregate payoff stays within epsilon/4
    of its fractional expectation.

    Diagnostic only: the accept/reject path uses the direct best-response
    check, which this event implies.
    """
    m = game.num_actions
    sampled_payoffs = np.zeros(m)
    expected_payoffs = np.zeros(m)
    for i, c in enumerate(sampled.child_ids):
        matrix = game.matrix(player, c)
        hits = np.flatnonzero(frac.candidate_indices[i] == sampled.strategy_indices[i])
        if len(hits) == 0:
            raise ValueError(f"sampled strategy for child {c} is not a candidate")
        sampled_payoffs += matrix @ frac.candidate_probs[i][int(hits[0])]
        expected_payoffs += matrix @ frac.sigmas[i]
    return bool(np.all(np.abs(sampled_payoffs - expected_payoffs) <= epsilon / 4.0 + 1e-12))
