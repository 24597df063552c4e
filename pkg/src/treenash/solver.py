"""Bottom-up dynamic program over candidate tables.

For every parent-child edge and every parent strategy z on the uniform grid,
the tables record which child strategies y extend into a partial equilibrium
of the child's subtree, together with one witness tuple of grandchild choices
per stored (z, y). Membership of a (z, y) pair is decided either by exhaustive
search over the product of the children's candidate sets or, for players with
many children, by an LP relaxation followed by randomized rounding with an
exhaustive fallback. Every returned profile is re-verified, so randomness can
only affect running time, never correctness.
"""

from __future__ import annotations

import itertools
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import (
    CapExceeded,
    InternalSoundnessViolation,
    MissingExtension,
    NoEquilibriumFound,
)
from .game import (
    BR_TOL,
    VERIFY_TOL,
    EquilibriumCertificate,
    RootedTree,
    TreePolymatrixGame,
    check_normalized,
    is_epsilon_best_response,
    regret,
    validate_and_root,
)
from .lp import Extension, build_lp, max_residual, round_extension, solve_feasibility
from .uniform import (
    DEFAULT_ENUMERATION_CAP,
    UniformStrategySet,
    enumerate_uniform,
    support_size,
    validate_epsilon,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_TRIES = 64
DEFAULT_EXHAUSTIVE_CAP = 1_000_000


def default_lp_threshold(m: int, epsilon: float) -> int:
    """Child count at which the LP route is tried first: ceil(24 ln m / eps^2).

    Below it the per-entry payoff cap of a normalized game is 1/degree rather
    than the concentration-friendly branch, so sampling has no success
    guarantee and exhaustive search is used directly. Always at least 2.
    """
    if m < 2:
        return 2
    return max(2, math.ceil(24.0 * math.log(m) / (epsilon * epsilon)))


@dataclass(eq=False)
class SolverConfig:
    """Knobs for one solver run.

    ``b_override`` replaces the theoretical support size; any returned
    certificate is verified regardless, only the success guarantee needs the
    default. ``lp_threshold=None`` means the child-count default; ``math.inf``
    disables the LP route entirely.
    """

    epsilon: float
    b_override: int | None = None
    lp_threshold: int | float | None = None
    max_tries: int = DEFAULT_MAX_TRIES
    lp_tolerance: float = 1e-7
    rng_seed: int = 0
    exhaustive_cap: int = DEFAULT_EXHAUSTIVE_CAP
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    thread_count: int = 1
    root: int = 0
    size_for_half_epsilon: bool = True

    def __post_init__(self) -> None:
        validate_epsilon(self.epsilon)
        if self.b_override is not None and self.b_override < 1:
            raise ValueError("b_override must be >= 1")
        if self.lp_threshold is not None and self.lp_threshold < 2:
            raise ValueError("lp_threshold must be >= 2")
        if self.max_tries < 1 or self.exhaustive_cap < 1 or self.enumeration_cap < 1:
            raise ValueError("caps and max_tries must be positive")
        if self.lp_tolerance <= 0.0:
            raise ValueError("lp_tolerance must be positive")
        if self.thread_count < 1:
            raise ValueError("thread_count must be >= 1")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be >= 0")

    def effective_lp_threshold(self, m: int) -> int | float:
        if self.lp_threshold is not None:
            return self.lp_threshold
        return default_lp_threshold(m, self.epsilon)


@dataclass
class SolveStats:
    """Counters from one run; safe for concurrent updates."""

    support_size: int | None = None
    num_strategies: int | None = None
    membership_tests: int = 0
    lp_calls: int = 0
    lp_infeasible: int = 0
    rounding_calls: int = 0
    rounding_samples: int = 0
    rounding_accepts: int = 0
    fallbacks: int = 0
    exhaustive_calls: int = 0
    max_lp_residual: float = 0.0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def bump(self, **deltas: int) -> None:
        with self._lock:
            for name, delta in deltas.items():
                setattr(self, name, getattr(self, name) + delta)

    def record_lp_residual(self, value: float) -> None:
        with self._lock:
            self.max_lp_residual = max(self.max_lp_residual, value)


@dataclass(eq=False)
class CandidateTables:
    """DP state: per non-root player a boolean table over (parent strategy,
    own strategy) index pairs, plus witness tuples for internal players.

    ``masks[q][z, y]`` says whether strategy y of q extends under parent
    strategy z; ``extensions[(q, z, y)]`` holds the witness as canonical
    indices aligned with q's children list. Strategies are referenced by index
    only.
    """

    epsilon: float
    num_strategies: int
    masks: dict[int, np.ndarray]
    extensions: dict[tuple[int, int, int], tuple[int, ...]]

    def candidate_set(self, child: int, parent_strategy_index: int) -> np.ndarray:
        """Ascending candidate indices for ``child`` when its parent plays the
        strategy with the given index."""
        return np.flatnonzero(self.masks[child][parent_strategy_index])


def _derived_seed(config: SolverConfig, player: int, z_index: int | None, y_index: int):
    # Stable per-(player, z, y) stream so serial and parallel runs agree.
    z_code = 0 if z_index is None else z_index + 1
    return np.random.SeedSequence([config.rng_seed, player, z_code, y_index])


def _leaf_mask(
    game: TreePolymatrixGame,
    leaf: int,
    parent: int,
    uset: UniformStrategySet,
    epsilon: float,
) -> np.ndarray:
    """Boolean table [z, y]: is y an epsilon-best response of the leaf to z?

    Row computation matches is_epsilon_best_response bit-for-bit: same payoff
    vector, same multiply-sum utility, same comparison.
    """
    size = len(uset)
    matrix = game.matrix(leaf, parent)
    mask = np.empty((size, size), dtype=bool)
    probs = uset.probs
    for z_index in range(size):
        v = matrix @ probs[z_index]
        threshold = float(v.max()) - epsilon - BR_TOL
        mask[z_index] = (probs * v).sum(axis=1) >= threshold
    return mask


# Full-product vectorization is used while the scan's payoff table stays under
# this many float64 elements; beyond it, prefixes are enumerated lazily.
_VECTORIZE_ELEMENT_LIMIT = 8_000_000


def exhaustive_membership(
    game: TreePolymatrixGame,
    rooted: RootedTree,
    player: int,
    parent: int | None,
    z_index: int | None,
    y_index: int,
    tables: CandidateTables,
    uset: UniformStrategySet,
    epsilon: float,
    cap: int,
    stats: SolveStats | None = None,
) -> Extension | None:
    """Scan the product of the children's candidate sets in canonical index
    order; return the first tuple against which (with z) y is an epsilon-best
    response, or None. Deterministic.

    Raises CapExceeded if the product set is larger than ``cap``.
    """
    if stats is not None:
        stats.bump(exhaustive_calls=1)
    children = rooted.children[player]
    candidate_lists = [tables.candidate_set(c, y_index) for c in children]
    if any(len(c) == 0 for c in candidate_lists):
        return None
    sizes = [len(c) for c in candidate_lists]
    product_size = math.prod(sizes)
    if product_size > cap:
        raise CapExceeded(
            f"player {player}, strategy index {y_index}: candidate product of size "
            f"{product_size} exceeds the exhaustive cap of {cap}"
        )

    m = game.num_actions
    y = uset.probs[y_index]
    if parent is None:
        base = np.zeros(m)
        fixed = {}
    else:
        base = game.matrix(player, parent) @ uset.probs[z_index]
        fixed = {parent: uset.probs[z_index]}

    if not children:
        if is_epsilon_best_response(game, player, y, fixed, epsilon):
            return Extension(child_ids=(), strategy_indices=())
        return None

    # Per-child payoff contributions, one row per candidate.
    contributions = [
        (game.matrix(player, c) @ uset.probs[candidate_lists[i]].T).T
        for i, c in enumerate(children)
    ]

    def certify(positions: tuple[int, ...]) -> Extension | None:
        # A vectorized hit is only returned once the canonical scalar check
        # agrees, keeping acceptance identical to the game-core definition.
        neighbor_strategies = dict(fixed)
        for i, pos in enumerate(positions):
            neighbor_strategies[children[i]] = uset.probs[candidate_lists[i][pos]]
        if not is_epsilon_best_response(game, player, y, neighbor_strategies, epsilon):
            return None
        return Extension(
            child_ids=tuple(children),
            strategy_indices=tuple(int(candidate_lists[i][pos]) for i, pos in enumerate(positions)),
        )

    if product_size * m <= _VECTORIZE_ELEMENT_LIMIT:
        # Payoff vectors of every tuple at once; row order is the canonical
        # (C-order) tuple order, so the first hit is the canonical witness.
        totals = base[None, :]
        for rows in contributions:
            totals = (totals[:, None, :] + rows[None, :, :]).reshape(-1, m)
        hits = np.flatnonzero((totals * y).sum(axis=1) >= totals.max(axis=1) - epsilon - BR_TOL)
        for flat in hits:
            positions = np.unravel_index(int(flat), sizes)
            extension = certify(tuple(int(p) for p in positions))
            if extension is not None:
                return extension
        return None

    # Lazy scan: iterate prefixes, vectorize over the last child.
    last_rows = contributions[-1]
    for prefix in itertools.product(*(range(k) for k in sizes[:-1])):
        partial = base.copy()
        for i, pos in enumerate(prefix):
            partial += contributions[i][pos]
        totals = partial[None, :] + last_rows
        hits = np.flatnonzero((totals * y).sum(axis=1) >= totals.max(axis=1) - epsilon - BR_TOL)
        for k in hits:
            extension = certify(prefix + (int(k),))
            if extension is not None:
                return extension
    return None


def membership_test(
    game: TreePolymatrixGame,
    rooted: RootedTree,
    player: int,
    parent: int | None,
    z_index: int | None,
    y_index: int,
    tables: CandidateTables,
    uset: UniformStrategySet,
    config: SolverConfig,
    stats: SolveStats,
) -> Extension | None:
    """Decide whether strategy y of ``player`` extends across its children
    under parent strategy z, returning a witness when it does.

    Players with at least ``lp_threshold`` children go through the LP route
    first (build, solve, round); rounding exhaustion or LP infeasibility falls
    back to the exhaustive scan, so the result is never weaker than the direct
    search. Any returned witness satisfies the best-response condition.
    """
    stats.bump(membership_tests=1)
    children = rooted.children[player]
    candidate_sets = {c: tables.candidate_set(c, y_index) for c in children}
    if any(len(v) == 0 for v in candidate_sets.values()):
        return None

    threshold = config.effective_lp_threshold(game.num_actions)
    if len(children) >= threshold:
        z = uset.probs[z_index] if z_index is not None else None
        y = uset.probs[y_index]
        stats.bump(lp_calls=1)
        instance = build_lp(game, rooted, player, parent, z, y, candidate_sets, uset, config.epsilon)
        frac = solve_feasibility(instance, config.lp_tolerance)
        if frac is None:
            stats.bump(lp_infeasible=1)
        else:
            stats.record_lp_residual(max_residual(instance, frac))
            extension = round_extension(
                game,
                rooted,
                player,
                z,
                y,
                frac,
                config.epsilon,
                _derived_seed(config, player, z_index, y_index),
                config.max_tries,
                stats,
            )
            if extension is not None:
                return extension
        stats.bump(fallbacks=1)
    return exhaustive_membership(
        game, rooted, player, parent, z_index, y_index, tables, uset,
        config.epsilon, config.exhaustive_cap, stats,
    )


def _map_maybe_parallel(executor: ThreadPoolExecutor | None, fn, items: Iterable[int]) -> list:
    if executor is None:
        return [fn(item) for item in items]
    return list(executor.map(fn, items))


def build_tables(
    game: TreePolymatrixGame,
    rooted: RootedTree,
    uset: UniformStrategySet,
    config: SolverConfig,
    stats: SolveStats | None = None,
) -> CandidateTables:
    """Populate candidate tables bottom-up for every parent-child edge.

    Leaves get the direct best-response table; internal players run the
    membership test for every (z, y) pair. For a fixed pair of players the
    (z, y) tests are independent and may run on multiple threads; results are
    merged in canonical order, so tables do not depend on interleaving.
    """
    stats = stats if stats is not None else SolveStats()
    report = check_normalized(game, config.epsilon)
    if not report.ok:
        logger.warning("game is not normalized for the requested epsilon; proceeding\n%s",
                       report.summary())

    size = len(uset)
    tables = CandidateTables(
        epsilon=config.epsilon, num_strategies=size, masks={}, extensions={}
    )
    executor = (
        ThreadPoolExecutor(max_workers=config.thread_count)
        if config.thread_count > 1
        else None
    )
    try:
        for parent in rooted.order:
            for q in rooted.children[parent]:
                if not rooted.children[q]:
                    tables.masks[q] = _leaf_mask(game, q, parent, uset, config.epsilon)
                    continue
                mask = np.zeros((size, size), dtype=bool)
                for y_index in range(size):
                    if any(
                        len(tables.candidate_set(c, y_index)) == 0
                        for c in rooted.children[q]
                    ):
                        continue  # no witness possible for this y under any z

                    def test_one(z_index: int, _y: int = y_index) -> Extension | None:
                        return membership_test(
                            game, rooted, q, parent, z_index, _y, tables, uset, config, stats
                        )

                    results = _map_maybe_parallel(executor, test_one, range(size))
                    for z_index, extension in enumerate(results):
                        if extension is not None:
                            mask[z_index, y_index] = True
                            tables.extensions[(q, z_index, y_index)] = extension.strategy_indices
                tables.masks[q] = mask
    finally:
        if executor is not None:
            executor.shutdown()
    return tables


def process_root(
    game: TreePolymatrixGame,
    rooted: RootedTree,
    uset: UniformStrategySet,
    tables: CandidateTables,
    config: SolverConfig,
    stats: SolveStats | None = None,
) -> tuple[int, Extension]:
    """Scan root strategies in canonical order and return the first that
    extends across the root's children, with its witness.

    Raises NoEquilibriumFound when the scan is exhausted, which can only
    happen when the support size or the scan caps are below the defaults.
    """
    stats = stats if stats is not None else SolveStats()
    for y_index in range(len(uset)):
        extension = membership_test(
            game, rooted, rooted.root, None, None, y_index, tables, uset, config, stats
        )
        if extension is not None:
            return y_index, extension
    raise NoEquilibriumFound(
        f"no strategy on the uniform grid (b={uset.b}, {len(uset)} strategies) extends "
        f"to an equilibrium at epsilon={config.epsilon:g}; success is only guaranteed "
        f"with the default support size and unlimited scan caps"
    )


def backtrack(
    rooted: RootedTree,
    tables: CandidateTables,
    root_strategy_index: int,
    root_extension: Extension,
    uset: UniformStrategySet,
) -> list[np.ndarray]:
    """Assemble the full profile top-down from the stored witnesses."""
    assignment: list[int | None] = [None] * len(rooted.parent)
    assignment[rooted.root] = root_strategy_index
    stack: list[tuple[int, Extension]] = [(rooted.root, root_extension)]
    while stack:
        player, extension = stack.pop()
        for child, strategy_index in zip(extension.child_ids, extension.strategy_indices):
            assignment[child] = strategy_index
            if not rooted.children[child]:
                continue
            key = (child, assignment[player], strategy_index)
            stored = tables.extensions.get(key)
            if stored is None:
                raise MissingExtension(f"no extension recorded for {key}")
            stack.append((child, Extension(tuple(rooted.children[child]), stored)))
    if any(index is None for index in assignment):
        raise MissingExtension("backtracking left some players unassigned")
    return [uset.probs[index].copy() for index in assignment]


def solve(
    game: TreePolymatrixGame,
    config: SolverConfig,
    stats: SolveStats | None = None,
) -> EquilibriumCertificate:
    """End-to-end solve: root the tree, enumerate the strategy grid, build the
    tables, extract a root strategy, backtrack, and verify.

    The returned certificate's regrets are recomputed independently of the
    search path; a verification failure raises InternalSoundnessViolation and
    indicates a bug, never an unlucky random draw. Pass a SolveStats to collect
    counters (LP calls, samples, fallbacks).
    """
    stats = stats if stats is not None else SolveStats()
    rooted = validate_and_root(game, config.root)
    b = (
        config.b_override
        if config.b_override is not None
        else support_size(
            game.num_actions,
            game.num_players,
            config.epsilon,
            halve=config.size_for_half_epsilon,
        )
    )
    uset = enumerate_uniform(game.num_actions, b, cap=config.enumeration_cap)
    stats.support_size = b
    stats.num_strategies = len(uset)

    tables = build_tables(game, rooted, uset, config, stats)
    root_index, root_extension = process_root(game, rooted, uset, tables, config, stats)
    profile = backtrack(rooted, tables, root_index, root_extension, uset)

    regrets = np.array([regret(game, p, profile) for p in range(game.num_players)])
    if regrets.size and float(regrets.max()) > config.epsilon + VERIFY_TOL:
        raise InternalSoundnessViolation(
            f"assembled profile has max regret {float(regrets.max())!r} > "
            f"epsilon {config.epsilon!r}"
        )
    return EquilibriumCertificate(profile=profile, epsilon=config.epsilon, regrets=regrets)
