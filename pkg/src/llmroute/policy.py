"""Learning policies over an arm pool.

Two learners share one select/update/converged surface:

* ``SlaState`` -- a stochastic learning automaton with the linear
  reward-inaction update: a reward moves probability mass toward the chosen
  arm in proportion to the reward, and a zero reward leaves it untouched.
* ``QlState`` -- stateless Q-learning with an epsilon-greedy selector.

Two baselines (fixed arm, uniform random) implement the same surface so the
engine can run them through the identical path.

All states are immutable; ``update`` returns a new state. Selection takes an
explicit ``numpy.random.Generator`` and always consumes the same number of
draws per call for a given policy, so runs replay exactly from a seed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .core import InvalidConfig, PoolTooSmall, RoutingError

SIMPLEX_TOL = 1e-9


class InvalidBeta(InvalidConfig):
    code = "InvalidBeta"


class InvalidTheta(InvalidConfig):
    code = "InvalidTheta"


class InvalidEpsilon(InvalidConfig):
    code = "InvalidEpsilon"


class RewardOutOfRange(RoutingError, ValueError):
    code = "RewardOutOfRange"


def _check_pool_size(pool_size: int) -> None:
    if pool_size < 2:
        raise PoolTooSmall(f"need at least 2 arms, got {pool_size}")


def _check_reward(reward: float) -> float:
    reward = float(reward)
    if not 0.0 <= reward <= 1.0:
        raise RewardOutOfRange(f"normalized reward must be in [0, 1], got {reward}")
    return reward


def argmax_lowest(values: np.ndarray) -> int:
    # np.argmax already returns the first maximum.
    return int(np.argmax(values))


# --------------------------------------------------------------------------
# Learning automaton (linear reward-inaction)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SlaState:
    probs: np.ndarray
    beta: float
    last_delta: float | None = None
    converged_to: int | None = None
    updates: int = 0

    def select(self, rng: np.random.Generator) -> int:
        return sla_select(self, rng)

    def update(self, chosen: int, reward: float) -> "SlaState":
        return sla_update(self, chosen, reward)

    def converged(self, convergence_delta: float) -> int | None:
        return sla_converged(self, convergence_delta)

    def snapshot(self) -> list[float]:
        return self.probs.tolist()


def sla_init(pool_size: int, beta: float) -> SlaState:
    _check_pool_size(pool_size)
    if not 0.0 < beta <= 1.0:
        raise InvalidBeta(f"beta must be in (0, 1], got {beta}")
    probs = np.full(pool_size, 1.0 / pool_size)
    probs.setflags(write=False)
    return SlaState(probs=probs, beta=float(beta))


def sla_select(state: SlaState, rng: np.random.Generator) -> int:
    """Draw an arm with probability ``probs[arm]`` using exactly one uniform."""
    u = rng.random()
    cdf = np.cumsum(state.probs)
    # side="right" so an arm with zero mass is never picked at u == boundary.
    arm = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(arm, len(state.probs) - 1)


def sla_update(state: SlaState, chosen: int, reward: float) -> SlaState:
    reward = _check_reward(reward)
    old = state.probs
    step = state.beta * reward
    new = old - step * old
    new[chosen] = old[chosen] + step * (1.0 - old[chosen])
    delta = float(np.max(np.abs(new - old)))
    new.setflags(write=False)
    # A new update invalidates any earlier convergence verdict.
    return replace(state, probs=new, last_delta=delta, converged_to=None, updates=state.updates + 1)


def sla_converged(state: SlaState, convergence_delta: float) -> int | None:
    """Arm the automaton has settled on, or ``None``.

    Settled means the largest per-arm probability change of the last update
    fell below ``convergence_delta``.
    """
    if state.last_delta is None or state.last_delta >= convergence_delta:
        return None
    return argmax_lowest(state.probs)


# --------------------------------------------------------------------------
# Stateless epsilon-greedy Q-learning
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QlUpdateTrace:
    greedy_arm: int
    greedy_change: float


@dataclass(frozen=True)
class QlState:
    qvalues: np.ndarray
    theta: float
    explore_epsilon: float
    visit_counts: np.ndarray
    converged_to: int | None = None
    # Most recent updates, newest last; bounded by the caller's window.
    history: tuple[QlUpdateTrace, ...] = field(default=())
    history_limit: int = 64

    def select(self, rng: np.random.Generator) -> int:
        return ql_select(self, rng)

    def update(self, chosen: int, reward: float) -> "QlState":
        return ql_update(self, chosen, reward)

    def converged(self, convergence_delta: float, window: int = 20) -> int | None:
        return ql_converged(self, convergence_delta, window)

    def snapshot(self) -> list[float]:
        return self.qvalues.tolist()

    @property
    def updates(self) -> int:
        return int(self.visit_counts.sum())


def ql_init(
    pool_size: int,
    theta: float,
    explore_epsilon: float,
    initial_q: float = 0.5,
    history_limit: int = 64,
) -> QlState:
    _check_pool_size(pool_size)
    if not 0.0 < theta <= 1.0:
        raise InvalidTheta(f"theta must be in (0, 1], got {theta}")
    if not 0.0 <= explore_epsilon < 1.0:
        raise InvalidEpsilon(f"explore_epsilon must be in [0, 1), got {explore_epsilon}")
    q = np.full(pool_size, float(initial_q))
    counts = np.zeros(pool_size, dtype=np.int64)
    q.setflags(write=False)
    counts.setflags(write=False)
    return QlState(
        qvalues=q,
        theta=float(theta),
        explore_epsilon=float(explore_epsilon),
        visit_counts=counts,
        history_limit=history_limit,
    )


def ql_select(state: QlState, rng: np.random.Generator) -> int:
    """Greedy arm with probability ``1 - eps``, else a uniform arm over all arms.

    Both draws are always consumed so the random stream does not depend on
    which branch was taken.
    """
    u = rng.random()
    random_arm = int(rng.integers(len(state.qvalues)))
    if u < state.explore_epsilon:
        return random_arm
    return argmax_lowest(state.qvalues)


def ql_update(state: QlState, chosen: int, reward: float) -> QlState:
    reward = _check_reward(reward)
    q = state.qvalues.copy()
    q[chosen] = q[chosen] + state.theta * (reward - q[chosen])
    change = abs(q[chosen] - state.qvalues[chosen])
    counts = state.visit_counts.copy()
    counts[chosen] += 1
    q.setflags(write=False)
    counts.setflags(write=False)
    greedy = argmax_lowest(q)
    trace = QlUpdateTrace(greedy, float(change) if greedy == chosen else 0.0)
    history = (state.history + (trace,))[-state.history_limit :]
    return replace(state, qvalues=q, visit_counts=counts, history=history, converged_to=None)


def ql_converged(state: QlState, convergence_delta: float, window: int = 20) -> int | None:
    """Greedy arm once the last ``window`` updates left it stable.

    Stable means the greedy arm did not change over the window and every
    change to its Q-value inside the window was below ``convergence_delta``.
    """
    if window > state.history_limit:
        raise ValueError(f"window {window} exceeds tracked history {state.history_limit}")
    if len(state.history) < window:
        return None
    recent = state.history[-window:]
    arm = recent[-1].greedy_arm
    if any(t.greedy_arm != arm for t in recent):
        return None
    if any(t.greedy_change >= convergence_delta for t in recent):
        return None
    return arm


# --------------------------------------------------------------------------
# Baselines
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedArmState:
    """Always routes to one arm; never learns, never converges."""

    pool_size: int
    arm: int

    def __post_init__(self) -> None:
        _check_pool_size(self.pool_size)
        if not 0 <= self.arm < self.pool_size:
            raise InvalidConfig(f"fixed arm {self.arm} outside pool of {self.pool_size}")

    def select(self, rng: np.random.Generator) -> int:
        rng.random()
        return self.arm

    def update(self, chosen: int, reward: float) -> "FixedArmState":
        _check_reward(reward)
        return self

    def converged(self, convergence_delta: float) -> int | None:
        return None

    def snapshot(self) -> list[float]:
        return [1.0 if i == self.arm else 0.0 for i in range(self.pool_size)]


@dataclass(frozen=True)
class UniformState:
    """Picks uniformly at random every round; never learns, never converges."""

    pool_size: int

    def __post_init__(self) -> None:
        _check_pool_size(self.pool_size)

    def select(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.pool_size))

    def update(self, chosen: int, reward: float) -> "UniformState":
        _check_reward(reward)
        return self

    def converged(self, convergence_delta: float) -> int | None:
        return None

    def snapshot(self) -> list[float]:
        return [1.0 / self.pool_size] * self.pool_size


PolicyState = SlaState | QlState | FixedArmState | UniformState


def simplex_ok(probs: np.ndarray, tol: float = SIMPLEX_TOL) -> bool:
    probs = np.asarray(probs)
    return bool(np.all(probs >= 0.0) and np.all(probs <= 1.0) and abs(probs.sum() - 1.0) <= tol)


__all__ = [
    "FixedArmState",
    "InvalidBeta",
    "InvalidEpsilon",
    "InvalidTheta",
    "PolicyState",
    "QlState",
    "RewardOutOfRange",
    "SlaState",
    "UniformState",
    "argmax_lowest",
    "ql_converged",
    "ql_init",
    "ql_select",
    "ql_update",
    "simplex_ok",
    "sla_converged",
    "sla_init",
    "sla_select",
    "sla_update",
]
