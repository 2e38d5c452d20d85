"""Average-reward MDP machinery shared by the exact solvers.

The fork-race MDPs built in this package all follow the same two-stage
shape: a decision state is transformed deterministically by the chosen
action (possibly crediting canonical blocks and adversary reward), and
the resulting race configuration is then hit by one stochastic mining
event.  The mining event's outcome distribution factors into a small set
of outcome classes (who mined the block, and in which fork context) whose
probability weights are the only place the adversary share alpha and the
communication capability gamma appear.  Keeping that factorization
explicit lets a threshold search re-weight the same transition structure
for every alpha instead of rebuilding it.

The fractional objective sum(R_A) / sum(N_A + N_H) is solved by root
finding on rho over the transformed reward r - rho * n (each transition's
n is its canonical-block credit), with relative value iteration as the
inner evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass
class OutcomeClass:
    """One family of mining outcomes (e.g. "the honest miners found the
    next block on the adversarial prefix").

    P is row-stochastic over next decision states for every post-state
    where the class is active; weight[k] is the probability of the class
    at post-state k and is the only alpha/gamma-dependent quantity.
    reward/canon are credits attached to the mining event itself (used
    when a match race resolves at block arrival).
    """

    name: str
    P: sp.csr_matrix
    weight: np.ndarray
    reward: np.ndarray
    canon: np.ndarray


@dataclass
class ActionTable:
    """Deterministic action stage: state -> post-state with credits."""

    name: str
    legal: np.ndarray   # bool (n_states,)
    post: np.ndarray    # int  (n_states,) post-state index (0 where illegal)
    reward: np.ndarray  # float (n_states,)
    canon: np.ndarray   # float (n_states,)


@dataclass
class FactoredMDP:
    n_states: int
    n_post: int
    actions: list[ActionTable]
    classes: list[OutcomeClass]
    meta: dict = field(default_factory=dict)

    def check_stochastic(self, tol: float = 1e-12) -> float:
        """Max deviation of total outgoing probability from 1 over all
        (state, action) pairs with at least one legal action."""
        total = np.zeros(self.n_post)
        for c in self.classes:
            rowsum = np.asarray(c.P.sum(axis=1)).ravel()
            total += c.weight * rowsum
        worst = 0.0
        for a in self.actions:
            if a.legal.any():
                dev = np.abs(total[a.post[a.legal]] - 1.0).max()
                worst = max(worst, float(dev))
        return worst

    def expected_values(self, v: np.ndarray, rho: float) -> np.ndarray:
        """Expected one-mining-event continuation value per post-state."""
        ev = np.zeros(self.n_post)
        for c in self.classes:
            ev += c.weight * (c.reward - rho * c.canon + c.P.dot(v))
        return ev

    def bellman(self, v: np.ndarray, rho: float, policy_out: np.ndarray | None = None) -> np.ndarray:
        ev = self.expected_values(v, rho)
        tv = np.full(self.n_states, -np.inf)
        for idx, a in enumerate(self.actions):
            q = a.reward - rho * a.canon + ev[a.post]
            if policy_out is not None:
                better = a.legal & (q > tv)
                policy_out[better] = idx
            np.maximum(tv, np.where(a.legal, q, -np.inf), out=tv)
        return tv

    def policy_values(self, v: np.ndarray, rho: float, policy: np.ndarray) -> np.ndarray:
        """One evaluation sweep for a fixed policy."""
        ev = self.expected_values(v, rho)
        tv = np.zeros(self.n_states)
        for idx, a in enumerate(self.actions):
            mask = policy == idx
            if mask.any():
                tv[mask] = (a.reward - rho * a.canon + ev[a.post])[mask]
        return tv


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, span: float):
        super().__init__(f"{message} (residual span {span:.3e})")
        self.span = span


@dataclass
class VIResult:
    gain: float
    values: np.ndarray
    span: float
    iterations: int


def relative_value_iteration(
    mdp: FactoredMDP,
    rho: float,
    v0: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> VIResult:
    """Optimal average reward of the transformed problem r - rho * n.

    Converges for unichain aperiodic chains; the fork-race MDPs here
    regenerate at the empty race, which guarantees both.
    """
    v = np.zeros(mdp.n_states) if v0 is None else v0.copy()
    span = np.inf
    for it in range(1, max_iter + 1):
        tv = mdp.bellman(v, rho)
        diff = tv - v
        lo, hi = diff.min(), diff.max()
        span = hi - lo
        v = tv - tv[0]  # keep values anchored to avoid drift
        if span < tol:
            return VIResult(gain=0.5 * (lo + hi), values=v, span=span, iterations=it)
    raise ConvergenceError(f"value iteration did not reach span {tol:g} in {max_iter} sweeps", span)


@dataclass
class SolveResult:
    rho: float
    policy: np.ndarray
    values: np.ndarray
    gain_residual: float
    vi_sweeps: int

    def action_name(self, mdp: FactoredMDP, state_index: int) -> str:
        return mdp.actions[self.policy[state_index]].name


def solve_average_reward(
    mdp: FactoredMDP,
    rho_bracket: tuple[float, float],
    rho_tol: float = 1e-9,
    vi_tol: float = 1e-11,
    max_iter: int = 100_000,
) -> SolveResult:
    """Solve the fractional objective by root finding on rho.

    g(rho) = optimal average of (r - rho * n) is decreasing and convex
    piecewise-linear in rho; a secant step safeguarded by bisection finds
    the root g(rho*) = 0.  Returns rho* and the maximizing stationary
    deterministic policy.
    """
    lo, hi = rho_bracket
    if not lo <= hi:
        raise ValueError(f"invalid rho bracket {rho_bracket}")
    v = None
    sweeps = 0

    def g(rho: float) -> float:
        nonlocal v, sweeps
        res = relative_value_iteration(mdp, rho, v0=v, tol=vi_tol, max_iter=max_iter)
        v = res.values
        sweeps += res.iterations
        return res.gain

    g_lo = g(lo)
    if abs(g_lo) <= rho_tol:
        rho_star, g_star = lo, g_lo
    else:
        if g_lo < 0:
            raise ValueError(f"rho bracket lower end {lo} already above the optimum (g={g_lo:.3e})")
        g_hi = g(hi)
        if g_hi > rho_tol:
            raise ValueError(f"rho bracket upper end {hi} below the optimum (g={g_hi:.3e})")
        rho_star, g_star = hi, g_hi
        while abs(g_star) > rho_tol and hi - lo > 1e-15:
            # secant proposal, clamped into the open bracket
            denom = g_hi - g_lo
            rho_next = hi - g_hi * (hi - lo) / denom if denom != 0 else 0.5 * (lo + hi)
            if not lo < rho_next < hi:
                rho_next = 0.5 * (lo + hi)
            g_next = g(rho_next)
            rho_star, g_star = rho_next, g_next
            if g_next > 0:
                lo, g_lo = rho_next, g_next
            else:
                hi, g_hi = rho_next, g_next

    policy = np.zeros(mdp.n_states, dtype=np.int32)
    mdp.bellman(v, rho_star, policy_out=policy)
    return SolveResult(rho=rho_star, policy=policy, values=v, gain_residual=g_star, vi_sweeps=sweeps)


def solve_per_step_average(
    mdp: FactoredMDP,
    vi_tol: float = 1e-11,
    max_iter: int = 100_000,
) -> SolveResult:
    """Optimal plain average reward per step (denominator = steps).

    Used for the pre-difficulty-adjustment objective, where every mined
    block consumes exactly one time step; no rho transformation needed.
    """
    res = relative_value_iteration(mdp, rho=0.0, tol=vi_tol, max_iter=max_iter)
    policy = np.zeros(mdp.n_states, dtype=np.int32)
    mdp.bellman(res.values, 0.0, policy_out=policy)
    return SolveResult(rho=res.gain, policy=policy, values=res.values,
                       gain_residual=res.span, vi_sweeps=res.iterations)


class CooBuilder:
    """Accumulates one outcome class's transition rows."""

    def __init__(self, name: str, n_post: int):
        self.name = name
        self.n_post = n_post
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.probs: list[float] = []
        self.weight = np.zeros(n_post)
        self.reward = np.zeros(n_post)
        self.canon = np.zeros(n_post)

    def add(self, post: int, weight: float, outcomes: list[tuple[float, int]],
            reward: float = 0.0, canon: float = 0.0):
        """Register the class at a post-state: `outcomes` are (prob, next
        state index) pairs summing to 1."""
        self.weight[post] = weight
        self.reward[post] = reward
        self.canon[post] = canon
        for prob, nxt in outcomes:
            if prob > 0.0:
                self.rows.append(post)
                self.cols.append(nxt)
                self.probs.append(prob)

    def build(self, n_states: int) -> OutcomeClass:
        P = sp.coo_matrix(
            (self.probs, (self.rows, self.cols)), shape=(self.n_post, n_states)
        ).tocsr()
        P.sum_duplicates()
        return OutcomeClass(self.name, P, self.weight, self.reward, self.canon)
