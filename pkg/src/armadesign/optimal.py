"""Optimal treatment designs: balanced Markov (CO) and q-dependent (RL).

Both routes minimise the design-dependent part of the asymptotic MSE,
4 [c_0 + 2 sum_k rho_U(k) c_k]:

* CO restricts to balanced Markov chains, where rho_U(k) = (2 alpha - 1)^k,
  and minimises the degree-q polynomial f(alpha) = sum_k c_k (2 alpha - 1)^k
  over [0, 1] exactly, by enumerating the real critical points of f' plus
  the endpoints.

* RL searches deterministic q-dependent policies.  The state is the window
  of the last q treatments, the action is U_t, the (negated-cost) reward is
  R = -sum_k c_k * a * a_k, and transitions shift the window.  Discounted
  value iteration serves as a proxy for the average-reward objective; an
  exhaustive policy enumeration provides the verification oracle for small q.

The discounted proxy is exact only once the discount exceeds a
problem-dependent (Blackwell) threshold, so value_iteration certifies its
greedy policy against the exact optimal average reward — a maximum-mean
cycle of the deterministic transition graph, computed by Karp's algorithm —
and reruns with a discount closer to 1 whenever certification fails.

The objective of a policy is evaluated exactly: the deterministic dynamics
on 2^q states must enter a cycle, so the limiting averages of U_t U_{t+k}
are cycle averages, averaged over all initial states.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .designs import Markov, PolicyTable, QDependent

# certification via Karp's algorithm stores an O(4^q) table; beyond this
# window length return the plain greedy policy uncertified
_CERT_MAX_Q = 10
_GAMMA_LADDER = 6          # certification retries, each with (1-gamma)/10
_CHECK_EVERY = 16          # sweeps between early-exit certification checks


def _c_array(c) -> np.ndarray:
    """Accept CkCoefficients or a plain sequence of c_1..c_q."""
    if hasattr(c, "c"):
        return np.asarray(c.c, dtype=float)
    return np.asarray(c, dtype=float).reshape(-1)


@dataclass(frozen=True, eq=False)
class MdpSpec:
    """MDP on windows of the last q treatments.

    State s = (a_1..a_q) holds the most recent q treatments (a_1 newest);
    action a appends a new treatment; reward R = -sum_k c_k a a_k; the next
    state is (a, a_1, ..., a_{q-1}).
    """

    q: int
    c: np.ndarray          # c_1..c_q
    gamma: float = 0.99
    tol: float = 1e-10

    def __post_init__(self):
        c = _c_array(self.c)
        if self.q < 1:
            raise ValueError(f"MdpSpec requires q >= 1, got {self.q}")
        if c.shape != (self.q,):
            raise ValueError(f"c must list c_1..c_{self.q}, got shape {c.shape}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"discount gamma must lie in (0,1), got {self.gamma}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        object.__setattr__(self, "c", c)

    @property
    def n_states(self) -> int:
        return 2**self.q


def solve_alpha(c) -> dict:
    """Globally minimise f(alpha) = sum_k c_k (2 alpha - 1)^k over [0, 1].

    Returns {"alpha": argmin, "objective": min}; ties resolve to the
    smallest alpha.  Critical points come from the real roots of f' found
    via the companion matrix of the derivative polynomial.
    """
    c = _c_array(c)
    q = c.shape[0]
    if q == 0 or not np.any(c):
        return {"alpha": 0.5, "objective": 0.0}
    # work in x = 2 alpha - 1 on [-1, 1]
    g = np.polynomial.Polynomial(np.concatenate(([0.0], c)))
    candidates = [-1.0, 1.0]
    dg = g.deriv()
    if dg.degree() >= 1:
        for root in dg.roots():
            if abs(root.imag) < 1e-9 and -1.0 < root.real < 1.0:
                candidates.append(float(root.real))
    best_x, best_val = None, math.inf
    for x in sorted(candidates):
        val = float(g(x))
        if val < best_val:  # strict: the smallest x wins ties
            best_x, best_val = x, val
    return {"alpha": (best_x + 1.0) / 2.0, "objective": best_val}


def _reward_table(spec: MdpSpec):
    """rewards[a_idx, s] and next_state[a_idx, s] for actions (-1, +1)."""
    q, c = spec.q, spec.c
    n = spec.n_states
    lag_sum = np.empty(n)
    for s in range(n):
        window = np.array([1.0 if (s >> i) & 1 else -1.0 for i in range(q)])
        lag_sum[s] = float(c @ window)
    rewards = np.empty((2, n))
    nxt = np.empty((2, n), dtype=np.int64)
    mask = 2 ** (q - 1) - 1
    for ai, a in enumerate((-1, 1)):
        rewards[ai] = -a * lag_sum
        bit = 1 if a > 0 else 0
        for s in range(n):
            nxt[ai, s] = bit + 2 * (s & mask)
    return rewards, nxt


def _max_mean_cycle(rewards: np.ndarray, nxt: np.ndarray) -> float:
    """Karp's algorithm: the maximum mean cycle of the transition graph.

    Every window state is reachable from every other (dial in the bits over
    q steps), so a single source suffices and the maximum-mean cycle equals
    the best achievable average reward from any start.
    """
    n = rewards.shape[1]
    D = np.full((n + 1, n), -np.inf)
    D[0, 0] = 0.0
    for k in range(n):
        for ai in range(2):
            np.maximum.at(D[k + 1], nxt[ai], D[k] + rewards[ai])
    best = -math.inf
    for v in range(n):
        if not np.isfinite(D[n, v]):
            continue
        ratios = [
            (D[n, v] - D[k, v]) / (n - k)
            for k in range(n)
            if np.isfinite(D[k, v])
        ]
        if ratios:
            best = max(best, min(ratios))
    return best


def _greedy_policy(V, rewards, nxt, gamma: float, q: int) -> PolicyTable:
    table = []
    for s in range(V.shape[0]):
        q_minus = rewards[0, s] + gamma * V[nxt[0, s]]
        q_plus = rewards[1, s] + gamma * V[nxt[1, s]]
        table.append(1 if q_plus >= q_minus else -1)
    return PolicyTable(q=q, table=tuple(table))


def _run_sweeps(rewards, nxt, gamma, tol, r_max, q, certify=None):
    """In-place Bellman sweeps until the max value change drops below tol.

    With a `certify` callback, the greedy policy is extracted periodically
    and returned as soon as it certifies, skipping the tail of the value
    convergence.  Sweep counts are checked against the contraction bound
    ceil(log(tol (1-gamma) / R_max) / log gamma).
    """
    n = rewards.shape[1]
    V = np.zeros(n)
    sweep_bound = math.ceil(math.log(tol * (1.0 - gamma) / r_max) / math.log(gamma))
    sweeps = 0
    delta = math.inf
    while delta > tol:
        delta = 0.0
        for s in range(n):
            v_new = max(
                rewards[0, s] + gamma * V[nxt[0, s]],
                rewards[1, s] + gamma * V[nxt[1, s]],
            )
            delta = max(delta, abs(v_new - V[s]))
            V[s] = v_new
        sweeps += 1
        if sweeps > sweep_bound:
            raise RuntimeError(
                f"value iteration exceeded its contraction bound of "
                f"{sweep_bound} sweeps; check the reward scale"
            )
        if certify is not None and sweeps % _CHECK_EVERY == 0:
            policy = _greedy_policy(V, rewards, nxt, gamma, q)
            if certify(policy):
                return policy, sweeps
    return _greedy_policy(V, rewards, nxt, gamma, q), sweeps


def value_iteration(spec: MdpSpec) -> PolicyTable:
    """Greedy policy from in-place discounted value iteration.

    Runs Bellman sweeps at spec.gamma until the largest value change in a
    sweep drops below spec.tol, then extracts the greedy policy (action
    ties break toward +1).  The policy's exact average objective is then
    certified against the maximum-mean cycle of the transition graph; if
    the discount was too far from 1 for the greedy policy to be
    average-reward optimal, the sweeps rerun with 1 - gamma shrunk tenfold
    until certification passes.
    """
    rewards, nxt = _reward_table(spec)
    r_max = float(np.sum(np.abs(spec.c)))
    if r_max == 0.0:
        return PolicyTable(q=spec.q, table=(1,) * spec.n_states)

    policy, _ = _run_sweeps(rewards, nxt, spec.gamma, spec.tol, r_max, spec.q)
    if spec.q > _CERT_MAX_Q:
        return policy

    mu_star = _max_mean_cycle(rewards, nxt)
    cert_tol = 1e-11 * max(1.0, r_max)

    def certified(p: PolicyTable) -> bool:
        return policy_objective(p, spec.c) <= -mu_star + cert_tol

    if certified(policy):
        return policy
    gamma = spec.gamma
    for _ in range(_GAMMA_LADDER):
        gamma = 1.0 - (1.0 - gamma) / 10.0
        policy, _ = _run_sweeps(
            rewards, nxt, gamma, spec.tol, r_max, spec.q, certify=certified
        )
        if certified(policy):
            return policy
    raise RuntimeError(
        f"value iteration failed to certify an average-reward optimal policy "
        f"up to discount {gamma}; best objective "
        f"{policy_objective(policy, spec.c)} vs optimum {-mu_star}"
    )


def policy_objective(policy: PolicyTable, c) -> float:
    """Exact limiting objective sum_k c_k avg_t E[U_t U_{t+k}].

    The deterministic dynamics from each initial state settle on a cycle;
    lag products are averaged over that cycle and then over all 2^q initial
    states.
    """
    c = _c_array(c)
    if c.shape[0] != policy.q:
        raise ValueError(f"need c_1..c_{policy.q}, got {c.shape[0]} values")
    return float(
        sum(c[k - 1] * policy.lag_mean_all_starts(k) for k in range(1, policy.q + 1))
    )


def exhaustive_search(c, q: int) -> dict:
    """Brute-force oracle: minimise policy_objective over all 2^(2^q) tables.

    Returns {"policy": PolicyTable, "objective": real}; ties resolve to the
    lexicographically smallest table.  Guarded to q <= 4.
    """
    if q > 4:
        raise ValueError(f"exhaustive search over 2^(2^{q}) policies is infeasible")
    if q < 1:
        raise ValueError("q must be >= 1")
    c = _c_array(c)
    best_policy, best_val = None, math.inf
    for table in itertools.product((-1, 1), repeat=2**q):
        policy = PolicyTable(q=q, table=table)
        val = policy_objective(policy, c)
        if val < best_val:
            best_policy, best_val = policy, val
    return {"policy": best_policy, "objective": best_val}


def co_design(c, label: str = "CO") -> Markov:
    """The balanced Markov design at solve_alpha's optimum."""
    alpha = solve_alpha(c)["alpha"]
    return Markov(alpha=alpha, beta=1.0 - alpha, label=label)


def rl_design(c, q: int | None = None, gamma: float = 0.99, tol: float = 1e-10,
              label: str = "RL") -> QDependent:
    """The q-dependent design from value iteration on the window MDP."""
    arr = _c_array(c)
    if q is None:
        q = arr.shape[0]
    policy = value_iteration(MdpSpec(q=q, c=arr[:q], gamma=gamma, tol=tol))
    return QDependent(policy=policy, label=label)
