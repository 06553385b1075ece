"""Treatment-allocation designs over U_t in {-1, +1}.

Four design families cover the experiment layouts the estimator and the
asymptotic MSE formulas understand:

* Switchback(m): deterministic blocks of length m with a random initial sign;
  m = 1 alternates every interval ("AT"), m = intervals-per-day alternates
  daily ("AD", whose infinite-block limit has autocovariance identically 1).
* UniformRandom: iid fair coin per interval ("UR").
* Markov(alpha, beta): two-state chain with P(+1 -> +1) = alpha and
  P(-1 -> +1) = beta; balanced when beta = 1 - alpha, in which case the lag-k
  treatment autocovariance is (2 alpha - 1)^k.
* QDependent(policy): deterministic function of the last q treatments, the
  class in which the optimal design lives.  Initialisation is the all-(+1)
  seed state followed by a global sign flip with probability 1/2, which keeps
  the design balanced without touching the lag products.

`autocov(design, k)` returns the limiting lag-k treatment autocovariance
lim Cov(U_t, U_{t-k}) (time-averaged for deterministic designs), the moment
the MSE formulas consume; at k = 0 it equals 1 - xi^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._jsonio import dump_json, load_json
from ._rng import STREAM_TREATMENT, substream


def _bit(u: int) -> int:
    return 1 if u > 0 else 0


@dataclass(frozen=True)
class PolicyTable:
    """Deterministic policy on the last q treatments.

    `table[i]` is the action for the state with canonical index i, where the
    state (U_{t-1}, ..., U_{t-q}) is encoded with -1 -> 0, +1 -> 1 and the
    oldest lag as the most significant bit:
    i = sum_j bit(U_{t-j}) * 2^(j-1).
    """

    q: int
    table: tuple
    init_rule: str = "global-sign-randomized"

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"PolicyTable requires q >= 1, got {self.q}")
        table = tuple(int(v) for v in self.table)
        if len(table) != 2**self.q:
            raise ValueError(
                f"table must have 2^q = {2**self.q} entries, got {len(table)}"
            )
        if any(v not in (-1, 1) for v in table):
            raise ValueError("table entries must be -1 or +1")
        object.__setattr__(self, "table", table)

    @staticmethod
    def state_index(state) -> int:
        """Canonical index of state (U_{t-1}, ..., U_{t-q}), newest first."""
        return sum(_bit(u) << i for i, u in enumerate(state))

    def next_index(self, idx: int, action: int) -> int:
        """Index of (action, U_{t-1}, ..., U_{t-q+1}) after shifting the window."""
        return _bit(action) + 2 * (idx & (2 ** (self.q - 1) - 1))

    def cycle_actions(self, start_idx: int) -> list:
        """Treatments along the limit cycle reached from `start_idx`."""
        seen = {}
        idx, seq = start_idx, []
        while idx not in seen:
            seen[idx] = len(seq)
            a = self.table[idx]
            seq.append(a)
            idx = self.next_index(idx, a)
        return seq[seen[idx] :]

    @staticmethod
    def _cycle_lag_mean(cycle, k: int) -> float:
        L = len(cycle)
        return float(np.mean([cycle[i] * cycle[(i + k) % L] for i in range(L)]))

    def lag_mean_from(self, start_idx: int, k: int) -> float:
        """Limiting average of U_t U_{t+k} starting from `start_idx`."""
        return self._cycle_lag_mean(self.cycle_actions(start_idx), k)

    def lag_mean_all_starts(self, k: int) -> float:
        """Average of the limiting U_t U_{t+k} over all 2^q initial states."""
        return float(
            np.mean([self.lag_mean_from(i, k) for i in range(2**self.q)])
        )


@dataclass(frozen=True)
class Switchback:
    """Deterministic sign blocks of length m, random initial sign."""

    m: int
    label: str | None = None

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"block length m must be a positive integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def name(self) -> str:
        return self.label if self.label else f"switchback(m={self.m})"

    def sample(self, T: int, rng: np.random.Generator) -> np.ndarray:
        s0 = 2 * int(rng.integers(0, 2)) - 1
        # final partial block is simply truncated
        return s0 * (-1) ** (np.arange(T) // self.m)

    def xi(self) -> float:
        return 0.0

    def autocov(self, k: int) -> float:
        # phase-averaged lag product: within-block distance r = k mod m mixes
        # (m - r) aligned with r flipped pairs; whole blocks alternate sign.
        s, r = divmod(int(k), self.m)
        return (-1.0) ** s * (self.m - 2 * r) / self.m

    def to_dict(self) -> dict:
        out = {"variant": "switchback", "m": self.m}
        if self.label:
            out["label"] = self.label
        return out


@dataclass(frozen=True)
class UniformRandom:
    """iid fair coin per interval."""

    label: str | None = None

    @property
    def name(self) -> str:
        return self.label if self.label else "ur"

    def sample(self, T: int, rng: np.random.Generator) -> np.ndarray:
        return 2 * rng.integers(0, 2, size=T) - 1

    def xi(self) -> float:
        return 0.0

    def autocov(self, k: int) -> float:
        return 1.0 if k == 0 else 0.0

    def to_dict(self) -> dict:
        out = {"variant": "ur"}
        if self.label:
            out["label"] = self.label
        return out


@dataclass(frozen=True)
class Markov:
    """Two-state chain: P(+1 -> +1) = alpha, P(-1 -> +1) = beta."""

    alpha: float
    beta: float
    label: str | None = None

    def __post_init__(self):
        for nm, v in (("alpha", self.alpha), ("beta", self.beta)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{nm} must lie in [0, 1], got {v}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def name(self) -> str:
        return self.label if self.label else f"markov(alpha={self.alpha}, beta={self.beta})"

    def sample(self, T: int, rng: np.random.Generator) -> np.ndarray:
        u = np.empty(T, dtype=np.int64)
        state = 2 * int(rng.integers(0, 2)) - 1
        u[0] = state
        w = rng.random(T - 1) if T > 1 else ()
        for t in range(1, T):
            p_up = self.alpha if state == 1 else self.beta
            state = 1 if w[t - 1] < p_up else -1
            u[t] = state
        return u

    def xi(self) -> float:
        if self.alpha == 1.0 and self.beta == 0.0:
            warnings.warn(
                "Markov(alpha=1, beta=0) is absorbing: the limit of E[U_t] is "
                "undefined; reporting 0 by symmetry of the initial draw",
                stacklevel=2,
            )
            return 0.0
        return (self.alpha + self.beta - 1.0) / (self.beta + 1.0 - self.alpha)

    def autocov(self, k: int) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            x = self.xi()
        return (1.0 - x * x) * (self.alpha - self.beta) ** int(k)

    def to_dict(self) -> dict:
        out = {"variant": "markov", "alpha": self.alpha, "beta": self.beta}
        if self.label:
            out["label"] = self.label
        return out


@dataclass(frozen=True)
class QDependent:
    """Deterministic q-memory design driven by a PolicyTable."""

    policy: PolicyTable
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label if self.label else f"qdependent(q={self.policy.q})"

    def sample(self, T: int, rng: np.random.Generator) -> np.ndarray:
        flip = -1 if rng.random() < 0.5 else 1
        q = self.policy.q
        u = np.empty(T, dtype=np.int64)
        n_pad = min(q, T)
        u[:n_pad] = 1  # the all-(+1) seed state supplies the first q steps
        idx = 2**q - 1
        for t in range(q, T):
            a = self.policy.table[idx]
            u[t] = a
            idx = self.policy.next_index(idx, a)
        return flip * u

    def xi(self) -> float:
        return 0.0

    def autocov(self, k: int) -> float:
        # limit of the generated sequence, i.e. the cycle reached from the
        # all-(+1) seed state; the sign flip does not move lag products.
        return self.policy.lag_mean_from(2**self.policy.q - 1, int(k))

    def to_dict(self) -> dict:
        out = {
            "variant": "qdependent",
            "q": self.policy.q,
            "table": list(self.policy.table),
            "init_rule": self.policy.init_rule,
        }
        if self.label:
            out["label"] = self.label
        return out


DesignSpec = Switchback | UniformRandom | Markov | QDependent

# Conventional named designs: AT alternates every interval; AD is Switchback
# with one block per day and its infinite-block limit is handled by the
# closed-form MSE helpers.
def at_design() -> Switchback:
    return Switchback(1, label="AT")


def ur_design() -> UniformRandom:
    return UniformRandom(label="UR")


def ad_design(intervals_per_day: int) -> Switchback:
    return Switchback(intervals_per_day, label="AD")


def generate(design: DesignSpec, T: int, seed) -> np.ndarray:
    """Sample a length-T treatment sequence reproducibly from `seed`."""
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T}")
    rng = substream(seed, STREAM_TREATMENT)
    u = design.sample(int(T), rng)
    return np.asarray(u, dtype=np.int64)


def xi(design: DesignSpec) -> float:
    """Limiting mean treatment fraction xi = lim E[U_t]."""
    return design.xi()


def autocov(design: DesignSpec, k: int) -> float:
    """Limiting lag-k treatment autocovariance lim Cov(U_t, U_{t-k})."""
    if k < 0:
        k = -k
    return design.autocov(int(k))


# ---------------------------------------------------------------------------
# JSON serialization


def design_to_dict(design: DesignSpec) -> dict:
    return design.to_dict()


def design_from_dict(obj: dict) -> DesignSpec:
    try:
        variant = obj["variant"]
    except KeyError:
        raise ValueError("design JSON lacks a 'variant' field") from None
    label = obj.get("label")
    if variant == "switchback":
        return Switchback(m=int(obj["m"]), label=label)
    if variant == "ur":
        return UniformRandom(label=label)
    if variant == "markov":
        return Markov(alpha=float(obj["alpha"]), beta=float(obj["beta"]), label=label)
    if variant == "qdependent":
        policy = PolicyTable(
            q=int(obj["q"]),
            table=tuple(obj["table"]),
            init_rule=obj.get("init_rule", "global-sign-randomized"),
        )
        return QDependent(policy=policy, label=label)
    raise ValueError(f"unknown design variant {variant!r}")


def save_design(design: DesignSpec, path) -> None:
    dump_json(design_to_dict(design), path)


def load_design(path) -> DesignSpec:
    return design_from_dict(load_json(path))
