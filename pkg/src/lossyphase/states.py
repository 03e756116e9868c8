"""Definite-photon-number two-mode states and the photon-loss channel.

A pure input state ``sum_k alpha_k |k, N-k>`` is stored only through the
weights ``x_k = |alpha_k|^2``; amplitude phases never affect the Fisher
information, so they are dropped.

Loss in each arm is a beam splitter of transmissivity ``eta``.  Tracing out
the environment leaves a mixture of pure *branches* labelled by the number of
photons ``l`` lost from arm a and ``m`` lost from arm b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ContractError

SIMPLEX_ATOL = 1e-12
BRANCH_THRESHOLD = 1e-15

STATE_KINDS = (
    "noon",
    "unbalanced-noon",
    "two-component",
    "symmetric",
    "twin-fock",
    "holland-burnett",
    "fock",
    "uniform",
)


def binomial_row(n: int) -> np.ndarray:
    """Binomial coefficients C(n, 0..n) in double precision."""
    row = np.empty(n + 1)
    row[0] = 1.0
    for j in range(n):
        row[j + 1] = row[j] * (n - j) / (j + 1)
    return row


@lru_cache(maxsize=64)
def _binomial_table(n: int) -> np.ndarray:
    table = np.zeros((n + 1, n + 1))
    for a in range(n + 1):
        table[a, : a + 1] = binomial_row(a)
    table.setflags(write=False)
    return table


@dataclass(frozen=True, eq=False)
class InputState:
    """Pure N-photon state given by its Fock-basis weights ``x_0..x_N``.

    Weights that miss the simplex by at most ``1e-12`` are silently
    renormalized; anything further off raises :class:`ContractError`.
    """

    n: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 0:
            raise ContractError(f"photon number must be a nonnegative integer, got {self.n!r}")
        w = np.array(self.weights, dtype=float).ravel()
        if w.size != self.n + 1:
            raise ContractError(f"expected {self.n + 1} weights for n={self.n}, got {w.size}")
        if not np.all(np.isfinite(w)):
            raise ContractError("weights must be finite")
        if np.any(w < -SIMPLEX_ATOL):
            raise ContractError(f"weights must be nonnegative, min is {w.min():.3g}")
        w = np.clip(w, 0.0, None)
        total = math.fsum(w)
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise ContractError(f"weights must sum to 1, got {total!r}")
        w = w / total
        w.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "weights", w)

    @property
    def amplitudes(self) -> np.ndarray:
        """Real nonnegative amplitudes ``sqrt(x_k)``."""
        return np.sqrt(self.weights)

    def support(self, threshold: float = 0.0) -> dict[int, float]:
        """Sparse view ``{k: x_k}`` of the weights above ``threshold``."""
        return {k: float(x) for k, x in enumerate(self.weights) if x > threshold}

    def __repr__(self):
        return f"InputState(n={self.n}, support={self.support(1e-9)})"


@dataclass(frozen=True)
class LossModel:
    """Transmissivities of the two arms."""

    eta_a: float
    eta_b: float

    def __post_init__(self):
        for name in ("eta_a", "eta_b"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ContractError(f"{name} must lie in [0, 1], got {v!r}")
            object.__setattr__(self, name, float(v))

    @classmethod
    def both_arms(cls, eta: float) -> LossModel:
        return cls(eta, eta)

    @classmethod
    def one_arm(cls, eta: float) -> LossModel:
        return cls(eta, 1.0)

    @property
    def is_lossless(self) -> bool:
        return self.eta_a == 1.0 and self.eta_b == 1.0


def branch_coefficient(k: int, l: int, m: int, n: int, loss: LossModel) -> float:
    """Probability that the ``|k, n-k>`` component loses ``l`` photons from
    arm a and ``m`` from arm b.
    """
    if not (0 <= l <= k <= n and 0 <= m <= n - k):
        raise ContractError(f"index out of range: k={k}, l={l}, m={m}, n={n}")
    ea, eb = loss.eta_a, loss.eta_b
    c = _binomial_table(n)
    return float(
        c[k, l] * c[n - k, m]
        * ea ** (k - l) * (1.0 - ea) ** l
        * eb ** (n - k - m) * (1.0 - eb) ** m
    )


@dataclass(frozen=True)
class BranchTable:
    """Dense ``B[branch, k]`` array for every loss branch ``(l, m)``, l + m <= n.

    Rows are ordered lexicographically by ``(l, m)``; entries outside
    ``l <= k <= n - m`` are zero.
    """

    n: int
    l: np.ndarray
    m: np.ndarray
    coeffs: np.ndarray


@lru_cache(maxsize=128)
def _branch_table(n: int, eta_a: float, eta_b: float) -> BranchTable:
    c = _binomial_table(n)
    ks = np.arange(n + 1)
    ls, ms, rows = [], [], []
    for l in range(n + 1):
        for m in range(n - l + 1):
            k = ks[l : n - m + 1]
            row = np.zeros(n + 1)
            row[l : n - m + 1] = (
                c[k, l] * c[n - k, m]
                * eta_a ** (k - l) * (1.0 - eta_a) ** l
                * eta_b ** (n - k - m) * (1.0 - eta_b) ** m
            )
            ls.append(l)
            ms.append(m)
            rows.append(row)
    table = BranchTable(n, np.array(ls), np.array(ms), np.array(rows))
    for arr in (table.l, table.m, table.coeffs):
        arr.setflags(write=False)
    return table


def branch_table(n: int, loss: LossModel) -> BranchTable:
    """Cached coefficient table shared by the Fisher-information routines."""
    return _branch_table(int(n), loss.eta_a, loss.eta_b)


@dataclass(frozen=True, eq=False)
class Branch:
    l: int
    m: int
    probability: float
    amplitudes: np.ndarray = field(repr=False)  # indexed by surviving arm-a count

    @property
    def survivors(self) -> int:
        return self.amplitudes.size - 1


@dataclass(frozen=True, eq=False)
class BranchDecomposition:
    n: int
    branches: list[Branch]

    def total_probability(self) -> float:
        return math.fsum(b.probability for b in self.branches)

    def __len__(self):
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)

    def get(self, l: int, m: int) -> Branch | None:
        for b in self.branches:
            if b.l == l and b.m == m:
                return b
        return None


def decompose(state: InputState, loss: LossModel) -> BranchDecomposition:
    """Split the post-loss mixed state into normalized conditional pure states.

    Branch ``(l, m)`` occurs with probability ``sum_k x_k B^k_lm`` and its
    amplitude on surviving index ``j = k - l`` is proportional to
    ``sqrt(x_k B^k_lm)``.  Branches below ``1e-15`` are dropped.
    """
    n = state.n
    table = branch_table(n, loss)
    weighted = table.coeffs * state.weights
    probs = weighted.sum(axis=1)
    branches = []
    for i, p in enumerate(probs):
        if p < BRANCH_THRESHOLD:
            continue
        l, m = int(table.l[i]), int(table.m[i])
        amps = np.sqrt(weighted[i, l : n - m + 1] / p)
        branches.append(Branch(l, m, float(p), amps))
    return BranchDecomposition(n, branches)


def preset_state(kind: str, n: int, **params) -> InputState:
    """Named input states.

    ``noon``            (|N,0> + |0,N>)/sqrt2
    ``unbalanced-noon`` weight ``p`` on |N,0>, ``1-p`` on |0,N>
    ``two-component``   sqrt(p)|m,N-m> + sqrt(1-p)|N,0>
    ``symmetric``       (|m,N-m> + |N-m,m>)/sqrt2
    ``twin-fock``       |N/2, N/2>, even N only
    ``holland-burnett`` |N/2, N/2> after a balanced beam splitter, in the arm
                        basis: x_2j = C(2j, j) C(N-2j, N/2-j) / 2^N
    ``fock``            single component |k, N-k>
    ``uniform``         equal weight on every component
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ContractError(f"preset states need n >= 1, got {n!r}")
    n = int(n)
    x = np.zeros(n + 1)

    def _p(default=None):
        p = params.get("p", default)
        if p is None:
            raise ContractError(f"{kind} needs parameter p")
        if not (0.0 <= p <= 1.0):
            raise ContractError(f"p must lie in [0, 1], got {p!r}")
        return float(p)

    def _index(name):
        if name not in params:
            raise ContractError(f"{kind} needs parameter {name}")
        v = params[name]
        if int(v) != v or not (0 <= v <= n):
            raise ContractError(f"{name} must be an integer in [0, {n}], got {v!r}")
        return int(v)

    if kind == "noon":
        x[0] = x[n] = 0.5
    elif kind == "unbalanced-noon":
        p = _p()
        x[n] += p
        x[0] += 1.0 - p
    elif kind == "two-component":
        p, m = _p(), _index("m")
        x[m] += p
        x[n] += 1.0 - p
    elif kind == "symmetric":
        m = _index("m")
        x[m] += 0.5
        x[n - m] += 0.5
    elif kind == "twin-fock":
        if n % 2:
            raise ContractError(f"twin Fock state needs even n, got {n}")
        x[n // 2] = 1.0
    elif kind == "holland-burnett":
        if n % 2:
            raise ContractError(f"twin Fock state needs even n, got {n}")
        half = n // 2
        for j in range(half + 1):
            x[2 * j] = math.comb(2 * j, j) * math.comb(n - 2 * j, half - j) / 2.0**n
    elif kind == "fock":
        x[_index("k")] = 1.0
    elif kind == "uniform":
        x[:] = 1.0 / (n + 1)
    else:
        raise ContractError(f"unknown state kind {kind!r}; choose from {', '.join(STATE_KINDS)}")
    return InputState(n, x)
