"""Closed-form precision benchmarks and the N00N chopping strategy."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractError
from .simplex import golden_section_max

LOSS_MODES = ("both", "one")
_MODE_ALIASES = {"both": "both", "both-arms": "both", "one": "one", "one-arm": "one"}

STRATEGY_KINDS = (
    "heisenberg",
    "sil",
    "noon",
    "unbalanced-noon",
    "chopping",
    "optimal",
    "two-component",
    "twin-fock",
)

# Optimal sub-state size is ln(eta0)/|ln eta| photons.  For one-arm loss eta0
# solves ln(e0) * sqrt(e0) = 1 + sqrt(e0), the stationarity condition of
# (1 + eta^(-n/2)) / sqrt(n).
ETA0_BOTH = math.e
ETA0_ONE = 4.38272230554

REGIMES = ("single-photon", "intermediate", "unchopped")


def loss_mode(mode: str) -> str:
    """Canonical loss-mode name, ``both`` or ``one``."""
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ContractError(f"unknown loss mode {mode!r}; use 'both' or 'one'") from None


@dataclass(frozen=True)
class StrategySpec:
    kind: str
    loss_mode: str = "both"

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ContractError(f"unknown strategy {self.kind!r}; choose from {', '.join(STRATEGY_KINDS)}")
        mode = loss_mode(self.loss_mode)
        object.__setattr__(self, "loss_mode", mode)
        if self.kind == "unbalanced-noon" and mode != "one":
            raise ContractError("unbalanced-noon is defined for one-arm loss only")


@dataclass(frozen=True)
class ChoppingResult:
    precision: float
    regime: str
    n_per_run: float
    eta0: float


def _check(n, eta):
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n!r}")
    if not (0.0 < eta <= 1.0):
        raise ContractError(f"eta must lie in (0, 1], got {eta!r}")


def heisenberg_limit(n: int) -> float:
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n!r}")
    return 1.0 / n


def sil(n: int, eta: float, mode: str = "both") -> float:
    """Standard interferometric limit: a coherent-state Mach-Zehnder with the
    same losses (beam splitter unbalanced optimally for one-arm loss).
    """
    _check(n, eta)
    if loss_mode(mode) == "both":
        return 1.0 / math.sqrt(n * eta)
    return (1.0 + math.sqrt(eta)) / (2.0 * math.sqrt(n * eta))


def noon_precision(n: float, eta: float, mode: str = "both", balanced: bool = True) -> float:
    """Precision of an N00N state under loss.

    With one-arm loss ``balanced=False`` gives the best unbalanced N00N
    state.  ``n`` may be non-integer (used by the chopping search).
    """
    _check(n, eta)
    mode = loss_mode(mode)
    n = float(n)
    # exponent of eta^(-n/2); large n overflows to an infinite precision
    growth = -0.5 * n * math.log(eta)
    if mode == "both":
        if not balanced:
            raise ContractError("unbalanced N00N states are defined for one-arm loss only")
        return _exp(growth) / n
    if balanced:
        return math.sqrt(1.0 + _exp(2.0 * growth)) / (math.sqrt(2.0) * n)
    return (1.0 + _exp(growth)) / (2.0 * n)


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def chopping(n_total: int, eta: float, mode: str = "both") -> ChoppingResult:
    """Best precision from splitting ``n_total`` photons into equal n00n
    states sent one after another, with the sub-state size continuous.
    """
    _check(n_total, eta)
    mode = loss_mode(mode)
    if mode == "both":
        tilde, tilde0, eta0 = 1.0, 1.0, ETA0_BOTH
    else:
        tilde, tilde0, eta0 = eta, ETA0_ONE, ETA0_ONE
    n = float(n_total)
    if eta <= 1.0 / eta0:
        precision = (1.0 + math.sqrt(tilde)) / (2.0 * math.sqrt(n * eta))
        return ChoppingResult(precision, "single-photon", 1.0, eta0)
    if eta <= eta0 ** (-1.0 / n):
        log_eta = abs(math.log(eta))
        precision = (
            (1.0 + math.sqrt(tilde0)) / (2.0 * math.sqrt(n * tilde0))
            * math.sqrt(eta0 * log_eta / math.log(eta0))
        )
        return ChoppingResult(precision, "intermediate", math.log(eta0) / log_eta, eta0)
    precision = (1.0 + tilde ** (n / 2.0)) / (2.0 * n * eta ** (n / 2.0))
    return ChoppingResult(precision, "unchopped", n, eta0)


def chopping_numeric(n_total: int, eta: float, mode: str = "both", tol: float = 1e-10) -> ChoppingResult:
    """Direct golden-section minimization over the sub-state size.

    Independent of :func:`chopping`; in the intermediate regime the
    reported ``eta0`` is recovered from the minimizer.
    """
    _check(n_total, eta)
    mode = loss_mode(mode)
    n = float(n_total)
    balanced = mode == "both"

    def budget_precision(k):
        return noon_precision(k, eta, mode, balanced) * math.sqrt(k / n)

    if n == 1.0:
        best = 1.0
    else:
        best, _, _, _ = golden_section_max(lambda k: -budget_precision(k), 1.0, n, tol * n)
    precision = budget_precision(best)
    nominal = ETA0_BOTH if balanced else ETA0_ONE
    edge = 1e-6 * n
    if best <= 1.0 + edge:
        return ChoppingResult(precision, "single-photon", best, nominal)
    if best >= n - edge:
        return ChoppingResult(precision, "unchopped", best, nominal)
    return ChoppingResult(precision, "intermediate", best, math.exp(best * abs(math.log(eta))))
