"""Precision curves over photon number or transmissivity, and the local
log-log slope of precision versus photon number.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import strategies as st
from .errors import ContractError
from .fisher import qfi_bound
from .optimizer import DEFAULT_MAX_ITER, DEFAULT_TOLERANCE, optimize, optimize_two_component
from .states import LossModel, preset_state

MAX_N_BOUND = 100
MAX_N_EXACT = 60


@dataclass(frozen=True)
class CurveRow:
    abscissa: float
    values: dict[str, float]
    flags: tuple[str, ...] = ()
    # exact-QFI precision of the optimal state, when it was refined
    optimal_exact: float | None = None

    @property
    def n(self) -> int:
        return int(self.abscissa)


@dataclass(frozen=True)
class PrecisionCurve:
    loss_mode: str
    strategies: tuple[str, ...]
    rows: list[CurveRow]
    axis: str = "n"
    eta: float | None = None
    n: int | None = None

    def column(self, strategy: str) -> np.ndarray:
        return np.array([row.values[strategy] for row in self.rows])

    @property
    def abscissae(self) -> np.ndarray:
        return np.array([row.abscissa for row in self.rows])


@dataclass(frozen=True)
class ScalingRow:
    n: int
    s: float


@dataclass(frozen=True)
class ScalingCurve:
    eta: float | None
    loss_mode: str
    strategy: str
    window: int
    rows: list[ScalingRow] = field(default_factory=list)

    def at(self, n: int) -> float:
        for row in self.rows:
            if row.n == n:
                return row.s
        raise KeyError(n)


def loss_for(eta: float, mode: str) -> LossModel:
    return LossModel.both_arms(eta) if st.loss_mode(mode) == "both" else LossModel.one_arm(eta)


def strategy_precision(
    kind: str,
    n: int,
    eta: float,
    mode: str,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    refine: bool = True,
):
    """Precision of one strategy at ``(n, eta)``.

    Returns ``(precision, flags, exact)`` where ``exact`` is the exact-QFI
    precision of the optimal state for two-arm loss (``None`` otherwise).

    For one-arm loss ``noon`` means the best-balanced N00N state, which is
    what the one-arm comparisons plot; ``two-component`` is the anchored
    family for one-arm loss and the symmetric family for two-arm loss;
    ``twin-fock`` is the twin Fock state after the input beam splitter.
    """
    mode = st.loss_mode(mode)
    st.StrategySpec(kind, mode)
    if kind == "heisenberg":
        return st.heisenberg_limit(n), (), None
    if kind == "sil":
        return st.sil(n, eta, mode), (), None
    if kind == "noon":
        return st.noon_precision(n, eta, mode, balanced=mode == "both"), (), None
    if kind == "unbalanced-noon":
        return st.noon_precision(n, eta, mode, balanced=False), (), None
    if kind == "chopping":
        return st.chopping(n, eta, mode).precision, (), None
    loss = loss_for(eta, mode)
    if kind == "optimal":
        do_refine = refine and mode == "both" and n <= MAX_N_EXACT and eta < 1.0
        report = optimize(n, loss, tolerance, max_iter, refine=do_refine)
        flags = () if report.converged else ("optimal:not-converged",)
        exact = report.refined_exact.precision if report.refined_exact is not None else None
        return report.precision, flags, exact
    if kind == "two-component":
        form = "anchored" if mode == "one" else "symmetric"
        return optimize_two_component(n, loss, form).precision, (), None
    if kind == "twin-fock":
        return qfi_bound(preset_state("holland-burnett", n), loss).precision, (), None
    raise ContractError(f"unknown strategy {kind!r}")


def _point(task):
    kinds, n, eta, mode, tolerance, max_iter, refine, abscissa = task
    values, flags, exact = {}, [], None
    for kind in kinds:
        value, kind_flags, kind_exact = strategy_precision(kind, n, eta, mode, tolerance, max_iter, refine)
        values[kind] = value
        flags.extend(kind_flags)
        if kind_exact is not None:
            exact = kind_exact
    return CurveRow(abscissa, values, tuple(flags), exact)


def _run(tasks, jobs):
    if jobs is not None and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_point, tasks))
    return [_point(t) for t in tasks]


def _kinds_and_mode(strategies, loss_mode):
    specs = [s if isinstance(s, st.StrategySpec) else st.StrategySpec(s, loss_mode or "both") for s in strategies]
    if not specs:
        raise ContractError("at least one strategy is required")
    modes = {s.loss_mode for s in specs}
    if len(modes) != 1:
        raise ContractError("all strategies in a curve must share one loss mode")
    kinds = tuple(s.kind for s in specs)
    if len(set(kinds)) != len(kinds):
        raise ContractError("duplicate strategies")
    return kinds, modes.pop()


def precision_curve(
    strategies,
    n_range,
    eta: float,
    loss_mode: str | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    refine: bool = True,
    jobs: int | None = None,
) -> PrecisionCurve:
    """Precision of each strategy for every photon number in ``n_range``.

    Strategies are :class:`StrategySpec` objects or bare kind names (then
    ``loss_mode`` applies).  Rows are computed independently and returned
    in increasing ``n`` whatever ``jobs`` is.
    """
    kinds, mode = _kinds_and_mode(strategies, loss_mode)
    ns = sorted({int(n) for n in n_range})
    if not ns or ns[0] < 1 or ns[-1] > MAX_N_BOUND:
        raise ContractError(f"photon numbers must lie in [1, {MAX_N_BOUND}]")
    tasks = [(kinds, n, eta, mode, tolerance, max_iter, refine, n) for n in ns]
    return PrecisionCurve(mode, kinds, _run(tasks, jobs), axis="n", eta=eta)


def transmissivity_curve(
    strategies,
    etas,
    n: int,
    loss_mode: str | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    refine: bool = True,
    jobs: int | None = None,
) -> PrecisionCurve:
    """Precision of each strategy at fixed ``n`` across transmissivities."""
    kinds, mode = _kinds_and_mode(strategies, loss_mode)
    if not (1 <= n <= MAX_N_BOUND):
        raise ContractError(f"photon number must lie in [1, {MAX_N_BOUND}]")
    values = [float(e) for e in etas]
    if any(not (0.0 < e <= 1.0) for e in values):
        raise ContractError("transmissivities must lie in (0, 1]")
    tasks = [(kinds, n, e, mode, tolerance, max_iter, refine, e) for e in values]
    return PrecisionCurve(mode, kinds, _run(tasks, jobs), axis="eta", n=n)


def _slope(xs: np.ndarray, ys: np.ndarray) -> float:
    dx = xs - xs.mean()
    return float(np.dot(dx, ys - ys.mean()) / np.dot(dx, dx))


def differential_scaling(curve: PrecisionCurve, strategy: str = "optimal", window: int = 4) -> ScalingCurve:
    """Local scaling exponent ``S(N)`` of precision versus photon number.

    ``S(N)`` is minus the least-squares slope of ``ln(precision)`` against
    ``ln N`` over ``N - window .. N + window``; 0.5 for shot-noise scaling,
    1 for Heisenberg scaling.  Points without a full window are omitted.
    """
    if curve.axis != "n":
        raise ContractError("differential scaling needs a curve over photon number")
    if window < 1:
        raise ContractError(f"window must be >= 1, got {window}")
    by_n = {row.n: row.values[strategy] for row in curve.rows}
    rows = []
    for n in sorted(by_n):
        span = range(n - window, n + window + 1)
        if not all(k in by_n for k in span):
            continue
        ys = np.array([by_n[k] for k in span])
        if not np.all(np.isfinite(ys)) or np.any(ys <= 0.0):
            continue
        xs = np.log(np.array(span, dtype=float))
        rows.append(ScalingRow(n, -_slope(xs, np.log(ys))))
    return ScalingCurve(curve.eta, curve.loss_mode, strategy, window, rows)


def scaling_curve(
    eta: float,
    loss_mode: str,
    n_max: int,
    n_min: int = 1,
    window: int = 4,
    strategy: str = "optimal",
    jobs: int | None = None,
    refine: bool = False,
) -> ScalingCurve:
    """Convenience wrapper: build the precision curve, then fit slopes."""
    curve = precision_curve([strategy], range(max(1, n_min - window), n_max + 1), eta, loss_mode,
                            refine=refine, jobs=jobs)
    return differential_scaling(curve, strategy, window)


def is_finite_curve(curve: PrecisionCurve) -> bool:
    return all(math.isfinite(v) and v > 0.0 for row in curve.rows for v in row.values.values())
