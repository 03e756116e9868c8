"""Global maximization of the Fisher-information bound over input weights.

The bound is concave in the weights, so a monotone ascent method from any
starting point reaches the global maximum.  The method is a primal active-set
scheme: Newton steps on the current support, truncated where a weight hits
zero, until the support is nearly stationary; then the zero weight with the
largest multiplier violation is released.  A projected gradient step with a
Barzilai-Borwein trial length is the fallback when neither Newton step
ascends.  All steps use Armijo backtracking.  Once the gain a Newton step can
make is below the roundoff of the objective, it is instead accepted when it
shrinks the projected gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .fisher import QfiResult, bound_gradient, bound_hessian, bound_value, qfi_exact
from .simplex import golden_section_max, project_simplex, tangent_projection
from .states import InputState, LossModel

DEFAULT_TOLERANCE = 1e-9
DEFAULT_MAX_ITER = 10000
SNAP = 1e-12

ARMIJO = 1e-4
SHRINK = 0.5
# allowance for roundoff when comparing objective values near the optimum
ROUNDOFF = 1e-14
# Levenberg shift relative to each diagonal entry; the Hessian is only
# semidefinite.  Near-empty branches make some entries huge, so a shift on
# the global scale would swamp the small curvatures.
NEWTON_SHIFT = 1e-10
# a zero weight is released once the face residual drops below this fraction
# of its multiplier violation
RELEASE = 0.1
TWO_COMPONENT_TOL = 1e-10


@dataclass(frozen=True)
class OptimizationReport:
    optimum: InputState
    qfi: QfiResult
    iterations: int
    converged: bool
    residual: float
    refined_exact: QfiResult | None = None

    @property
    def precision(self) -> float:
        return self.qfi.precision

    @property
    def exact_gap(self) -> float | None:
        """Relative gap ``(bound - exact) / bound`` when an exact value exists."""
        if self.refined_exact is None or self.qfi.value == 0.0:
            return None
        return (self.qfi.value - self.refined_exact.value) / self.qfi.value


def projected_residual(x: np.ndarray, n: int, loss: LossModel) -> float:
    """Norm of the bound's gradient projected onto the simplex tangent cone."""
    return float(np.linalg.norm(tangent_projection(bound_gradient(x, n, loss), x)))


def _face_newton(x, g, n, loss, idx):
    """Newton direction maximizing the local quadratic model on the face
    spanned by ``idx``.  Returns ``None`` when it gives no ascent.
    """
    h = bound_hessian(x, n, loss)[np.ix_(idx, idx)]
    dim = idx.size
    kkt = np.zeros((dim + 1, dim + 1))
    kkt[:dim, :dim] = h - NEWTON_SHIFT * np.diag(np.maximum(-np.diag(h), 1.0))
    kkt[:dim, dim] = 1.0
    kkt[dim, :dim] = 1.0
    # centering changes only the multiplier and avoids cancellation in g @ d
    gc = g[idx] - np.mean(g[idx])
    rhs = np.concatenate([-gc, [0.0]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    d = np.zeros_like(x)
    d[idx] = sol[:dim]
    if not np.all(np.isfinite(d)) or float(gc @ sol[:dim]) <= 0.0:
        return None
    return d


def _newton_step(x, f, g, n, loss, slack, residual, idx):
    d = _face_newton(x, g, n, loss, idx)
    if d is None:
        return None
    shrinking = d < 0.0
    ratios = x[shrinking] / -d[shrinking]
    t_max = float(ratios.min()) if ratios.size else math.inf
    if t_max <= 0.0:
        return None
    blocking = np.nonzero(shrinking)[0][np.argmin(ratios)] if ratios.size else None

    def trial(t):
        x_new = np.maximum(x + t * d, 0.0)
        if t == t_max:
            x_new[blocking] = 0.0
        return x_new / math.fsum(x_new)

    t = min(1.0, t_max)
    first = trial(t)
    while t > 1e-20:
        x_new = first if t == min(1.0, t_max) else trial(t)
        f_new = bound_value(x_new, n, loss)
        if f_new >= f + ARMIJO * float(g @ (x_new - x)) - slack:
            return x_new, f_new
        t *= SHRINK
    if float(g @ (first - x)) <= slack:
        # gain below roundoff: judge the full step by the projected gradient
        if projected_residual(first, n, loss) < residual:
            return first, bound_value(first, n, loss)
    return None


def _gradient_step(x, f, g, n, loss, slack, t):
    while t > 1e-20:
        x_new = project_simplex(x + t * g)
        f_new = bound_value(x_new, n, loss)
        if f_new >= f + ARMIJO * float(g @ (x_new - x)) - slack:
            return x_new, f_new
        t *= SHRINK
    return None


def _snap(x: np.ndarray) -> np.ndarray:
    x = np.where(x < SNAP, 0.0, x)
    return x / math.fsum(x)


def optimize(
    n: int,
    loss: LossModel,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    start: np.ndarray | None = None,
    refine: bool | None = None,
) -> OptimizationReport:
    """Maximize the Fisher-information bound over all N-photon input states.

    ``start`` defaults to uniform weights.  With arm b lossy the bound is not
    exact, so the exact value at the maximizer is attached as
    ``refined_exact``; ``refine`` overrides that choice.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ContractError(f"n must be a positive integer, got {n!r}")
    if not tolerance > 0:
        raise ContractError(f"tolerance must be positive, got {tolerance!r}")
    n = int(n)
    x = np.full(n + 1, 1.0 / (n + 1)) if start is None else project_simplex(start)

    f = bound_value(x, n, loss)
    g = bound_gradient(x, n, loss)
    residual = float(np.linalg.norm(tangent_projection(g, x)))
    gradient_step = 1.0 / max(np.linalg.norm(g), 1.0)
    it = 0
    while residual >= tolerance and it < max_iter:
        it += 1
        slack = ROUNDOFF * max(abs(f), 1.0)
        free = x > 0.0
        lam = float(np.mean(g[free]))
        face_residual = float(np.linalg.norm(g[free] - lam))
        violation = np.where(free, -math.inf, g - lam)
        k = int(np.argmax(violation))
        step = None
        if face_residual > RELEASE * violation[k]:
            step = _newton_step(x, f, g, n, loss, slack, residual, np.nonzero(free)[0])
        if step is None and violation[k] > 0.0:
            # face nearly stationary: let the most violated zero weight enter
            free[k] = True
            step = _newton_step(x, f, g, n, loss, slack, residual, np.nonzero(free)[0])
        if step is None:
            step = _gradient_step(x, f, g, n, loss, slack, gradient_step)
        if step is None or not np.any(step[0] != x):
            # no ascent resolvable at double precision
            break
        x_new, f_new = step
        g_new = bound_gradient(x_new, n, loss)
        s, y = x_new - x, g_new - g
        sy = float(s @ y)
        if sy < 0.0:
            gradient_step = min(max(float(s @ s) / -sy, 1e-12), 1e6)
        x, f, g = x_new, f_new, g_new
        residual = float(np.linalg.norm(tangent_projection(g, x)))

    x = _snap(x)
    state = InputState(n, x)
    qfi = QfiResult(bound_value(state.weights, n, loss), "bound" if loss.eta_b < 1.0 else "one-arm")
    residual = projected_residual(state.weights, n, loss)
    if refine is None:
        refine = loss.eta_b < 1.0
    exact = qfi_exact(state, loss) if refine else None
    return OptimizationReport(state, qfi, it, residual < tolerance, residual, exact)


def _best_over_p(n: int, loss: LossModel, build):
    def objective(p):
        return bound_value(build(p), n, loss)

    return golden_section_max(objective, 0.0, 1.0, TWO_COMPONENT_TOL)


def optimize_two_component(n: int, loss: LossModel, form: str = "anchored") -> OptimizationReport:
    """Best state within a two-component family.

    ``anchored``: ``sqrt(p)|m,N-m> + sqrt(1-p)|N,0>``, exhaustive over ``m``
    and golden-section over ``p``.  ``symmetric``: ``(|m,N-m> + |N-m,m>)/sqrt2``,
    exhaustive over ``m``.  Ties go to the smaller ``m``.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ContractError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    best_x, best_f, evaluations, width = None, -math.inf, 0, 0.0
    if form == "anchored":
        for m in range(n + 1):
            def build(p, m=m):
                x = np.zeros(n + 1)
                x[m] += p
                x[n] += 1.0 - p
                return x

            p, val, evals, w = _best_over_p(n, loss, build)
            evaluations += evals
            if val > best_f:
                best_x, best_f, width = build(p), val, w
    elif form == "symmetric":
        for m in range(n // 2 + 1):
            x = np.zeros(n + 1)
            x[m] += 0.5
            x[n - m] += 0.5
            val = bound_value(x, n, loss)
            evaluations += 1
            if val > best_f:
                best_x, best_f = x, val
    else:
        raise ContractError(f"unknown two-component form {form!r}")

    state = InputState(n, best_x)
    qfi = QfiResult(bound_value(state.weights, n, loss), "bound" if loss.eta_b < 1.0 else "one-arm")
    return OptimizationReport(state, qfi, evaluations, True, width)
