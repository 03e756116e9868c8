"""Quantum Fisher information of lossy N-photon states.

Three routes are provided:

* :func:`qfi_pure` -- lossless, four times the variance of the arm-a number.
* :func:`qfi_bound` -- the convexity upper bound obtained by treating each
  loss branch as a separate pure state (exact when arm b is lossless, see
  :func:`qfi_one_arm`).
* :func:`qfi_exact` -- the exact value from the eigendecomposition of the
  post-loss density matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError
from .states import BRANCH_THRESHOLD, InputState, LossModel, branch_table, decompose

METHODS = ("pure", "bound", "one-arm", "exact")

# relative floor on p_i + p_j when summing over eigenpairs
EIGEN_FLOOR = 1e-12


@dataclass(frozen=True)
class QfiResult:
    """A Fisher-information value and the phase precision it implies.

    ``precision`` is ``1/sqrt(value)`` in radians.  When ``value`` is zero the
    state carries no phase information: ``informative`` is False and
    ``precision`` is ``inf``.
    """

    value: float
    method: str
    precision: float = field(init=False)
    informative: bool = field(init=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        value = max(float(self.value), 0.0)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "informative", value > 0.0)
        object.__setattr__(self, "precision", 1.0 / math.sqrt(value) if value > 0.0 else math.inf)


def precision_from_qfi(value: float) -> float:
    """Cramer-Rao precision for a single run; ``inf`` for zero information."""
    return 1.0 / math.sqrt(value) if value > 0.0 else math.inf


def qfi_pure(state: InputState) -> QfiResult:
    k = np.arange(state.n + 1)
    x = state.weights
    mean = math.fsum(k * x)
    var = math.fsum(x * (k - mean) ** 2)
    return QfiResult(4.0 * var, "pure")


def _bound_value(x: np.ndarray, n: int, loss: LossModel) -> float:
    table = branch_table(n, loss)
    support = x > 0.0
    weighted = table.coeffs[:, support] * x[support]
    k = np.arange(n + 1, dtype=float)[support]
    p = weighted.sum(axis=1)
    keep = p > 0.0
    mu = (weighted[keep] @ k) / p[keep]
    # per-branch variance form: no cancellation between the two moments
    spread = (weighted[keep] * (k[None, :] - mu[:, None]) ** 2).sum(axis=1)
    return 4.0 * math.fsum(spread)


def qfi_bound(state: InputState, loss: LossModel) -> QfiResult:
    """Convexity upper bound on the Fisher information.

    ``4 (sum_k k^2 x_k - sum_lm S_lm^2 / P_lm)`` where, per loss branch,
    ``P_lm = sum_k x_k B^k_lm`` and ``S_lm = sum_k k x_k B^k_lm``.
    """
    return QfiResult(_bound_value(state.weights, state.n, loss), "bound")


def qfi_one_arm(state: InputState, eta_a: float) -> QfiResult:
    """Fisher information with loss in arm a only.  Here the bound is exact."""
    loss = LossModel.one_arm(eta_a)
    return QfiResult(_bound_value(state.weights, state.n, loss), "one-arm")


def qfi_bound_gradient(state: InputState, loss: LossModel) -> np.ndarray:
    """Partial derivatives of :func:`qfi_bound` with respect to each ``x_k``.

    Each live branch contributes ``4 B^k_lm (k - S_lm / P_lm)^2``.  Branches
    with ``P_lm < 1e-15`` contribute nothing, which is the one-sided limit for
    increasing ``x_k`` from zero, so the gradient stays meaningful on the
    simplex boundary.
    """
    return bound_gradient(state.weights, state.n, loss)


def bound_gradient(x: np.ndarray, n: int, loss: LossModel) -> np.ndarray:
    table = branch_table(n, loss)
    b = table.coeffs
    k = np.arange(n + 1, dtype=float)
    p = b @ x
    s = b @ (k * x)
    live = p >= BRANCH_THRESHOLD
    mu = np.zeros_like(p)
    mu[live] = s[live] / p[live]
    # a dead branch entered by one weight alone has zero spread
    spread = b[live] * (k[None, :] - mu[live][:, None]) ** 2
    return 4.0 * spread.sum(axis=0)


def bound_hessian(x: np.ndarray, n: int, loss: LossModel) -> np.ndarray:
    """Second derivatives of the bound, ``-8 sum_lm u u^T / P_lm`` with
    ``u_k = B^k_lm (k - S_lm / P_lm)``.  Negative semidefinite.
    """
    table = branch_table(n, loss)
    b = table.coeffs
    k = np.arange(n + 1, dtype=float)
    p = b @ x
    s = b @ (k * x)
    live = p >= BRANCH_THRESHOLD
    mu = s[live] / p[live]
    u = b[live] * (k[None, :] - mu[:, None])
    return -8.0 * (u.T @ (u / p[live][:, None]))


def bound_value(x: np.ndarray, n: int, loss: LossModel) -> float:
    """:func:`qfi_bound` on a raw weight array, skipping validation."""
    return _bound_value(np.asarray(x, dtype=float), n, loss)


def qfi_exact(state: InputState, loss: LossModel, phi: float = 0.0) -> QfiResult:
    """Exact Fisher information of the post-loss mixed state.

    The density matrix is block diagonal in the number of surviving photons,
    so each block is diagonalized separately.  The phase derivative is formed
    element-wise as ``-i (j - j') rho_jj'`` and the result is
    ``sum 2 |<e_i|rho'|e_j>|^2 / (p_i + p_j)`` over eigenpairs whose summed
    weight exceeds ``1e-12`` of the trace.
    """
    decomposition = decompose(state, loss)
    sectors: dict[int, list] = {}
    for br in decomposition:
        sectors.setdefault(br.survivors, []).append(br)
    floor = EIGEN_FLOOR * decomposition.total_probability()

    contributions = []
    for survivors in sorted(sectors, reverse=True):
        dim = survivors + 1
        j = np.arange(dim)
        rho = np.zeros((dim, dim))
        for br in sectors[survivors]:
            rho += br.probability * np.outer(br.amplitudes, br.amplitudes)
        diff = j[:, None] - j[None, :]
        if phi:
            rho = rho * np.exp(-1j * phi * diff)
        drho = -1j * diff * rho
        try:
            evals, evecs = np.linalg.eigh(rho)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigendecomposition failed in sector with {survivors} photons") from exc
        d = evecs.conj().T @ drho @ evecs
        denom = evals[:, None] + evals[None, :]
        mask = denom > floor
        contributions.append(math.fsum((2.0 * np.abs(d[mask]) ** 2 / denom[mask]).tolist()))
    return QfiResult(math.fsum(contributions), "exact")
