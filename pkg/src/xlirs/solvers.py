"""Concave quadratic maximizers used by the multi-user SCA steps.

``solve_ball_qp`` handles the precoder subproblem (total power ball) through
its KKT conditions; ``solve_disk_qp`` handles the relaxed reflection
subproblem (per-entry unit disk) by projected gradient ascent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["BallQP", "DiskQP", "BallSolution", "DiskSolution", "solve_ball_qp", "solve_disk_qp"]


def _check_psd(Q: np.ndarray, name: str) -> None:
    scale = max(np.max(np.abs(Q), initial=0.0), np.finfo(float).tiny)
    if np.max(np.abs(Q - Q.conj().T), initial=0.0) > 1e-10 * scale:
        raise ValueError(f"{name} is not Hermitian")


@dataclass(frozen=True)
class BallQP:
    """maximize ``sum_k 2 Re{c_k h_k^H w_k} - w_k^H Q w_k`` s.t. ``sum ||w_k||^2 <= P``.

    ``h`` is (M, K) with columns ``h_k``; ``c`` has one coefficient per user.
    """

    h: np.ndarray
    c: np.ndarray
    Q: np.ndarray
    power: float

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        if h.ndim == 1:
            h = h[:, None]
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "c", np.atleast_1d(np.asarray(self.c, dtype=complex)))
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=complex))
        if self.c.shape != (h.shape[1],) or self.Q.shape != (h.shape[0],) * 2:
            raise ValueError("inconsistent BallQP dimensions")
        if not self.power > 0:
            raise ValueError("power budget must be positive")
        _check_psd(self.Q, "Q")

    @property
    def targets(self) -> np.ndarray:
        """Columns ``conj(c_k) h_k``; the unconstrained optimum solves ``Q w_k = target_k``."""
        return self.h * self.c.conj()

    def objective(self, W: np.ndarray) -> float:
        W = np.asarray(W).reshape(self.h.shape)
        lin = 2.0 * np.real(np.sum(self.targets.conj() * W))
        quad = np.real(np.sum(W.conj() * (self.Q @ W)))
        return float(lin - quad)


@dataclass(frozen=True)
class BallSolution:
    W: np.ndarray
    nu: float
    iterations: int


def solve_ball_qp(problem: BallQP, rtol: float = 1e-8, max_iter: int = 1000) -> BallSolution:
    """KKT solution ``w_k(nu) = conj(c_k) (Q + nu I)^{-1} h_k`` with bisection on ``nu``.

    ``nu = 0`` is returned when the (minimum-norm) unconstrained maximizer
    already fits the budget.  Otherwise ``nu`` is bracketed by doubling from
    1 and bisected until the power is within ``rtol * P`` below ``P``.
    """
    Q, B, P = problem.Q, problem.targets, problem.power
    lam, V = np.linalg.eigh(Q)
    lam = np.clip(lam, 0.0, None)
    Y = V.conj().T @ B
    row_energy = np.sum(np.abs(Y) ** 2, axis=1)

    def power_at(nu: float) -> float:
        return float(np.sum(row_energy / (lam + nu) ** 2))

    def W_at(nu: float) -> np.ndarray:
        return V @ (Y / (lam + nu)[:, None])

    lam_max = lam[-1] if lam.size else 0.0
    null = lam <= 1e-12 * lam_max if lam_max > 0 else np.ones_like(lam, dtype=bool)
    b_energy = float(np.sum(row_energy))
    if b_energy == 0.0:
        return BallSolution(np.zeros_like(B), 0.0, 0)

    # nu = 0: feasible only if the target has no component along null(Q)
    if np.sum(row_energy[null]) <= 1e-20 * b_energy:
        live = ~null
        p0 = float(np.sum(row_energy[live] / lam[live] ** 2))
        if p0 <= P:
            Yl = np.where(live[:, None], Y / np.where(live, lam, 1.0)[:, None], 0.0)
            return BallSolution(V @ Yl, 0.0, 0)

    lo, hi = 0.0, 1.0
    it = 0
    while power_at(hi) > P:
        lo, hi = hi, 2.0 * hi
        it += 1
        if it > 2000:
            raise RuntimeError("could not bracket the power multiplier")
    while it < max_iter:
        p_hi = power_at(hi)
        if P - p_hi <= rtol * P:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if power_at(mid) > P:
            lo = mid
        else:
            hi = mid
        it += 1
    return BallSolution(W_at(hi), hi, it)


@dataclass(frozen=True)
class DiskQP:
    """maximize ``2 Re{v^H theta} - theta^H C theta`` s.t. ``|theta_n| <= 1``.

    ``C`` may be given densely or through a factor ``F`` with ``C = F F^H``;
    the factor is used for matrix-vector products when present.
    """

    v: np.ndarray
    C: np.ndarray | None = None
    factor: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.v, dtype=complex)
        object.__setattr__(self, "v", v)
        if self.factor is not None:
            F = np.asarray(self.factor, dtype=complex).reshape(v.shape[0], -1)
            object.__setattr__(self, "factor", F)
            if self.C is None:
                object.__setattr__(self, "C", F @ F.conj().T)
        if self.C is None:
            raise ValueError("DiskQP needs C or a factor")
        C = np.asarray(self.C, dtype=complex)
        object.__setattr__(self, "C", C)
        if C.shape != (v.shape[0],) * 2:
            raise ValueError("inconsistent DiskQP dimensions")
        _check_psd(C, "C")

    def apply(self, theta: np.ndarray) -> np.ndarray:
        if self.factor is not None:
            return self.factor @ (self.factor.conj().T @ theta)
        return self.C @ theta

    def objective(self, theta: np.ndarray) -> float:
        return float(2.0 * np.real(np.vdot(self.v, theta)) - np.real(np.vdot(theta, self.apply(theta))))

    def lipschitz(self) -> float:
        """``2 lambda_max(C)``, falling back to ``2 tr(C)``."""
        try:
            if self.factor is not None:
                s = np.linalg.svd(self.factor, compute_uv=False)
                top = float(s[0] ** 2) if s.size else 0.0
            else:
                top = float(np.linalg.eigvalsh(self.C)[-1])
        except np.linalg.LinAlgError:
            top = float(np.real(np.trace(self.C)))
        return 2.0 * max(top, 0.0)


@dataclass(frozen=True)
class DiskSolution:
    theta: np.ndarray
    iterations: int
    converged: bool
    objectives: np.ndarray


def _project_disk(theta: np.ndarray) -> np.ndarray:
    return theta / np.maximum(1.0, np.abs(theta))


def solve_disk_qp(
    problem: DiskQP,
    theta_init: np.ndarray,
    rtol: float = 1e-9,
    max_iter: int = 5000,
    keep_history: bool = False,
) -> DiskSolution:
    """Projected gradient ascent with step ``1/L`` from ``theta_init``."""
    theta = _project_disk(np.asarray(theta_init, dtype=complex).copy())
    v = problem.v
    L = problem.lipschitz()
    if L == 0.0:
        mag = np.abs(v)
        out = np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), theta)
        f = problem.objective(out)
        return DiskSolution(out, 1, True, np.array([f]))

    step = 2.0 / L  # real gradient is 2 (v - C theta)
    Ctheta = problem.apply(theta)
    f_old = f_new = 2.0 * np.real(np.vdot(v, theta)) - np.real(np.vdot(theta, Ctheta))
    history = [f_old] if keep_history else None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        theta = _project_disk(theta + step * (v - Ctheta))
        Ctheta = problem.apply(theta)
        f_new = 2.0 * np.real(np.vdot(v, theta)) - np.real(np.vdot(theta, Ctheta))
        if keep_history:
            history.append(f_new)
        if abs(f_new - f_old) <= rtol * max(abs(f_new), np.finfo(float).tiny) or f_new == f_old:
            converged = True
            break
        f_old = f_new
    objectives = np.array(history if keep_history else [f_new])
    return DiskSolution(theta, it, converged, objectives)
