"""Eigen-structure of the BS-IRS channel and the closed-form SNR estimates.

All quantities here are computed from the phase-only channel ``G_phase``
(unit-modulus entries) and its Gram matrix ``Gbar = G_phase G_phase^H``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import unit_phase

__all__ = [
    "EigenSolverError",
    "SpectralSummary",
    "SnrEstimates",
    "gram",
    "gram_eigen",
    "correlation_ratio",
    "spectral_summary",
    "snr_closed_forms",
    "best_index",
    "edof",
    "diagnostic_row",
]

RANK_RTOL = 1e-10


class EigenSolverError(RuntimeError):
    """The eigen/singular value routine failed to converge."""


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray  # retained mu_i, descending
    eigenvectors: np.ndarray  # (N, r) columns psi_i
    kappas: np.ndarray  # (r,)
    edof: float
    numerical_rank: int
    trace: float

    @property
    def gains(self) -> np.ndarray:
        """``kappa_i * mu_i`` per retained eigenpair.

        Each gain is a Rayleigh quotient of the Gram matrix divided by N, so
        it cannot exceed ``mu_1``; the clip only removes rounding excess.
        """
        return np.minimum(self.kappas * self.eigenvalues, self.eigenvalues[0])


@dataclass(frozen=True)
class SnrEstimates:
    bound: float
    approx: float
    closed: float
    m1: float | None
    beta: float
    best_index: int  # one-based


def gram(G_phase: np.ndarray) -> np.ndarray:
    return G_phase @ G_phase.conj().T


def gram_eigen(G_phase: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Nonzero eigenpairs of ``G_phase G_phase^H`` in descending order.

    Uses the thin SVD of ``G_phase``: the squared singular values are the
    eigenvalues and the left singular vectors the eigenvectors.  Every other
    eigenvalue of the N x N Gram matrix is exactly zero.

    Returns ``(eigenvalues, eigenvectors, numerical_rank)`` where only the
    pairs with ``mu_i > 1e-10 mu_1`` are kept.
    """
    G_phase = np.asarray(G_phase, dtype=complex)
    try:
        U, s, _ = np.linalg.svd(G_phase, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"SVD of the {G_phase.shape} channel did not converge") from exc
    mu = s**2
    if mu.size == 0 or mu[0] == 0.0:
        return mu[:0], U[:, :0], 0
    rank = int(np.count_nonzero(mu > RANK_RTOL * mu[0]))
    return mu[:rank], U[:, :rank], rank


def _quad(G_phase: np.ndarray, x: np.ndarray) -> float:
    # x^H Gbar x without forming Gbar
    return float(np.sum(np.abs(G_phase.conj().T @ x) ** 2))


def correlation_ratio(psi: np.ndarray, G_phase: np.ndarray) -> float:
    """Share of the eigen-gain kept after projecting ``psi`` onto unit modulus.

    ``kappa = theta^H Gbar theta / (N psi^H Gbar psi)`` with
    ``theta = exp(j arg psi)``.  The ``1/N`` keeps ``kappa`` in ``(0, 1]``.
    """
    psi = np.asarray(psi, dtype=complex)
    theta = unit_phase(psi)
    N = psi.shape[0]
    return _quad(G_phase, theta) / (N * _quad(G_phase, psi))


def spectral_summary(G_phase: np.ndarray) -> SpectralSummary:
    mu, psi, rank = gram_eigen(G_phase)
    kappas = np.array([correlation_ratio(psi[:, i], G_phase) for i in range(rank)])
    tr = float(np.sum(np.abs(G_phase) ** 2))
    return SpectralSummary(
        eigenvalues=mu,
        eigenvectors=psi,
        kappas=kappas,
        edof=float(np.sum(mu) ** 2 / np.sum(mu**2)),
        numerical_rank=rank,
        trace=tr,
    )


def best_index(summary: SpectralSummary) -> int:
    """One-based index maximizing ``kappa_i mu_i``; ties go to the smaller i."""
    return int(np.argmax(summary.gains)) + 1


def snr_closed_forms(
    summary: SpectralSummary,
    d_bi: float,
    d_i1: float,
    noise_power: float,
    tx_power: float,
    wavelength: float,
    M: int,
    N: int,
) -> SnrEstimates:
    """Upper bound, eigenvalue approximation and closed-form SNR (linear).

    Every estimate includes the transmit power so that ``log2(1 + snr)`` is
    directly comparable with the rates produced by alternating optimization.
    """
    beta = (wavelength / (4.0 * np.pi)) ** 4
    scale = tx_power * beta / (d_bi**2 * d_i1**2 * noise_power)
    i_star = best_index(summary)
    return SnrEstimates(
        bound=scale * M * N**2,
        approx=scale * N * float(summary.eigenvalues[0]),
        closed=scale * N * float(summary.gains[i_star - 1]),
        m1=scale * N**2 if M == 1 else None,
        beta=beta,
        best_index=i_star,
    )


def edof(gram_matrix: np.ndarray) -> float:
    """Effective degrees of freedom ``(tr(A) / ||A||_F)^2``."""
    A = np.asarray(gram_matrix)
    fro = np.linalg.norm(A)
    if fro == 0.0:
        raise ValueError("EDoF is undefined for the zero matrix")
    return float((np.trace(A).real / fro) ** 2)


def diagnostic_row(x_irs: float, summary: SpectralSummary, count: int = 5) -> dict:
    """Flat record of the leading eigenvalues, kappas and EDoF."""
    row = {"x_I": x_irs}
    for i in range(count):
        has = i < summary.numerical_rank
        row[f"mu{i + 1}"] = float(summary.eigenvalues[i]) if has else 0.0
    for i in range(count):
        has = i < summary.numerical_rank
        row[f"kappa{i + 1}"] = float(summary.kappas[i]) if has else 0.0
    for i in range(count):
        has = i < summary.numerical_rank
        row[f"gain{i + 1}"] = float(summary.gains[i]) if has else 0.0
    row["edof"] = summary.edof
    row["numerical_rank"] = summary.numerical_rank
    return row
