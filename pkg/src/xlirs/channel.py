"""Near-field line-of-sight channels and rate evaluation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import ArrayLayout, ScenarioConfig, build_layout

__all__ = [
    "NearFieldChannels",
    "BeamformingState",
    "synthesize",
    "channels_for",
    "effective_user_channel",
    "effective_channels",
    "sum_rate",
    "user_rates",
    "dump_channels_csv",
    "rates_from_gains",
]

PHASE_EPS = 1e-14


def unit_phase(z: np.ndarray) -> np.ndarray:
    """Elementwise ``exp(j arg z)``; entries with ``|z| < 1e-14`` map to 1."""
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    out = np.ones_like(z)
    mask = mag >= PHASE_EPS
    out[mask] = z[mask] / mag[mask]
    return out


@dataclass(frozen=True)
class NearFieldChannels:
    """BS-IRS matrix ``G`` (N x M) and IRS-user vectors ``r[k]`` (N,).

    Every entry of ``G`` has amplitude ``g_amplitude``; ``G_phase`` holds
    the unit-modulus part, and likewise for ``r`` / ``r_phase``.
    """

    G_phase: np.ndarray
    r_phase: np.ndarray  # (K, N)
    g_amplitude: float
    r_amplitudes: np.ndarray  # (K,)

    @property
    def G(self) -> np.ndarray:
        return self.g_amplitude * self.G_phase

    @property
    def r(self) -> np.ndarray:
        return self.r_amplitudes[:, None] * self.r_phase

    @property
    def shape(self) -> tuple[int, int, int]:
        """``(N, M, K)``."""
        N, M = self.G_phase.shape
        return N, M, self.r_phase.shape[0]


@dataclass
class BeamformingState:
    W: np.ndarray  # (M, K), column k is w_k
    theta: np.ndarray  # (N,)

    def check(self, power: float, tol: float = 1e-9) -> None:
        if np.max(np.abs(np.abs(self.theta) - 1.0), initial=0.0) > tol:
            raise ValueError("reflection coefficients are not unit modulus")
        if np.sum(np.abs(self.W) ** 2) > power * (1.0 + tol):
            raise ValueError("precoders exceed the power budget")


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1))


def synthesize(layout: ArrayLayout, config: ScenarioConfig) -> NearFieldChannels:
    """Spherical-wavefront LoS channels for ``layout``.

    Phases use exact element-to-element distances; amplitudes use the
    center-to-center distances ``d_BI`` and ``d_Ik``.
    """
    lam = config.wavelength_m
    k0 = 2.0 * np.pi / lam
    d_nm = _distances(layout.irs_positions, layout.bs_positions)
    d_nk = _distances(layout.user_positions, layout.irs_positions)  # (K, N)
    if np.any(d_nm == 0.0) or np.any(d_nk == 0.0):
        raise ValueError("zero element-to-element distance")
    return NearFieldChannels(
        G_phase=np.exp(1j * k0 * d_nm),
        r_phase=np.exp(1j * k0 * d_nk),
        g_amplitude=lam / (4.0 * np.pi * layout.d_bi),
        r_amplitudes=lam / (4.0 * np.pi * np.asarray(layout.d_ik, dtype=float)),
    )


def channels_for(config: ScenarioConfig) -> NearFieldChannels:
    return synthesize(build_layout(config), config)


def effective_user_channel(channels: NearFieldChannels, theta: np.ndarray, k: int) -> np.ndarray:
    """``h_k`` such that ``h_k^H = r_k^H diag(theta) G``."""
    theta = np.asarray(theta)
    N, M, K = channels.shape
    if theta.shape != (N,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({N},)")
    if not 0 <= k < K:
        raise IndexError(f"user index {k} out of range for K={K}")
    row = (channels.r[k].conj() * theta) @ channels.G
    return row.conj()


def effective_channels(channels: NearFieldChannels, theta: np.ndarray) -> np.ndarray:
    """Stacked effective channels as an (M, K) matrix with columns ``h_k``."""
    theta = np.asarray(theta)
    if theta.shape != (channels.shape[0],):
        raise ValueError(f"theta has shape {theta.shape}, expected ({channels.shape[0]},)")
    return ((channels.r.conj() * theta) @ channels.G).conj().T


def rates_from_gains(A: np.ndarray, noise: np.ndarray) -> np.ndarray:
    # A[k, j] = h_k^H w_j
    P = np.abs(A) ** 2
    signal = np.diag(P)
    interference = P.sum(axis=1) - signal
    return np.log2(1.0 + signal / (interference + noise))


def user_rates(channels: NearFieldChannels, state: BeamformingState, noise_powers) -> np.ndarray:
    """Per-user rates ``R_k`` in bit/s/Hz."""
    H = effective_channels(channels, state.theta)
    W = np.asarray(state.W).reshape(H.shape[0], -1)
    if W.shape[1] != H.shape[1]:
        raise ValueError(f"W has {W.shape[1]} columns for {H.shape[1]} users")
    noise = np.broadcast_to(np.asarray(noise_powers, dtype=float), (H.shape[1],))
    return rates_from_gains(H.conj().T @ W, noise)


def sum_rate(channels: NearFieldChannels, state: BeamformingState, noise_powers) -> tuple[float, np.ndarray]:
    """Sum-rate and per-user rates of ``state`` over ``channels``."""
    rates = user_rates(channels, state, noise_powers)
    return float(rates.sum()), rates


def dump_channels_csv(channels: NearFieldChannels, path) -> Path:
    """Write ``G`` and every ``r_k`` as rows of (name, row, col, real, imag)."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["name", "row", "col", "real", "imag"])
            G = channels.G
            for (n, m), z in np.ndenumerate(G):
                writer.writerow(["G", n, m, f"{z.real:.17g}", f"{z.imag:.17g}"])
            for k, rk in enumerate(channels.r):
                for n, z in enumerate(rk):
                    writer.writerow([f"r{k + 1}", n, 0, f"{z.real:.17g}", f"{z.imag:.17g}"])
    except OSError as exc:
        raise OSError(f"cannot write channel dump to {path}: {exc}") from exc
    return path
