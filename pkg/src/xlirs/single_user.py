"""Single-user alternating optimization of the precoder and IRS phases."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import BeamformingState, NearFieldChannels, unit_phase
from .geometry import ScenarioConfig

__all__ = ["AoTrace", "mrt_precoder", "aligned_phases", "center_alignment", "ao_single_user"]


@dataclass
class AoTrace:
    iterations: list = field(default_factory=list)  # (index, |r^H Theta G w|^2)
    converged: bool = False
    final_state: BeamformingState | None = None
    rate: float = 0.0

    @property
    def objective(self) -> float:
        return self.iterations[-1][1]

    @property
    def objectives(self) -> np.ndarray:
        return np.array([obj for _, obj in self.iterations])


def mrt_precoder(h: np.ndarray, power: float) -> np.ndarray:
    """Maximum ratio transmission ``sqrt(P) h / ||h||``."""
    h = np.asarray(h, dtype=complex)
    norm = np.linalg.norm(h)
    if norm == 0.0:
        raise ValueError("effective channel is zero; MRT direction undefined")
    return np.sqrt(power) * h / norm


def aligned_phases(w: np.ndarray, G: np.ndarray, r: np.ndarray) -> np.ndarray:
    """IRS phases co-phasing every term of ``r^H diag(theta) G w``.

    After alignment ``r^H diag(theta) G w = sum_n |conj(r_n) [G w]_n|``.
    """
    cascade = np.conj(r) * (G @ w)
    return unit_phase(cascade).conj()


def center_alignment(G: np.ndarray, r: np.ndarray, power: float) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic start: MRT toward the summed IRS rows, phases aligned to it."""
    w0 = mrt_precoder(G.sum(axis=0).conj(), power)
    return w0, aligned_phases(w0, G, r)


def _objective(G, r, theta, w) -> float:
    return float(np.abs((np.conj(r) * theta) @ (G @ w)) ** 2)


def ao_single_user(
    channels: NearFieldChannels,
    config: ScenarioConfig,
    tol: float = 1e-8,
    max_iter: int = 200,
    user: int = 0,
    init: tuple[np.ndarray, np.ndarray] | None = None,
) -> AoTrace:
    """Alternate MRT and phase alignment for one user until the SNR settles.

    Only ``user`` is served and it gets the full power budget.  Iteration 0
    of the trace is the starting point; each later entry follows one MRT
    update and one phase update.
    """
    G, r = channels.G, channels.r[user]
    P = config.tx_power_w
    if init is None:
        w, theta = center_alignment(G, r, P)
    else:
        w, theta = (np.asarray(a, dtype=complex) for a in init)

    trace = AoTrace()
    obj = _objective(G, r, theta, w)
    trace.iterations.append((0, obj))
    for it in range(1, max_iter + 1):
        h = ((np.conj(r) * theta) @ G).conj()
        w = mrt_precoder(h, P)
        theta = aligned_phases(w, G, r)
        new = _objective(G, r, theta, w)
        trace.iterations.append((it, new))
        if abs(new - obj) <= tol * max(abs(new), np.finfo(float).tiny):
            trace.converged = True
            break
        obj = new

    K = channels.shape[2]
    W = np.zeros((G.shape[1], K), dtype=complex)
    W[:, user] = w
    trace.final_state = BeamformingState(W=W, theta=theta)
    trace.rate = float(np.log2(1.0 + trace.objective / config.noise_powers_w[user]))
    return trace
