"""Multi-user sum-rate maximization by SCA inside alternating optimization.

Both blocks use the same concave minorant of the per-user rate.  Writing
``a`` for the useful amplitude and ``b`` for interference plus noise, the
minorant anchored at ``(a_t, b_t)`` is

    ( ln(1 + x_t) - x_t + 2 Re{conj(a_t) a} / b_t
      - |a_t|^2 (|a|^2 + b) / (b_t (|a_t|^2 + b_t)) ) / ln 2,   x_t = |a_t|^2 / b_t

which is tight at the anchor.  For the precoders ``a = h_k^H w_k``; for the
reflection vector ``a = u_kk^H theta`` with ``u_kj = r_k * conj(G w_j)``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import (
    BeamformingState,
    NearFieldChannels,
    rates_from_gains,
    channels_for,
    effective_channels,
    unit_phase,
)
from .geometry import ScenarioConfig
from .single_user import aligned_phases, ao_single_user, mrt_precoder
from .solvers import BallQP, DiskQP, solve_ball_qp, solve_disk_qp

__all__ = [
    "SurrogateCoefficients",
    "ScaTrace",
    "surrogate_coefficients",
    "surrogate_value",
    "precoder_step",
    "phase_step",
    "initial_state",
    "sca_ao_multi_user",
    "aggregate_channel",
    "write_trace_csv",
]

log = logging.getLogger(__name__)
LN2 = np.log(2.0)


@dataclass(frozen=True)
class SurrogateCoefficients:
    """Per-user minorant coefficients built from anchors ``a_t``, ``b_t``."""

    a_t: np.ndarray
    b_t: np.ndarray

    @property
    def c(self) -> np.ndarray:
        """Linear weight ``conj(a_t) / b_t``."""
        return self.a_t.conj() / self.b_t

    @property
    def gamma(self) -> np.ndarray:
        """Quadratic weight ``|a_t|^2 / (b_t (|a_t|^2 + b_t))``."""
        s = np.abs(self.a_t) ** 2
        return s / (self.b_t * (s + self.b_t))

    @property
    def constant(self) -> np.ndarray:
        x = np.abs(self.a_t) ** 2 / self.b_t
        return np.log1p(x) - x

    @property
    def rates(self) -> np.ndarray:
        """Exact rates at the anchor, in bit/s/Hz."""
        return np.log2(1.0 + np.abs(self.a_t) ** 2 / self.b_t)


def surrogate_coefficients(gains: np.ndarray, noise) -> SurrogateCoefficients:
    """Anchors from the gain matrix ``gains[k, j] = h_k^H w_j``."""
    gains = np.asarray(gains, dtype=complex)
    power = np.abs(gains) ** 2
    a_t = np.diag(gains).copy()
    b_t = power.sum(axis=1) - np.abs(a_t) ** 2 + np.asarray(noise, dtype=float)
    return SurrogateCoefficients(a_t=a_t, b_t=b_t)


def surrogate_value(coeffs: SurrogateCoefficients, k: int, a, quad) -> np.ndarray:
    """Minorant of ``R_k`` at amplitude ``a`` and ``quad = |a|^2 + b``."""
    a = np.asarray(a)
    lin = 2.0 * np.real(coeffs.c[k] * a)
    return (coeffs.constant[k] + lin - coeffs.gamma[k] * np.asarray(quad)) / LN2


def _gains(channels: NearFieldChannels, state: BeamformingState) -> np.ndarray:
    H = effective_channels(channels, state.theta)
    return H.conj().T @ state.W


def _exact_sum(channels, state, noise) -> float:
    return float(rates_from_gains(_gains(channels, state), noise).sum())


def _surrogate_sum(coeffs: SurrogateCoefficients, gains: np.ndarray, noise) -> float:
    quad = np.sum(np.abs(gains) ** 2, axis=1) + noise
    return float(np.sum((coeffs.constant + 2.0 * np.real(coeffs.c * np.diag(gains)) - coeffs.gamma * quad) / LN2))


def aggregate_channel(channels: NearFieldChannels, theta: np.ndarray) -> np.ndarray:
    """The K x M matrix with rows ``r_k^H diag(theta) G``."""
    return effective_channels(channels, theta).conj().T


def precoder_step(
    channels: NearFieldChannels,
    theta: np.ndarray,
    W_t: np.ndarray,
    config: ScenarioConfig,
) -> np.ndarray:
    """Maximize the precoder minorant anchored at ``W_t`` for fixed ``theta``."""
    noise = np.asarray(config.noise_powers_w)
    H = effective_channels(channels, theta)
    coeffs = surrogate_coefficients(H.conj().T @ W_t, noise)
    Q = (H * coeffs.gamma) @ H.conj().T
    Q = 0.5 * (Q + Q.conj().T)
    W = solve_ball_qp(BallQP(H, coeffs.c, Q, config.tx_power_w)).W
    # a common up-scaling raises every SINR, so spend the whole budget
    used = np.sum(np.abs(W) ** 2)
    if used > 0:
        W = W * np.sqrt(config.tx_power_w / used)
    return W


def _cascade_vectors(channels: NearFieldChannels, W: np.ndarray) -> np.ndarray:
    # U[k, j] = r_k * conj(G w_j), so that h_k^H w_j = U[k, j]^H theta
    GW = channels.G @ W
    return channels.r[:, None, :] * GW.conj().T[None, :, :]


def phase_step(
    channels: NearFieldChannels,
    W: np.ndarray,
    theta_t: np.ndarray,
    config: ScenarioConfig,
    return_surrogate: bool = False,
):
    """Relaxed reflection update followed by unit-circle projection.

    The projected vector is kept only if it does not lower the exact
    sum-rate; otherwise ``theta_t`` is returned unchanged.
    """
    noise = np.asarray(config.noise_powers_w)
    U = _cascade_vectors(channels, W)
    K = U.shape[0]
    gains = np.einsum("kjn,n->kj", U.conj(), theta_t)
    coeffs = surrogate_coefficients(gains, noise)
    diag_u = U[np.arange(K), np.arange(K)]  # (K, N)
    v = (coeffs.c.conj()[:, None] * diag_u).sum(axis=0)
    factor = (np.sqrt(coeffs.gamma)[:, None, None] * U).reshape(K * K, -1).T
    relaxed = solve_disk_qp(DiskQP(v, factor=factor), theta_t).theta
    theta = unit_phase(relaxed)

    old = float(rates_from_gains(gains, noise).sum())
    new_gains = np.einsum("kjn,n->kj", U.conj(), theta)
    new = float(rates_from_gains(new_gains, noise).sum())
    if new < old:
        theta, new_gains = theta_t, gains
    if return_surrogate:
        return theta, _surrogate_sum(coeffs, new_gains, noise)
    return theta


@dataclass
class ScaTrace:
    iterations: list = field(default_factory=list)  # (index, exact R_sum, surrogate R_sum)
    converged: bool = False
    final_state: BeamformingState | None = None
    start: str = "default"
    rates: np.ndarray | None = None

    @property
    def sum_rate(self) -> float:
        return self.iterations[-1][1]

    @property
    def sum_rates(self) -> np.ndarray:
        return np.array([it[1] for it in self.iterations])


def initial_state(channels: NearFieldChannels, config: ScenarioConfig) -> BeamformingState:
    """Equal-power per-user MRT with the IRS focused on the user centroid."""
    P = config.tx_power_w
    N, M, K = channels.shape
    if K == 1:
        r_c = channels.r[0]
    else:
        centroid = np.mean(np.asarray(config.user_positions), axis=0)
        r_c = channels_for(config.replace(users=1, user_positions=(tuple(centroid),),
                                          noise_powers_w=config.noise_powers_w[:1])).r[0]
    G = channels.G
    w0 = mrt_precoder(G.sum(axis=0).conj(), P)
    theta = aligned_phases(w0, G, r_c)
    H = effective_channels(channels, theta)
    W = np.zeros((M, K), dtype=complex)
    for k in range(K):
        if np.linalg.norm(H[:, k]) > 0:
            W[:, k] = mrt_precoder(H[:, k], P / K)
    return BeamformingState(W=W, theta=theta)


def _run(channels, config, state: BeamformingState, tol, max_outer, label) -> ScaTrace:
    noise = np.asarray(config.noise_powers_w)
    W, theta = state.W.copy(), state.theta.copy()
    trace = ScaTrace(start=label)
    current = _exact_sum(channels, BeamformingState(W, theta), noise)
    trace.iterations.append((0, current, current))
    for t in range(1, max_outer + 1):
        W_new = precoder_step(channels, theta, W, config)
        after_w = _exact_sum(channels, BeamformingState(W_new, theta), noise)
        if after_w >= current:
            W = W_new
        theta, surrogate = phase_step(channels, W, theta, config, return_surrogate=True)
        new = _exact_sum(channels, BeamformingState(W, theta), noise)
        trace.iterations.append((t, new, surrogate))
        if abs(new - current) < tol:
            current = new
            trace.converged = True
            break
        current = new
    trace.final_state = BeamformingState(W=W, theta=theta)
    trace.rates = rates_from_gains(_gains(channels, trace.final_state), noise)
    return trace


def sca_ao_multi_user(
    channels: NearFieldChannels,
    config: ScenarioConfig,
    tol: float = 1e-3,
    max_outer: int = 100,
    warm_starts: bool = True,
    random_restarts: int = 0,
    seed: int = 0,
) -> ScaTrace:
    """Run SCA-AO from several starting points and keep the best run.

    The starts are the default equal-power MRT point, then (with
    ``warm_starts``) each user's single-user AO solution carrying the whole
    power budget, then ``random_restarts`` seeded random points.
    """
    N, M, K = channels.shape
    starts = [("default", initial_state(channels, config))]
    if warm_starts:
        for k in range(K):
            su = ao_single_user(channels, config, user=k)
            starts.append((f"user{k + 1}", su.final_state))
    rng = np.random.default_rng(seed)
    for i in range(random_restarts):
        theta = np.exp(2j * np.pi * rng.random(N))
        W = rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))
        W *= np.sqrt(config.tx_power_w / np.sum(np.abs(W) ** 2))
        starts.append((f"random{i + 1}", BeamformingState(W, theta)))

    best = None
    for label, state in starts:
        trace = _run(channels, config, state, tol, max_outer, label)
        log.debug("start %s: %.6f bit/s/Hz after %d iterations", label, trace.sum_rate, len(trace.iterations) - 1)
        if best is None or trace.sum_rate > best.sum_rate:
            best = trace
    return best


def write_trace_csv(trace: ScaTrace, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "sum_rate", "surrogate"])
            for t, exact, surrogate in trace.iterations:
                writer.writerow([t, f"{exact:.9g}", f"{surrogate:.9g}"])
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc
    return path
