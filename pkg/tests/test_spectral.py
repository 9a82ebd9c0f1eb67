import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn
from xlirs.channel import channels_for, unit_phase
from xlirs.geometry import build_layout
from xlirs.single_user import ao_single_user
from xlirs.spectral import (
    best_index,
    correlation_ratio,
    edof,
    gram,
    gram_eigen,
    snr_closed_forms,
    spectral_summary,
)


def power_iteration(A, iters=500, seed=0):
    """Leading eigenpair of a Hermitian PSD matrix by plain power iteration."""
    x = crandn(np.random.default_rng(seed), A.shape[0])
    x /= np.linalg.norm(x)
    for _ in range(iters):
        x = A @ x
        x /= np.linalg.norm(x)
    return float(np.real(x.conj() @ A @ x)), x


def rank_one_phase(rng, N, M):
    a = np.exp(2j * np.pi * rng.random(N))
    b = np.exp(2j * np.pi * rng.random(M))
    return np.outer(a, b.conj())


def test_rank_one_gram(rng):
    mu, psi, rank = gram_eigen(rank_one_phase(rng, 7, 3))
    assert rank == 1
    assert mu[0] == pytest.approx(21.0, rel=1e-12)


def test_trace_identity(rng):
    G = np.exp(2j * np.pi * rng.random((20, 5)))
    mu, _, _ = gram_eigen(G)
    assert mu.sum() == pytest.approx(100.0, abs=1e-6)


def test_power_iteration_oracle(rng):
    G = np.exp(2j * np.pi * rng.random((8, 4)))
    A = gram(G)
    mu, psi, _ = gram_eigen(G)
    assert mu[1] / mu[0] < 0.95  # enough gap for 500 iterations

    mu1, x1 = power_iteration(A)
    assert mu1 == pytest.approx(mu[0], rel=1e-8)
    assert abs(abs(x1.conj() @ psi[:, 0]) - 1.0) < 1e-8

    mu2, x2 = power_iteration(A - mu1 * np.outer(x1, x1.conj()))
    assert mu2 == pytest.approx(mu[1], rel=1e-8)
    assert abs(abs(x2.conj() @ psi[:, 1]) - 1.0) < 1e-8


def test_summary_invariants(rng):
    G = np.exp(2j * np.pi * rng.random((30, 6)))
    s = spectral_summary(G)
    A = gram(G)
    assert s.eigenvalues.sum() == pytest.approx(180.0, abs=1e-6)
    assert np.all(np.diff(s.eigenvalues) <= 0)
    np.testing.assert_allclose(np.linalg.norm(s.eigenvectors, axis=0), 1.0, atol=1e-9)
    np.testing.assert_allclose(s.eigenvectors.conj().T @ s.eigenvectors, np.eye(s.numerical_rank), atol=1e-9)
    recon = (s.eigenvectors * s.eigenvalues) @ s.eigenvectors.conj().T
    assert np.linalg.norm(recon - A) / np.linalg.norm(A) < 1e-8
    assert 1.0 <= s.edof <= s.numerical_rank <= min(G.shape)
    assert s.edof == pytest.approx(edof(A), rel=1e-10)


def test_kappa_constant_modulus_vector_is_one(rng):
    N = 16
    psi = np.exp(2j * np.pi * rng.random(N)) / np.sqrt(N)
    G = np.outer(psi * np.sqrt(N), np.exp(2j * np.pi * rng.random(3)).conj())
    assert correlation_ratio(psi, G) == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(unit_phase(psi), np.sqrt(N) * psi, atol=1e-12)


def test_rank_one_far_field_limit(rng):
    G = rank_one_phase(rng, 12, 4)
    s = spectral_summary(G)
    assert s.kappas[0] == pytest.approx(1.0, rel=1e-12)
    est = snr_closed_forms(s, 10.0, 20.0, 1e-12, 1.0, 0.03, 4, 12)
    assert est.closed == pytest.approx(est.bound, rel=1e-12)
    assert est.approx == pytest.approx(est.bound, rel=1e-12)


def test_kappa_definition_self_check(rng):
    G = np.exp(2j * np.pi * rng.random((16, 4)))
    s = spectral_summary(G)
    A = gram(G)
    N = G.shape[0]
    for i in range(s.numerical_rank):
        theta = unit_phase(s.eigenvectors[:, i])
        direct = np.real(theta.conj() @ A @ theta)
        assert s.kappas[i] * N * s.eigenvalues[i] == pytest.approx(direct, rel=1e-10)
        assert s.kappas[i] > 0
        assert s.kappas[i] * s.eigenvalues[i] <= s.eigenvalues[0] * (1 + 1e-12)
    assert 0 < s.kappas[0] <= 1 + 1e-12


def test_closed_form_matches_direct_quadratic_form(rng):
    # closed = P beta max_i theta_i^H Gbar theta_i / (d^2 d^2 sigma^2), checked through
    # |r^H Theta_i G w_mrt|^2 P / sigma^2 with r phases cancelled by Theta_i
    N, M, lam, P, s2 = 12, 3, 0.03, 2.0, 1e-3
    G_phase = np.exp(2j * np.pi * rng.random((N, M)))
    r_phase = np.exp(2j * np.pi * rng.random(N))
    d_bi, d_i1 = 15.0, 40.0
    G = lam / (4 * np.pi * d_bi) * G_phase
    r = lam / (4 * np.pi * d_i1) * r_phase
    s = spectral_summary(G_phase)
    est = snr_closed_forms(s, d_bi, d_i1, s2, P, lam, M, N)
    i = est.best_index - 1
    theta_i = unit_phase(s.eigenvectors[:, i]).conj()
    Theta = np.diag(r_phase * theta_i)
    h = (r.conj() @ Theta @ G).conj()
    w = np.sqrt(P) * h / np.linalg.norm(h)
    direct = abs(h.conj() @ w) ** 2 / s2
    assert est.closed == pytest.approx(direct, rel=1e-9)


def test_single_antenna_collapse(baseline):
    cfg = baseline.replace(bs_antennas=1)
    for x in (10, 77, 140):
        c = cfg.with_irs_at(x)
        lay = build_layout(c)
        s = spectral_summary(channels_for(c).G_phase)
        est = snr_closed_forms(s, lay.d_bi, lay.d_ik[0], 1e-12, 1.0, 0.03, 1, 480)
        for value in (est.bound, est.approx, est.closed):
            assert value == pytest.approx(est.m1, rel=1e-12)


def test_near_user_gap_is_small(baseline):
    c = baseline.with_irs_at(140)
    lay = build_layout(c)
    s = spectral_summary(channels_for(c).G_phase)
    est = snr_closed_forms(s, lay.d_bi, lay.d_ik[0], 1e-12, 1.0, 0.03, 64, 480)
    assert np.log2(1 + est.bound) - np.log2(1 + est.closed) < 0.2


def test_best_index_rank_one(rng):
    assert best_index(spectral_summary(rank_one_phase(rng, 9, 2))) == 1


def test_best_index_prefers_constant_modulus_mode(rng):
    N = 8
    psi1 = np.zeros(N, complex)
    psi1[0] = 10.0
    psi1 += 0.3 * crandn(rng, N)
    psi1 /= np.linalg.norm(psi1)
    psi2 = np.exp(2j * np.pi * rng.random(N))
    psi2 -= psi1 * (psi1.conj() @ psi2)
    psi2 /= np.linalg.norm(psi2)
    mu1, mu2 = 1.0, 0.9
    G = np.sqrt(mu1) * np.outer(psi1, [1, 0]) + np.sqrt(mu2) * np.outer(psi2, [0, 1])
    s = spectral_summary(G)
    A = gram(G)
    brute = [np.real(unit_phase(s.eigenvectors[:, i]).conj() @ A @ unit_phase(s.eigenvectors[:, i]))
             for i in range(s.numerical_rank)]
    assert int(np.argmax(brute)) + 1 == 2
    assert best_index(s) == 2
    assert s.eigenvalues[1] / s.eigenvalues[0] == pytest.approx(0.9, rel=1e-9)


def test_best_index_tie_break():
    from xlirs.spectral import SpectralSummary

    s = SpectralSummary(np.array([2.0, 1.0, 0.5]), np.eye(3), np.array([0.5, 1.0, 2.0]), 1.0, 3, 3.5)
    assert best_index(s) == 1


def test_edof_examples(rng):
    a = np.exp(2j * np.pi * rng.random(6))
    assert edof(np.outer(a, a.conj())) == pytest.approx(1.0, rel=1e-12)
    Q, _ = np.linalg.qr(crandn(rng, 6, 6))
    A = (Q[:, :3] * 2.5) @ Q[:, :3].conj().T
    assert edof(A) == pytest.approx(3.0, rel=1e-10)
    with pytest.raises(ValueError):
        edof(np.zeros((3, 3)))


def test_edof_default_endpoints(baseline):
    near = spectral_summary(channels_for(baseline.with_irs_at(10)).G_phase).edof
    far = spectral_summary(channels_for(baseline.with_irs_at(140)).G_phase).edof
    assert near > far
    assert far < 1.5


@settings(max_examples=30, deadline=None)
@given(N=st.integers(2, 20), M=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_estimate_ordering_property(N, M, seed):
    rng = np.random.default_rng(seed)
    s = spectral_summary(np.exp(2j * np.pi * rng.random((N, M))))
    est = snr_closed_forms(s, 5.0, 7.0, 1e-9, 1.0, 0.03, M, N)
    assert est.closed <= est.approx * (1 + 1e-9) <= est.bound * (1 + 1e-9) ** 2
    assert 1 - 1e-9 <= s.edof <= s.numerical_rank <= min(N, M)


def test_ao_never_below_closed_form(baseline):
    for x in (10, 30, 70, 140):
        c = baseline.with_irs_at(x)
        lay = build_layout(c)
        ch = channels_for(c)
        est = snr_closed_forms(spectral_summary(ch.G_phase), lay.d_bi, lay.d_ik[0], 1e-12, 1.0, 0.03, 64, 480)
        rate = ao_single_user(ch, c).rate
        assert np.log2(1 + est.closed) - 1e-6 <= rate <= np.log2(1 + est.bound) + 1e-9
