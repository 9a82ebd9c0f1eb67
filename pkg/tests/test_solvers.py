import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import crandn
from oracles import ball_instance, ball_pg_oracle, disk_coordinate_oracle, disk_instance
from xlirs.solvers import BallQP, DiskQP, solve_ball_qp, solve_disk_qp


def test_ball_interior_solution_returned_exactly():
    e1 = np.eye(3)[:, 0]
    sol = solve_ball_qp(BallQP(e1, [1.0], np.eye(3), 100.0))
    assert sol.nu == 0.0
    np.testing.assert_array_equal(sol.W[:, 0], e1)


def test_ball_linear_objective_gives_mrt(rng):
    h = crandn(rng, 5)
    sol = solve_ball_qp(BallQP(h, [1.0], np.zeros((5, 5)), 1.0))
    np.testing.assert_allclose(sol.W[:, 0], h / np.linalg.norm(h), atol=1e-7)


@pytest.mark.parametrize("seed", range(10))
def test_ball_matches_projected_gradient(seed):
    rng = np.random.default_rng(seed)
    h, c, Q, power = ball_instance(rng)
    prob = BallQP(h, c, Q, power)
    ours = prob.objective(solve_ball_qp(prob).W)
    ref = prob.objective(ball_pg_oracle(h, c, Q, power))
    assert ours >= ref - 1e-6 * abs(ref)
    assert ours == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_ball_kkt_conditions(seed):
    rng = np.random.default_rng(100 + seed)
    h, c, Q, power = ball_instance(rng, M=5, K=3)
    prob = BallQP(h, c, Q, power)
    sol = solve_ball_qp(prob)
    used = np.sum(np.abs(sol.W) ** 2)
    assert used <= power * (1 + 1e-8)
    resid = (Q + sol.nu * np.eye(5)) @ sol.W - prob.targets
    assert np.all(np.linalg.norm(resid, axis=0) < 1e-6 * np.linalg.norm(prob.targets, axis=0))
    assert abs(sol.nu * (used - power)) <= 1e-6 * power


def test_ball_null_space_target_needs_multiplier():
    Q = np.diag([1.0, 0.0])
    sol = solve_ball_qp(BallQP(np.array([0.0, 1.0]), [1.0], Q, 2.0))
    assert sol.nu > 0
    assert np.sum(np.abs(sol.W) ** 2) == pytest.approx(2.0, rel=1e-8)


def test_ball_rejects_bad_input(rng):
    with pytest.raises(ValueError):
        BallQP(crandn(rng, 3, 2), [1.0], np.eye(3), 1.0)
    with pytest.raises(ValueError):
        BallQP(crandn(rng, 3), [1.0], np.eye(3), 0.0)
    with pytest.raises(ValueError):
        BallQP(crandn(rng, 2), [1.0], np.array([[1, 1], [0, 1]]), 1.0)


def test_solvers_are_deterministic(rng):
    h, c, Q, power = ball_instance(rng)
    a = solve_ball_qp(BallQP(h, c, Q, power)).W
    b = solve_ball_qp(BallQP(h, c, Q, power)).W
    assert a.tobytes() == b.tobytes()
    v, C = disk_instance(rng)
    t0 = np.zeros(6, dtype=complex)
    assert solve_disk_qp(DiskQP(v, C), t0).theta.tobytes() == solve_disk_qp(DiskQP(v, C), t0).theta.tobytes()


def test_disk_zero_quadratic_aligns_with_v(rng):
    v = crandn(rng, 7)
    sol = solve_disk_qp(DiskQP(v, np.zeros((7, 7))), np.zeros(7))
    np.testing.assert_allclose(sol.theta, v / np.abs(v), atol=1e-12)


def test_disk_zero_linear_term_is_stationary(rng):
    A = crandn(rng, 4, 4)
    sol = solve_disk_qp(DiskQP(np.zeros(4), A @ A.conj().T), np.zeros(4))
    np.testing.assert_array_equal(sol.theta, np.zeros(4))


@pytest.mark.parametrize("seed", range(10))
def test_disk_matches_coordinate_ascent(seed):
    rng = np.random.default_rng(seed)
    v, C = disk_instance(rng)
    prob = DiskQP(v, C)
    sol = solve_disk_qp(prob, np.zeros(6))
    assert np.all(np.abs(sol.theta) <= 1 + 1e-12)
    ref = prob.objective(disk_coordinate_oracle(v, C))
    assert prob.objective(sol.theta) == pytest.approx(ref, rel=1e-6)


def test_disk_factor_and_dense_agree(rng):
    F = crandn(rng, 8, 3)
    v = crandn(rng, 8)
    a = solve_disk_qp(DiskQP(v, factor=F), np.ones(8))
    b = solve_disk_qp(DiskQP(v, F @ F.conj().T), np.ones(8))
    assert DiskQP(v, factor=F).objective(a.theta) == pytest.approx(DiskQP(v, factor=F).objective(b.theta), rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_disk_history_is_monotone(seed, N):
    rng = np.random.default_rng(seed)
    A = crandn(rng, N, N)
    v = crandn(rng, N)
    theta0 = np.exp(2j * np.pi * rng.random(N)) * rng.random(N)
    sol = solve_disk_qp(DiskQP(v, A @ A.conj().T), theta0, keep_history=True)
    f = sol.objectives
    assert np.all(np.diff(f) >= -1e-12 * np.maximum(1.0, np.abs(f[1:])))
    assert np.all(np.abs(sol.theta) <= 1 + 1e-12)
