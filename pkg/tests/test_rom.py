from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pgrom.core import StageRule
from pgrom.errors import ConfigurationError, ContractError, DegenerateBasisError, LinearSolveError, StrategyError
from pgrom.models import BurgersModel, LinearModel, random_quadratic_model
from pgrom.rom import (
    FullEvaluator,
    LeftBasisStrategy,
    ReducedBasis,
    ReducedSystem,
    SnapshotSet,
    build_pod,
    collect_snapshots,
    cumulative_energy,
    energy_dimension,
    galerkin_reduced_residual,
    l1_theta_diagonal,
    minimized_residual_norm,
    pg_reduced_system,
    pg_step,
    snapshot_count,
    solve_prom_step,
    step_direction_error_check,
    theta_norm_squared,
)
from pgrom.timeint import FullOrderSystem, NewtonConfig, Trajectory, integrate


def random_spd(n, rng, cond=10.0):
    Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    return Q @ np.diag(np.linspace(1.0, cond, n)) @ Q.T


def dense(J):
    return J.toarray() if sp.issparse(J) else np.asarray(J)


def inverse_theta(u, J):
    return np.linalg.inv(dense(J))


# -- snapshots ---------------------------------------------------------------


def uniform_trajectory(t_end, dt, N=2):
    n = int(round(t_end / dt))
    times = np.arange(n + 1) * dt
    return Trajectory(times, np.tile(times, (N, 1)), dt)


@pytest.mark.parametrize("t_end,dt,ds,count", [(150.0, 0.1, 0.2, 751), (20.0, 0.05, 0.1, 201), (1.0, 0.01, 0.01, 101)])
def test_snapshot_counts(t_end, dt, ds, count):
    snaps = collect_snapshots(uniform_trajectory(t_end, dt), ds)
    assert len(snaps) == count == snapshot_count(0.0, t_end, ds)
    assert snaps.times[0] == 0.0
    assert np.allclose(np.diff(snaps.times), ds)
    assert np.array_equal(snaps.states[0], snaps.times)


def test_snapshot_window_and_bad_interval():
    traj = uniform_trajectory(3.0, 0.01)
    snaps = collect_snapshots(traj, 0.1, (0.0, 2.0))
    assert len(snaps) == 21 and snaps.times[-1] == pytest.approx(2.0)
    with pytest.raises(ConfigurationError):
        collect_snapshots(traj, 0.015)


# -- POD -----------------------------------------------------------------------


def test_pod_rank_one():
    s = np.random.default_rng(0).standard_normal(10)
    basis = build_pod(np.column_stack([s, 2 * s]), criterion=0.9999, normalize=False)
    assert basis.n == 1
    assert abs(abs(basis.V[:, 0] @ s) / np.linalg.norm(s) - 1.0) < 1e-12
    assert cumulative_energy(basis.singular_values)[0] == pytest.approx(1.0)


def test_pod_orthogonal_columns_sorted():
    X = np.zeros((5, 2))
    X[0, 0] = 3.0
    X[1, 1] = 4.0
    basis = build_pod(X, criterion=2, normalize=False)
    assert np.allclose(basis.singular_values, [4.0, 3.0])
    assert cumulative_energy(basis.singular_values)[0] == pytest.approx(16 / 25, abs=1e-15)
    assert energy_dimension(basis.singular_values, 0.6) == 1
    assert energy_dimension(basis.singular_values, 0.7) == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_pod_criterion_monotone_and_orthonormal(seed):
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((30, 12)) @ np.diag(0.5 ** np.arange(12))
    dims = [build_pod(S, criterion=c).n for c in (0.999, 0.9999, 0.99999)]
    assert dims == sorted(dims)
    basis = build_pod(S, criterion=0.9999)
    assert basis.orthonormality_error() < 1e-12
    assert np.all(np.diff(basis.singular_values) <= 0)
    assert basis.n <= S.shape[1]


def test_pod_zero_matrix_is_degenerate():
    with pytest.raises(DegenerateBasisError):
        build_pod(np.zeros((4, 3)))
    u = np.ones(4)
    with pytest.raises(DegenerateBasisError):
        build_pod(np.column_stack([u, u]), u0=u)


def test_pod_rejects_bad_criterion():
    S = np.random.default_rng(1).standard_normal((6, 3))
    with pytest.raises(ConfigurationError):
        build_pod(S, criterion=1.5)
    with pytest.raises(ConfigurationError):
        build_pod(S, criterion=4)


def test_pod_block_normalization_spans_scaled_modes():
    rng = np.random.default_rng(2)
    # two variables with very different magnitudes
    S = np.vstack([1e3 * rng.standard_normal((5, 4)), 1e-2 * rng.standard_normal((5, 4))])
    blocks = [slice(0, 5), slice(5, 10)]
    basis = build_pod(S, criterion=4, normalize=True, blocks=blocks)
    assert basis.orthonormality_error() < 1e-12
    # with all modes kept the subspace contains every snapshot
    P = basis.V @ (basis.V.T @ S)
    assert np.max(np.abs(P - S)) < 1e-9 * np.max(np.abs(S))
    assert basis.scales[0] > 1e2 and basis.scales[1] < 1e-1


def test_basis_reconstruct_project_roundtrip():
    rng = np.random.default_rng(3)
    basis = ReducedBasis(rng.standard_normal(8), np.linalg.qr(rng.standard_normal((8, 3)))[0])
    y = rng.standard_normal(3)
    assert np.allclose(basis.project(basis.reconstruct(y)), y)


# -- projected residuals ----------------------------------------------------------


def test_galerkin_residual_coordinate_extraction():
    rng = np.random.default_rng(4)
    model = random_quadratic_model(6, density=0.3, seed=3)
    V = np.zeros((6, 1))
    V[0, 0] = 1.0
    u0 = rng.standard_normal(6)
    y = np.array([0.7])
    r = model.f_eval(u0 + V @ y)
    assert galerkin_reduced_residual(model, ReducedBasis(u0, V), y)[0] == pytest.approx(r[0], abs=1e-15)


def test_galerkin_residual_vanishes_at_equilibrium():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((10, 10)) + 10 * np.eye(10)
    u_star = rng.standard_normal(10)
    model = LinearModel(A, A @ u_star)
    V = np.linalg.qr(rng.standard_normal((10, 3)))[0]
    y = np.array([0.3, -0.2, 0.5])
    basis = ReducedBasis(u_star - V @ y, V)
    assert np.max(np.abs(galerkin_reduced_residual(model, basis, y))) < 1e-12


def test_galerkin_residual_dense_oracle():
    rng = np.random.default_rng(6)
    A = rng.standard_normal((15, 15))
    b = rng.standard_normal(15)
    model = LinearModel(A, b)
    V = np.linalg.qr(rng.standard_normal((15, 4)))[0]
    u0 = rng.standard_normal(15)
    y = rng.standard_normal(4)
    base = rng.standard_normal(15)
    rule = StageRule(base, 0.1)
    oracle = V.T @ ((u0 + V @ y - base) / 0.1 + A @ (u0 + V @ y) - b)
    got = galerkin_reduced_residual(model, ReducedBasis(u0, V), y, rule)
    assert np.max(np.abs(got - oracle)) < 1e-12 * max(1.0, np.max(np.abs(oracle)))


def test_galerkin_residual_dimension_errors():
    model = LinearModel(np.eye(4))
    basis = ReducedBasis(np.zeros(4), np.eye(4)[:, :2])
    with pytest.raises(ContractError):
        galerkin_reduced_residual(model, basis, np.zeros(3))
    with pytest.raises(ContractError):
        galerkin_reduced_residual(LinearModel(np.eye(5)), basis, np.zeros(2))


def test_pg_galerkin_equals_galerkin_residual():
    model = random_quadratic_model(20, density=0.1, seed=7)
    rng = np.random.default_rng(7)
    basis = ReducedBasis(rng.standard_normal(20), np.linalg.qr(rng.standard_normal((20, 3)))[0])
    y = rng.standard_normal(3)
    res, jac = pg_reduced_system(model, basis, LeftBasisStrategy.galerkin(), y)
    assert np.array_equal(res, galerkin_reduced_residual(model, basis, y))
    u = basis.reconstruct(y)
    assert np.allclose(jac, basis.V.T @ (model.jacobian(u) @ basis.V), atol=1e-12)


def test_theta_inverse_jacobian_reproduces_galerkin():
    rng = np.random.default_rng(8)
    A = random_spd(12, rng)
    model = LinearModel(A, rng.standard_normal(12), spd=True)
    basis = ReducedBasis(rng.standard_normal(12), np.linalg.qr(rng.standard_normal((12, 4)))[0])
    y = rng.standard_normal(4)
    gal = pg_reduced_system(model, basis, LeftBasisStrategy.galerkin(), y)
    weighted = pg_reduced_system(model, basis, LeftBasisStrategy("theta_weighted", "per_iteration", inverse_theta), y)
    assert np.max(np.abs(gal[0] - weighted[0])) < 1e-10
    assert np.max(np.abs(gal[1] - weighted[1])) < 1e-10


def test_l1_theta_by_hand():
    r = np.array([2.0, -0.5, 0.0])
    theta = l1_theta_diagonal(r)
    assert np.array_equal(theta, [0.5, 2.0, 1.0])
    assert theta_norm_squared(r, theta) == 2.5 == np.abs(r).sum()


def test_l1_identity_in_exact_arithmetic():
    rng = np.random.default_rng(9)
    for _ in range(200):
        r = rng.standard_normal(20)
        r[rng.random(20) < 0.2] = 0.0
        exact = [Fraction(x) for x in r]
        weights = [1 / abs(x) if x != 0 else Fraction(1) for x in exact]
        assert sum(w * x * x for w, x in zip(weights, exact)) == sum(abs(x) for x in exact)


def test_non_spd_theta_is_rejected():
    model = LinearModel(np.eye(3))
    basis = ReducedBasis(np.zeros(3), np.eye(3)[:, :2])
    strategy = LeftBasisStrategy("theta_weighted", "per_iteration", -np.eye(3))
    with pytest.raises(StrategyError):
        pg_reduced_system(model, basis, strategy, np.zeros(2))
    with pytest.raises(StrategyError):
        LeftBasisStrategy("theta_weighted")
    with pytest.raises(StrategyError):
        LeftBasisStrategy("petrov")


# -- reduced time steps -----------------------------------------------------------------


def test_prom_step_zero_dynamics():
    model = LinearModel(np.zeros((6, 6)))
    basis = ReducedBasis(np.ones(6), np.linalg.qr(np.random.default_rng(0).standard_normal((6, 2)))[0])
    y = np.array([0.4, -1.2])
    for strategy in (LeftBasisStrategy.galerkin(), LeftBasisStrategy.lspg()):
        assert np.array_equal(solve_prom_step(model, basis, strategy, "dirk2", y, 0.1), y)
        assert np.array_equal(solve_prom_step(model, basis, strategy, "bdf3", [y, y, y], 0.1), y)


def test_prom_step_galerkin_equals_inverse_weighted_step():
    rng = np.random.default_rng(10)
    A = random_spd(16, rng)
    model = LinearModel(A, rng.standard_normal(16), spd=True)
    basis = ReducedBasis(rng.standard_normal(16), np.linalg.qr(rng.standard_normal((16, 5)))[0])
    y = rng.standard_normal(5)
    gal = solve_prom_step(model, basis, LeftBasisStrategy.galerkin(), "dirk3", y, 0.05)
    strategy = LeftBasisStrategy("theta_weighted", "per_iteration", inverse_theta)
    weighted = solve_prom_step(model, basis, strategy, "dirk3", y, 0.05)
    assert np.max(np.abs(gal - weighted)) < 1e-10


def test_per_timestep_freezes_left_basis():
    model = BurgersModel(64, 1e-3)
    rng = np.random.default_rng(11)
    u0 = 1.0 + 0.3 * np.sin(2 * np.pi * model.x)
    basis = ReducedBasis(u0, np.linalg.qr(rng.standard_normal((64, 3)))[0])
    system = ReducedSystem(FullEvaluator(model, basis), LeftBasisStrategy.lspg("per_timestep"))
    calls = []
    original = system.strategy.left_basis

    class Spy:
        variant = "lspg"
        frozen_per_solve = True
        is_galerkin = False

        def left_basis(self, *args):
            calls.append(1)
            return original(*args)

    system.strategy = Spy()
    y = system.solve(StageRule(np.zeros(3), 0.01), 0.05 * rng.standard_normal(3))
    assert system.newton_iterations >= 2
    assert len(calls) == 1
    assert np.all(np.isfinite(y))


# -- dense linear checks ------------------------------------------------------------------


def test_step_direction_matches_normal_equations():
    rng = np.random.default_rng(12)
    for _ in range(50):
        J = rng.standard_normal((30, 30)) + 5 * np.eye(30)
        r = rng.standard_normal(30)
        V = np.linalg.qr(rng.standard_normal((30, 4)))[0]
        assert step_direction_error_check(J, r, V) < 1e-10
        assert step_direction_error_check(J, r, V, random_spd(30, rng)) < 1e-10


def test_step_direction_exact_solution_in_span():
    J = np.diag([2.0, 3.0])
    r = -np.array([2.0, 3.0])  # J u + r = 0 at u = (1, 1)
    V = np.array([[1.0], [1.0]]) / np.sqrt(2)
    x = pg_step(J, r, V, J @ V)
    assert np.allclose(V @ x, [1.0, 1.0], atol=1e-15)
    assert step_direction_error_check(J, r, V) < 1e-15


def test_step_direction_inverse_weight_is_galerkin():
    rng = np.random.default_rng(13)
    J = random_spd(20, rng)
    r = rng.standard_normal(20)
    V = np.linalg.qr(rng.standard_normal((20, 4)))[0]
    x_pg = pg_step(J, r, V, np.linalg.inv(J) @ J @ V)
    x_gal = pg_step(J, r, V, V)
    assert np.max(np.abs(x_pg - x_gal)) < 1e-10
    assert step_direction_error_check(J, r, V, np.linalg.inv(J)) < 1e-10


def test_step_direction_singular_jacobian():
    with pytest.raises(LinearSolveError):
        step_direction_error_check(np.zeros((3, 3)), np.ones(3), np.eye(3)[:, :1])


@pytest.mark.parametrize("weighted", [False, True])
def test_nested_subspaces_do_not_increase_residual(weighted):
    rng = np.random.default_rng(14 + weighted)
    for _ in range(100):
        J = rng.standard_normal((25, 25))
        r = rng.standard_normal(25)
        V = np.linalg.qr(rng.standard_normal((25, 8)))[0]
        theta = random_spd(25, rng) if weighted else None
        values = [minimized_residual_norm(J, r, V[:, :k], theta) for k in range(1, 9)]
        assert np.all(np.diff(values) <= 1e-12 * values[0])


# -- first-order condition on a nonlinear model ---------------------------------------------


@pytest.mark.parametrize("weighted", [False, True])
def test_pg_solution_satisfies_first_order_condition(weighted):
    rng = np.random.default_rng(15)
    model = random_quadratic_model(50, density=0.02, scale=0.3, linear_shift=3.0, seed=15)
    basis = ReducedBasis(np.zeros(50), np.linalg.qr(rng.standard_normal((50, 5)))[0])
    theta = random_spd(50, rng) if weighted else np.eye(50)
    strategy = LeftBasisStrategy("theta_weighted", "per_iteration", theta)
    system = ReducedSystem(FullEvaluator(model, basis), strategy, NewtonConfig(atol=1e-12, rtol=1e-12, xtol=1e-14))
    y = system.solve(StageRule.steady(), 0.1 * rng.standard_normal(5))
    u = basis.reconstruct(y)
    g = basis.V.T @ (model.jacobian(u).T @ (theta @ model.f_eval(u)))
    assert np.linalg.norm(g) < 1e-9


# -- consistency -----------------------------------------------------------------------------


@pytest.mark.parametrize("strategy", [LeftBasisStrategy.galerkin(), LeftBasisStrategy.lspg()], ids=["galerkin", "lspg"])
def test_untruncated_basis_replays_trajectory(strategy):
    model = BurgersModel(256, 1e-3)
    u_init = 1.0 + 0.5 * np.sin(2 * np.pi * model.x)
    hdm = integrate(FullOrderSystem(model, config=NewtonConfig(xtol=1e-14)), u_init, 0.0, 2e-3, 50, "dirk2")
    S = SnapshotSet(hdm.times, hdm.states)
    # the first snapshot equals the offset, so 50 columns keep every direction
    basis = build_pod(S, u0=u_init, criterion=50, normalize=False)
    system = ReducedSystem(FullEvaluator(model, basis), strategy, NewtonConfig(atol=1e-12, rtol=1e-12, xtol=1e-14))
    rom = integrate(system, basis.project(u_init), 0.0, 2e-3, 50, "dirk2")
    assert rom.completed
    assert np.max(np.abs(basis.reconstruct(rom.states) - hdm.states)) < 1e-6
