import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import nnls as scipy_nnls

from pgrom.core import StageRule
from pgrom.errors import ConfigurationError, InapplicableError, NonConvergenceError, SampleCorruptionError
from pgrom.hyper import (
    EcswSampleSet,
    HyperEvaluator,
    HyperreducedSystem,
    assemble_training,
    hyperreduced_residual,
    lawson_hanson,
    nnls_solve,
    train_ecsw,
)
from pgrom.models import BurgersModel, LinearModel
from pgrom.rom import LeftBasisStrategy, ReducedBasis, SnapshotSet, build_pod, pg_reduced_system
from pgrom.timeint import FullOrderSystem, integrate


@pytest.fixture(scope="module")
def burgers_setup():
    model = BurgersModel(256, 1e-3)
    u_init = 1.0 + 0.5 * np.sin(2 * np.pi * model.x)
    traj = integrate(FullOrderSystem(model), u_init, 0.0, 5e-3, 60, "dirk2", record_every=2)
    snaps = SnapshotSet(traj.times, traj.states)
    basis = build_pod(snaps, u0=u_init, criterion=0.9999)
    return model, basis, snaps


# -- NNLS -------------------------------------------------------------------


def test_nnls_identity_design():
    x, rnorm, _ = lawson_hanson(np.eye(2), np.array([3.0, -1.0]))
    assert np.array_equal(x, [3.0, 0.0])
    assert rnorm == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_nnls_matches_scipy_at_full_optimality(seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((15, 10))
    b = rng.standard_normal(15)
    x, rnorm, _ = lawson_hanson(G, b)
    x_ref, r_ref = scipy_nnls(G, b)
    assert np.all(x >= 0)
    assert rnorm == pytest.approx(r_ref, rel=1e-9, abs=1e-12)
    assert np.max(np.abs(x - x_ref)) < 1e-8


def test_nnls_recovers_sparse_nonnegative_solution():
    rng = np.random.default_rng(1)
    G = rng.standard_normal((20, 50))
    x_true = np.zeros(50)
    x_true[[3, 17, 40]] = [1.0, 0.5, 2.0]
    b = G @ x_true
    x, rnorm, _ = lawson_hanson(G, b)
    assert rnorm <= 1e-10
    assert np.all(x >= 0)


def test_nnls_ties_pick_lowest_index():
    G = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    x, _, it = lawson_hanson(G, np.array([1.0, 0.0]))
    assert np.array_equal(x, [1.0, 0.0, 0.0]) and it == 1


def test_nnls_early_exit_respects_tolerance():
    rng = np.random.default_rng(2)
    G = np.abs(rng.standard_normal((40, 200)))
    b = G.sum(axis=1)
    for eps in (0.3, 0.1, 0.01):
        x, rnorm, _ = lawson_hanson(G, b, eps)
        assert rnorm <= eps * np.linalg.norm(b)
        assert np.all(x >= 0)


def test_nnls_iteration_cap_reports_residual():
    rng = np.random.default_rng(3)
    G = np.abs(rng.standard_normal((30, 60)))
    b = G.sum(axis=1)
    with pytest.raises(NonConvergenceError) as info:
        lawson_hanson(G, b, 1e-12, max_iter=2)
    assert info.value.residual_norm > 0 and info.value.iterations == 2


def test_nnls_solve_validates_epsilon():
    G = np.eye(3)
    for eps in (0.0, 1.0, -0.1):
        with pytest.raises(ConfigurationError):
            nnls_solve(G, np.ones(3), eps)


def test_sample_size_grows_as_tolerance_shrinks(burgers_setup):
    model, basis, snaps = burgers_setup
    system = assemble_training(model, basis, LeftBasisStrategy.lspg(), snaps)
    sizes = [len(nnls_solve(system.G, system.b, eps)) for eps in (0.1, 0.03, 0.01, 0.003)]
    assert sizes == sorted(sizes)


# -- training assembly -----------------------------------------------------------


def test_single_snapshot_three_cells_exact_projection():
    model = LinearModel(np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]]), np.array([1.0, 0.0, 1.0]))
    V = np.eye(3)[:, :2]
    basis = ReducedBasis(np.zeros(3), V)
    u = np.array([0.3, -0.2, 0.0])
    system = assemble_training(model, basis, LeftBasisStrategy.galerkin(), u[:, None])
    f = model.f_eval(u)
    udot = -V @ (V.T @ f)
    n = basis.n
    assert np.allclose(system.b[:n], V.T @ f, atol=1e-15)
    assert np.allclose(system.b[:n] + system.b[n:], V.T @ (f + udot), atol=1e-15)
    assert system.G.shape == (2 * n, 3)


def test_training_identity_on_burgers(burgers_setup):
    model, basis, snaps = burgers_setup
    for strategy in (LeftBasisStrategy.galerkin(), LeftBasisStrategy.lspg()):
        system = assemble_training(model, basis, strategy, snaps)
        assert system.identity_error() <= 1e-12 * max(1.0, np.max(np.abs(system.b)))
        assert system.G.shape == (2 * basis.n * len(snaps), model.cell_count)


def test_training_needs_snapshots(burgers_setup):
    model, basis, _ = burgers_setup
    with pytest.raises(ConfigurationError):
        assemble_training(model, basis, None, np.zeros((model.dim, 0)))


def test_training_subsampling_every_tenth(burgers_setup):
    _, _, snaps = burgers_setup
    sub = snaps.subsample(10)
    assert len(sub) == (len(snaps) + 9) // 10
    assert np.array_equal(sub.times, snaps.times[::10])


# -- hyperreduced evaluation -------------------------------------------------------


@pytest.mark.parametrize("variant", ["galerkin", "lspg"])
def test_full_sample_reproduces_projection(burgers_setup, variant):
    model, basis, _ = burgers_setup
    strategy = LeftBasisStrategy.galerkin() if variant == "galerkin" else LeftBasisStrategy.lspg("per_iteration")
    full = EcswSampleSet.full(model.cell_count, basis.provenance_hash())
    rng = np.random.default_rng(4)
    for _ in range(5):
        y = 0.1 * rng.standard_normal(basis.n)
        rule = StageRule(rng.standard_normal(basis.n) * 0.1, 0.01)
        ref = pg_reduced_system(model, basis, strategy, y, rule=rule)[0]
        hyper = hyperreduced_residual(model, basis, strategy, full, y, rule=rule)
        assert np.max(np.abs(hyper - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_trained_sample_meets_tolerance_and_matches_training_rows(burgers_setup):
    model, basis, snaps = burgers_setup
    strategy = LeftBasisStrategy.lspg()
    system = assemble_training(model, basis, strategy, snaps)
    sample = train_ecsw(model, basis, strategy, snaps, 1e-2)
    assert sample.residual <= 1e-2
    assert np.all(sample.weights > 0)
    xi = np.zeros(model.cell_count)
    xi[sample.cells] = sample.weights
    assert np.linalg.norm(system.G @ xi - system.b) <= 1e-2 * np.linalg.norm(system.b) * (1 + 1e-12)
    # the online f-part at a training state equals the corresponding training rows
    n = basis.n
    for s in (0, len(snaps) // 2, len(snaps) - 1):
        y = basis.project(snaps.states[:, s])
        online = hyperreduced_residual(model, basis, strategy, sample, y, rule=StageRule.steady())
        assert np.allclose(online, system.G[2 * n * s : 2 * n * s + n] @ xi, rtol=1e-10, atol=1e-12)


def test_reduced_mesh_locality(burgers_setup):
    model, basis, snaps = burgers_setup
    sample = train_ecsw(model, basis, LeftBasisStrategy.lspg(), snaps, 1e-2)
    evaluator = HyperEvaluator(model, basis, sample)
    evaluator.evaluate(np.zeros(basis.n), StageRule(np.zeros(basis.n), 0.01))
    restricted = evaluator.restricted
    assert restricted.cells_evaluated == set(sample.cells.tolist())
    expected_mesh = np.unique(model.stencil_of(sample.cells))
    assert np.array_equal(restricted.mesh_nodes, expected_mesh)
    assert len(sample) / model.cell_count < 0.1


def test_empty_and_corrupt_samples_raise(burgers_setup):
    model, basis, _ = burgers_setup
    y = np.zeros(basis.n)
    with pytest.raises(SampleCorruptionError):
        hyperreduced_residual(model, basis, None, EcswSampleSet([], [], 0.0, 0.01), y)
    with pytest.raises(SampleCorruptionError):
        hyperreduced_residual(model, basis, None, EcswSampleSet([0, model.cell_count], [1.0, 1.0], 0.0, 0.01), y)
    with pytest.raises(SampleCorruptionError):
        hyperreduced_residual(model, basis, None, EcswSampleSet([0, 1], [1.0, 0.0], 0.0, 0.01), y)
    with pytest.raises(SampleCorruptionError):
        hyperreduced_residual(model, basis, None, EcswSampleSet.full(model.cell_count, "not-this-basis"), y)


def test_sample_set_roundtrip(tmp_path, burgers_setup):
    model, basis, snaps = burgers_setup
    sample = train_ecsw(model, basis, LeftBasisStrategy.lspg(), snaps, 1e-2)
    sample.save(tmp_path / "s.json")
    loaded = EcswSampleSet.load(tmp_path / "s.json")
    assert np.array_equal(loaded.cells, sample.cells)
    assert loaded.weights.tobytes() == sample.weights.tobytes()
    assert loaded.basis_hash == basis.provenance_hash()
    (tmp_path / "bad.json").write_text("{}")
    with pytest.raises(SampleCorruptionError):
        EcswSampleSet.load(tmp_path / "bad.json")


def test_theta_weighted_cannot_be_hyperreduced(burgers_setup):
    model, basis, _ = burgers_setup
    strategy = LeftBasisStrategy("theta_weighted", "per_iteration", np.eye(model.dim))
    with pytest.raises(InapplicableError):
        HyperreducedSystem(model, basis, EcswSampleSet.full(model.cell_count), strategy)


def test_hprom_tracks_prom_on_training_window(burgers_setup):
    from pgrom.rom import FullEvaluator, ReducedSystem

    model, basis, snaps = burgers_setup
    strategy = LeftBasisStrategy.lspg()
    sample = train_ecsw(model, basis, strategy, snaps, 1e-2)
    y0 = basis.project(snaps.states[:, 0])
    prom = integrate(ReducedSystem(FullEvaluator(model, basis), strategy), y0, 0.0, 5e-3, 60, "dirk2", record_every=2)
    hprom = integrate(HyperreducedSystem(model, basis, sample, strategy), y0, 0.0, 5e-3, 60, "dirk2", record_every=2)
    assert prom.completed and hprom.completed
    up, uh = basis.reconstruct(prom.states), basis.reconstruct(hprom.states)
    assert np.linalg.norm(uh - up) / np.linalg.norm(up - basis.u0[:, None]) < 0.05
