"""Solver correctness oracles, sweep equivalence, exchange, and gradients."""

import numpy as np
import pytest

import cellbench as cb
from cellbench import (
    DomainError,
    NumericError,
    TraversalMode,
    TridiagonalSystem,
    WorkerPool,
    apply_cell_exchange,
    compute_gradients,
    lod_step,
    refresh_nonempty_list,
    thomas_solve,
)

from conftest import make_container


def random_diag_dominant(rng, n):
    sub = rng.uniform(-1.0, 1.0, n)
    sup = rng.uniform(-1.0, 1.0, n)
    sub[0] = sup[-1] = 0.0
    diag = np.abs(sub) + np.abs(sup) + rng.uniform(0.5, 2.0, n)
    signs = rng.choice([-1.0, 1.0], n)
    return TridiagonalSystem(sub, diag * signs, sup, rng.uniform(-10.0, 10.0, n))


def dense_solve(sys):
    n = sys.diag.shape[0]
    a = np.diag(sys.diag)
    if n > 1:
        a += np.diag(sys.sub[1:], -1) + np.diag(sys.sup[:-1], 1)
    return np.linalg.solve(a, sys.rhs)


# ---------------------------------------------------------------- thomas

def test_thomas_decoupled_system():
    sys = TridiagonalSystem(np.zeros(4), np.full(4, 2.0), np.zeros(4),
                            np.full(4, 4.0))
    assert thomas_solve(sys).tolist() == [2.0, 2.0, 2.0, 2.0]


def test_thomas_single_row():
    sys = TridiagonalSystem([0.0], [5.0], [0.0], [10.0])
    assert thomas_solve(sys).tolist() == [2.0]


def test_thomas_matches_dense_oracle():
    rng = np.random.default_rng(7)
    for _ in range(200):
        sys = random_diag_dominant(rng, int(rng.integers(1, 17)))
        np.testing.assert_allclose(thomas_solve(sys), dense_solve(sys),
                                   rtol=1e-12, atol=1e-12)


def test_thomas_zero_pivot_raises():
    sys = TridiagonalSystem([0.0, 1.0], [1.0, 1.0], [1.0, 0.0], [1.0, 1.0])
    with pytest.raises(NumericError):
        thomas_solve(sys)


def test_tridiagonal_shape_validation():
    with pytest.raises(DomainError):
        TridiagonalSystem([0.0], [1.0, 1.0], [0.0], [1.0])
    with pytest.raises(DomainError):
        TridiagonalSystem([], [], [], [])


# ---------------------------------------------------------------- lod step

def uniform_micro(mesh, diffusion, decay, value=38.0):
    return cb.Microenvironment(mesh, [diffusion], [decay], [value])


def random_micro(mesh, diffusion, decay, seed=3):
    micro = cb.Microenvironment(mesh, [diffusion], [decay])
    rng = np.random.default_rng(seed)
    micro.densities[0] = rng.uniform(0.0, 50.0, mesh.voxel_count)
    return micro


def test_decay_only_matches_closed_form(pool2):
    mesh = cb.CartesianMesh(4, 4, 4)
    micro = uniform_micro(mesh, diffusion=0.0, decay=0.7, value=38.0)
    dt, steps = 0.05, 10
    for _ in range(steps):
        lod_step(micro, mesh, dt, TraversalMode.OUTER_LOOP, pool2)
    expected = 38.0 / (1.0 + dt * 0.7 / 3.0) ** (3 * steps)
    np.testing.assert_allclose(micro.densities[0], expected, rtol=1e-14)


def test_no_decay_conserves_mass(pool2):
    mesh = cb.CartesianMesh(8, 8, 8)
    micro = random_micro(mesh, diffusion=100000.0, decay=0.0)
    mass0 = micro.densities[0].sum()
    for _ in range(100):
        lod_step(micro, mesh, 0.1, TraversalMode.COLLAPSED, pool2)
    assert micro.densities[0].sum() == pytest.approx(mass0, rel=1e-10)
    micro.check_state()


def test_uniform_field_is_steady_to_roundoff(pool2):
    # no-flux boundaries: a uniform field is a fixed point of pure diffusion;
    # the factored solve reproduces it to roundoff, not bit-exactly
    mesh = cb.CartesianMesh(5, 4, 3)
    micro = uniform_micro(mesh, diffusion=80000.0, decay=0.0)
    for _ in range(3):
        lod_step(micro, mesh, 0.1, TraversalMode.OUTER_LOOP, pool2)
    np.testing.assert_allclose(micro.densities[0], 38.0, rtol=0.0, atol=1e-11)


def test_field_stays_nonnegative(pool2):
    mesh = cb.CartesianMesh(6, 6, 6)
    micro = random_micro(mesh, diffusion=50000.0, decay=2.0, seed=11)
    micro.densities[0, ::7] = 0.0  # plant hard zeros next to large values
    for _ in range(50):
        lod_step(micro, mesh, 0.2, TraversalMode.OUTER_LOOP, pool2)
    micro.check_state()
    assert micro.densities[0].min() >= 0.0


def test_lod_rejects_bad_dt(pool2):
    mesh = cb.CartesianMesh(3, 3, 3)
    micro = uniform_micro(mesh, 100.0, 0.0)
    with pytest.raises(DomainError):
        lod_step(micro, mesh, 0.0, TraversalMode.OUTER_LOOP, pool2)


def test_traversal_and_worker_count_do_not_change_the_field():
    mesh = cb.CartesianMesh(6, 5, 4)
    runs = []
    for mode, workers in [
        (TraversalMode.OUTER_LOOP, 1),
        (TraversalMode.OUTER_LOOP, 4),
        (TraversalMode.COLLAPSED, 1),
        (TraversalMode.COLLAPSED, 3),
    ]:
        micro = random_micro(mesh, diffusion=90000.0, decay=0.4)
        with WorkerPool(workers) as pool:
            for _ in range(5):
                lod_step(micro, mesh, 0.1, mode, pool)
        runs.append(micro.densities.copy())
    for other in runs[1:]:
        assert np.array_equal(runs[0], other)


def test_sweep_chunk_granularity_contract(pool2):
    # OuterLoop schedules outermost-axis slabs; Collapsed schedules grid lines.
    mesh = cb.CartesianMesh(3, 4, 5)
    micro = uniform_micro(mesh, 1000.0, 0.1)
    outer = lod_step(micro, mesh, 0.1, TraversalMode.OUTER_LOOP, pool2)
    assert [r.schedulable_chunks for r in outer] == [5, 5, 4]
    collapsed = lod_step(micro, mesh, 0.1, TraversalMode.COLLAPSED, pool2)
    assert [r.schedulable_chunks for r in collapsed] == [20, 15, 12]
    # both traverse every grid line of each sweep exactly once
    assert [r.total_iterations for r in outer] == [5, 5, 4]
    assert [r.total_iterations for r in collapsed] == [20, 15, 12]


def test_degenerate_single_voxel_axis(pool2):
    mesh = cb.CartesianMesh(1, 4, 4)
    micro = random_micro(mesh, diffusion=70000.0, decay=0.0)
    mass0 = micro.densities[0].sum()
    for _ in range(20):
        lod_step(micro, mesh, 0.1, TraversalMode.COLLAPSED, pool2)
    assert micro.densities[0].sum() == pytest.approx(mass0, rel=1e-12)


# ---------------------------------------------------------------- non-empty list

def test_fused_refresh_matches_standalone(pool2):
    mesh = cb.CartesianMesh(4, 4, 4)
    micro = uniform_micro(mesh, 1000.0, 0.1)
    cont = make_container(mesh, [(10.0, 10.0, 10.0), (70.0, 70.0, 70.0),
                                 (30.0, 50.0, 10.0)])
    cont.nonempty_voxels = []  # stale on purpose
    lod_step(micro, mesh, 0.1, TraversalMode.OUTER_LOOP, pool2, container=cont)
    oracle = sorted(v for v, ids in cont.agent.items() if ids)
    assert cont.nonempty_voxels == oracle

    cont.nonempty_voxels = [999]
    assert refresh_nonempty_list(cont) == oracle
    assert cont.nonempty_voxels == oracle


def test_nonempty_list_is_ascending_regardless_of_insertion_order(small_mesh):
    cont = cb.CellContainer(small_mesh)
    cont.agent = {50: [0], 3: [1]}
    assert refresh_nonempty_list(cont) == [3, 50]


# ---------------------------------------------------------------- exchange

def exchange_fixture(value=38.0):
    mesh = cb.CartesianMesh(4, 4, 4)
    micro = uniform_micro(mesh, 1000.0, 0.0, value)
    cont = make_container(mesh, [
        (10.0, 10.0, 10.0), (12.0, 10.0, 10.0), (50.0, 30.0, 10.0),
    ], radius=8.0)
    return mesh, micro, cont


def test_exchange_noop_without_rates():
    _, micro, cont = exchange_fixture()
    before = micro.densities.copy()
    apply_cell_exchange(micro, cont, 0.01, secretion=0.0, uptake=0.0,
                        saturation=38.0)
    assert np.array_equal(micro.densities, before)


def test_exchange_saturated_secretion_is_a_fixed_point():
    _, micro, cont = exchange_fixture(value=38.0)
    apply_cell_exchange(micro, cont, 0.01, secretion=4.2, uptake=0.0,
                        saturation=38.0)
    np.testing.assert_allclose(micro.densities[0], 38.0, rtol=1e-14)


def test_exchange_uptake_decreases_and_stays_nonnegative():
    _, micro, cont = exchange_fixture(value=38.0)
    occupied = sorted(cont.nonempty_voxels)
    for _ in range(500):
        apply_cell_exchange(micro, cont, 0.05, secretion=0.0, uptake=40.0,
                            saturation=38.0)
    assert micro.densities[0][occupied].max() < 38.0
    assert micro.densities[0].min() >= 0.0
    untouched = np.setdiff1d(np.arange(64), occupied)
    assert np.all(micro.densities[0][untouched] == 38.0)


def test_exchange_secretion_moves_toward_saturation():
    _, micro, cont = exchange_fixture(value=1.0)
    v = cont.nonempty_voxels[0]
    apply_cell_exchange(micro, cont, 0.1, secretion=5.0, uptake=0.0,
                        saturation=38.0)
    assert 1.0 < micro.densities[0][v] < 38.0


def test_exchange_is_storage_order_independent():
    mesh = cb.CartesianMesh(4, 4, 4)
    results = []
    for reverse in (False, True):
        micro = uniform_micro(mesh, 1000.0, 0.0, 20.0)
        cont = cb.CellContainer(mesh)
        # two different-sized cells in one voxel: application order matters,
        # so the ascending-id rule is what keeps layouts equivalent
        cont.new_cell([10.0, 10.0, 10.0], radius=8.0)
        cont.new_cell([12.0, 11.0, 10.0], radius=6.0)
        if reverse:
            cont.cells.reverse()
        cb.rebin_cells(cont)
        apply_cell_exchange(micro, cont, 0.05, secretion=3.0, uptake=7.0,
                            saturation=38.0)
        results.append(micro.densities.copy())
    assert np.array_equal(results[0], results[1])


def test_exchange_parallel_matches_serial(pool2):
    mesh = cb.CartesianMesh(4, 4, 4)
    fields = []
    for pool in (None, pool2):
        micro = uniform_micro(mesh, 1000.0, 0.0, 25.0)
        cont = make_container(mesh, [
            (10.0, 10.0, 10.0), (30.0, 30.0, 30.0), (50.0, 50.0, 50.0),
            (70.0, 10.0, 50.0),
        ])
        record = apply_cell_exchange(micro, cont, 0.02, secretion=2.0,
                                     uptake=3.0, saturation=38.0, pool=pool)
        fields.append(micro.densities.copy())
    assert np.array_equal(fields[0], fields[1])
    assert record is not None and record.items == 4


def test_exchange_rejects_nonpositive_denominator():
    _, micro, cont = exchange_fixture()
    with pytest.raises(DomainError):
        apply_cell_exchange(micro, cont, 1.0, secretion=0.0, uptake=-8.0,
                            saturation=38.0)
    with pytest.raises(DomainError):
        apply_cell_exchange(micro, cont, 0.0, secretion=1.0, uptake=0.0,
                            saturation=38.0)


def test_exchange_empty_container(pool2):
    mesh = cb.CartesianMesh(3, 3, 3)
    micro = uniform_micro(mesh, 1000.0, 0.0)
    cont = cb.CellContainer(mesh)
    before = micro.densities.copy()
    apply_cell_exchange(micro, cont, 0.1, 1.0, 1.0, 38.0)
    apply_cell_exchange(micro, cont, 0.1, 1.0, 1.0, 38.0, pool=pool2)
    assert np.array_equal(micro.densities, before)


# ---------------------------------------------------------------- gradients

def test_gradient_of_uniform_field_is_zero(pool2):
    mesh = cb.CartesianMesh(5, 5, 5)
    micro = uniform_micro(mesh, 1000.0, 0.0)
    compute_gradients(micro, mesh, TraversalMode.OUTER_LOOP, pool2)
    assert np.all(micro.gradients == 0.0)


def test_gradient_of_linear_field_is_exact_interior(pool2):
    mesh = cb.CartesianMesh(5, 4, 3)
    micro = cb.Microenvironment(mesh, [1000.0], [0.0])
    g = micro.grid_view(0)
    for iz in range(3):
        for iy in range(4):
            for ix in range(5):
                g[iz, iy, ix] = 2.0 * (10.0 + 20.0 * ix)  # rho = 2x
    compute_gradients(micro, mesh, TraversalMode.COLLAPSED, pool2)
    grads = micro.gradients[0].reshape(3, 4, 5, 3)
    assert np.all(grads[:, :, 1:-1, 0] == 2.0)  # central difference is exact
    assert np.all(grads[:, :, 0, 0] == 0.0)  # boundary faces report zero
    assert np.all(grads[:, :, -1, 0] == 0.0)
    assert np.all(grads[..., 1] == 0.0)
    assert np.all(grads[..., 2] == 0.0)


def test_gradient_modes_and_workers_agree_bitwise():
    mesh = cb.CartesianMesh(6, 5, 4)
    outputs = []
    for mode, workers in [
        (TraversalMode.OUTER_LOOP, 1),
        (TraversalMode.OUTER_LOOP, 3),
        (TraversalMode.COLLAPSED, 1),
        (TraversalMode.COLLAPSED, 4),
    ]:
        micro = random_micro(mesh, 1000.0, 0.0, seed=9)
        with WorkerPool(workers) as pool:
            records = compute_gradients(micro, mesh, mode, pool)
        outputs.append(micro.gradients.copy())
    for other in outputs[1:]:
        assert np.array_equal(outputs[0], other)
    assert records[0].schedulable_chunks == 5 * 4  # collapsed: one (z,y) row each


def test_gradient_chunk_granularity(pool2):
    mesh = cb.CartesianMesh(3, 4, 5)
    micro = uniform_micro(mesh, 1000.0, 0.0)
    outer = compute_gradients(micro, mesh, TraversalMode.OUTER_LOOP, pool2)
    collapsed = compute_gradients(micro, mesh, TraversalMode.COLLAPSED, pool2)
    assert outer[0].schedulable_chunks == 5
    assert collapsed[0].schedulable_chunks == 20
