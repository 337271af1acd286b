import math

import numpy as np
import pytest

import glauberlab as gl
from glauberlab.errors import (
    InvalidArgumentError,
    MemoryGuardError,
    PrecisionLossError,
)
from glauberlab.hierarchy import flat_dimension, max_abs_by_order

from helpers import assert_all_symmetric, brute_force_gf, lagrange_eval, rel_err


def small_random_hierarchy(n_sites=4, n_max=2, seed=0, envelope=1.0):
    grid = gl.make_grid(n_sites, float(n_sites))
    rng = np.random.default_rng(seed)
    return gl.random_ruelle_hierarchy(grid, n_max, rng, envelope=envelope), rng


def test_scale_params_validation():
    gl.ScaleParams(0.5, 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        gl.ScaleParams(1.0, 0.5, 1.0)
    with pytest.raises(InvalidArgumentError):
        gl.ScaleParams(0.5, 1.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        gl.ScaleParams(0.5, 1.0, 1.0, epsilon=-0.1)


def test_exponential_hierarchy_zero_density():
    grid = gl.make_grid(8, 8.0)
    k = gl.exponential_hierarchy(gl.zero_field(grid), 3)
    assert float(k.tensors[0]) == 1.0
    for n in range(1, 4):
        assert np.all(k.tensors[n] == 0.0)


def test_exponential_hierarchy_product_entries():
    grid = gl.make_grid(8, 8.0)
    k = gl.exponential_hierarchy(gl.constant_field(grid, 0.3), 2)
    assert np.allclose(k.tensors[2], 0.09, rtol=1e-14)
    rng = np.random.default_rng(1)
    rho = gl.GridField(grid, rng.uniform(0.1, 1.0, 8))
    k3 = gl.exponential_hierarchy(rho, 3)
    for a, b, c in [(0, 1, 2), (5, 5, 7), (3, 0, 6)]:
        assert math.isclose(
            k3.tensors[3][a, b, c],
            rho.values[a] * rho.values[b] * rho.values[c],
            rel_tol=1e-14,
        )


def test_memory_guard():
    grid = gl.make_grid(10, 10.0)
    with pytest.raises(MemoryGuardError):
        gl.zero_hierarchy(grid, 8)  # 10^8 entries
    with pytest.raises(MemoryGuardError):
        gl.exponential_hierarchy(gl.constant_field(grid, 1.0), 8)


def test_evaluate_gf_constant_term():
    k, rng = small_random_hierarchy(seed=2)
    theta = gl.zero_field(k.grid)
    assert gl.evaluate_gf(k, theta) == float(k.tensors[0])


def test_evaluate_gf_truncated_exponential_identity():
    grid = gl.make_grid(8, 8.0)
    k = gl.exponential_hierarchy(gl.constant_field(grid, 0.3), 3)
    theta = gl.constant_field(grid, 0.25)
    u = 0.3 * 0.25 * 8.0
    expected = sum(u**n / math.factorial(n) for n in range(4))
    assert math.isclose(gl.evaluate_gf(k, theta), expected, rel_tol=1e-13)


def test_evaluate_gf_matches_brute_force():
    k, rng = small_random_hierarchy(n_sites=4, n_max=2, seed=3)
    for _ in range(5):
        theta = gl.GridField(k.grid, rng.uniform(-1.0, 1.0, 4))
        assert rel_err(gl.evaluate_gf(k, theta), brute_force_gf(k, theta.values)) <= 1e-12


def test_evaluate_gf_is_degree_nmax_polynomial():
    k, rng = small_random_hierarchy(n_sites=4, n_max=3, seed=4)
    theta = gl.GridField(k.grid, rng.uniform(-0.8, 0.8, 4))
    nodes = [1.0, 2.0, 3.0, 4.0]
    values = [
        gl.evaluate_gf(k, gl.GridField(k.grid, s * theta.values)) for s in nodes
    ]
    for probe in (0.31, -1.2, 2.7):
        direct = gl.evaluate_gf(k, gl.GridField(k.grid, probe * theta.values))
        assert rel_err(direct, lagrange_eval(nodes, values, probe)) <= 1e-9


def test_variational_derivative_at_zero_is_first_tensor():
    k, _ = small_random_hierarchy(n_sites=6, n_max=3, seed=5)
    theta = gl.zero_field(k.grid)
    for x in range(6):
        assert gl.variational_derivative(k, theta, x) == k.tensors[1][x]


def test_variational_derivative_matches_finite_difference():
    k, rng = small_random_hierarchy(n_sites=4, n_max=2, seed=6)
    theta = gl.GridField(k.grid, rng.uniform(-0.5, 0.5, 4))
    h = 1e-5
    for x in range(4):
        bumped = theta.values.copy()
        bumped[x] += h
        dipped = theta.values.copy()
        dipped[x] -= h
        fd = (
            gl.evaluate_gf(k, gl.GridField(k.grid, bumped))
            - gl.evaluate_gf(k, gl.GridField(k.grid, dipped))
        ) / (2 * h * k.grid.spacing)
        assert rel_err(gl.variational_derivative(k, theta, x), fd) <= 1e-8


def test_variational_derivative_exponential_tail():
    # For a product hierarchy, deltaB(theta;x) - B(theta) rho(x) is exactly
    # the dropped top-order term rho(x) u^n_max / n_max!.
    grid = gl.make_grid(8, 8.0)
    rng = np.random.default_rng(7)
    rho = gl.GridField(grid, rng.uniform(0.1, 0.5, 8))
    k = gl.exponential_hierarchy(rho, 6)
    theta = gl.GridField(grid, rng.uniform(-0.05, 0.05, 8))
    u = float(np.sum(rho.values * theta.values)) * grid.spacing
    b_val = gl.evaluate_gf(k, theta)
    for x in range(8):
        tail = abs(rho.values[x]) * abs(u) ** 6 / math.factorial(6)
        diff = abs(gl.variational_derivative(k, theta, x) - b_val * rho.values[x])
        assert diff <= tail * (1 + 1e-9) + 1e-15


def test_substitute_affine_identity():
    k, _ = small_random_hierarchy(n_sites=4, n_max=3, seed=8)
    out = gl.substitute_affine(k, gl.constant_field(k.grid, 1.0), gl.zero_field(k.grid))
    for a, b in zip(out.tensors, k.tensors):
        assert np.array_equal(a, b)


def test_substitute_affine_zero_scale():
    k, rng = small_random_hierarchy(n_sites=4, n_max=2, seed=9)
    b = gl.GridField(k.grid, rng.uniform(-0.5, 0.5, 4))
    out = gl.substitute_affine(k, gl.zero_field(k.grid), b)
    assert rel_err(float(out.tensors[0]), gl.evaluate_gf(k, b)) <= 1e-12
    for n in range(1, 3):
        assert np.all(out.tensors[n] == 0.0)


def test_substitute_affine_evaluation_consistency():
    k, rng = small_random_hierarchy(n_sites=4, n_max=2, seed=10)
    a = gl.GridField(k.grid, rng.uniform(0.2, 1.0, 4))
    b = gl.GridField(k.grid, rng.uniform(-0.4, 0.4, 4))
    out = gl.substitute_affine(k, a, b)
    assert_all_symmetric(out)
    for _ in range(10):
        theta = gl.GridField(k.grid, rng.uniform(-1.0, 1.0, 4))
        shifted = gl.GridField(k.grid, a.values * theta.values + b.values)
        assert rel_err(gl.evaluate_gf(out, theta), gl.evaluate_gf(k, shifted)) <= 1e-10


def test_taylor_coefficient_fd_order_zero():
    k, _ = small_random_hierarchy(seed=11)
    assert gl.taylor_coefficient_fd(k, 0, []) == float(k.tensors[0])


def test_taylor_coefficient_fd_exponential_first_order():
    grid = gl.make_grid(8, 8.0)
    rng = np.random.default_rng(12)
    rho = gl.GridField(grid, rng.uniform(0.1, 1.0, 8))
    k = gl.exponential_hierarchy(rho, 3)
    for x in (0, 3, 7):
        assert abs(gl.taylor_coefficient_fd(k, 1, [x]) - rho.values[x]) <= 1e-7


def test_taylor_coefficient_fd_second_order():
    k, _ = small_random_hierarchy(n_sites=4, n_max=2, seed=13)
    for pair in [(0, 1), (2, 2), (3, 1)]:
        est = gl.taylor_coefficient_fd(k, 2, pair)
        assert abs(est - k.tensors[2][pair]) <= 1e-6


def test_taylor_coefficient_fd_flags_step_failure():
    # On a cubic functional a first-order estimate at a huge step carries
    # an O(step^2) truncation error that the step-doubling residual sees.
    k, _ = small_random_hierarchy(n_sites=4, n_max=3, seed=14)
    with pytest.raises(PrecisionLossError):
        gl.taylor_coefficient_fd(k, 1, [2], step=0.7)


def test_scale_norm_examples_and_oracle():
    grid = gl.make_grid(8, 8.0)
    unit = gl.zero_hierarchy(grid, 3)
    unit.tensors[0] = np.array(1.0)
    for alpha in (0.1, 1.0, 3.0):
        assert gl.scale_norm(unit, alpha) == 1.0
    c = 0.6
    k = gl.exponential_hierarchy(gl.constant_field(grid, c), 3)
    for alpha in (0.5, 1.0, 2.5):
        assert math.isclose(
            gl.scale_norm(k, alpha), max(1.0, (alpha * c) ** 3), rel_tol=1e-12
        )
    rand, _ = small_random_hierarchy(n_sites=4, n_max=3, seed=15)
    alpha = 1.3
    oracle = max(
        alpha**n * max(abs(float(v)) for v in np.ravel(t))
        for n, t in enumerate(rand.tensors)
    )
    assert math.isclose(gl.scale_norm(rand, alpha), oracle, rel_tol=1e-14)


def test_scale_norm_monotone_in_alpha():
    rand, _ = small_random_hierarchy(n_sites=4, n_max=3, seed=16)
    alphas = [0.2, 0.5, 0.9, 1.4, 2.0]
    norms = [gl.scale_norm(rand, a) for a in alphas]
    assert all(n1 <= n2 + 1e-15 for n1, n2 in zip(norms, norms[1:]))


def test_ruelle_margin_examples_and_oracle():
    grid = gl.make_grid(8, 8.0)
    z = 0.7
    saturated = gl.exponential_hierarchy(gl.constant_field(grid, z), 3)
    assert abs(gl.ruelle_margin(saturated, z) - 1.0) <= 1e-12
    half = gl.exponential_hierarchy(gl.constant_field(grid, z / 2), 3)
    assert gl.ruelle_margin(half, z) == 1.0  # attained at order 0
    rand, _ = small_random_hierarchy(n_sites=4, n_max=3, seed=17)
    oracle = max(
        z**-n * max(abs(float(v)) for v in np.ravel(t))
        for n, t in enumerate(rand.tensors)
    )
    assert math.isclose(gl.ruelle_margin(rand, z), oracle, rel_tol=1e-14)


def test_gf_upper_bound_examples_and_oracle():
    grid = gl.make_grid(8, 8.0)
    unit = gl.zero_hierarchy(grid, 3)
    unit.tensors[0] = np.array(1.0)
    assert gl.gf_upper_bound(unit, 2.0) == 1.0
    c, r = 0.4, 1.5
    k = gl.exponential_hierarchy(gl.constant_field(grid, c), 3)
    expected = sum((c * r) ** n / math.factorial(n) for n in range(4))
    assert math.isclose(gl.gf_upper_bound(k, r), expected, rel_tol=1e-12)
    rand, _ = small_random_hierarchy(n_sites=4, n_max=3, seed=18)
    oracle = sum(
        max(abs(float(v)) for v in np.ravel(t)) * r**n / math.factorial(n)
        for n, t in enumerate(rand.tensors)
    )
    assert math.isclose(gl.gf_upper_bound(rand, r), oracle, rel_tol=1e-13)


def test_cauchy_estimate_check_worked_example():
    grid = gl.make_grid(8, 8.0)
    k = gl.zero_hierarchy(grid, 1)
    k.tensors[0] = np.array(1.0)
    k.tensors[1] = np.ones(8)
    # gf_upper_bound(k, 1) = 1 + 1 = 2 and max|k_1| = 1 <= 2/1
    assert gl.cauchy_estimate_check(k, 1, 1.0)


def test_cauchy_estimate_check_zero_hierarchy():
    k = gl.zero_hierarchy(gl.make_grid(8, 8.0), 2)
    assert gl.cauchy_estimate_check(k, 1, 0.5)
    assert gl.cauchy_estimate_check(k, 2, 2.0)


def test_cauchy_estimate_check_random_sweep():
    grid = gl.make_grid(4, 4.0)
    rng = np.random.default_rng(19)
    for case in range(200):
        k = gl.random_ruelle_hierarchy(grid, 3, rng, envelope=rng.uniform(0.2, 2.0))
        for n in range(1, 4):
            for r in (0.5, 1.0, 2.0):
                assert gl.cauchy_estimate_check(k, n, r)


def test_axpy_flatten_unflatten_symmetrize():
    k1, rng = small_random_hierarchy(n_sites=4, n_max=2, seed=20)
    k2 = gl.random_ruelle_hierarchy(k1.grid, 2, rng)
    out = gl.axpy(-1.3, k1, k2)
    for n in range(3):
        assert np.allclose(out.tensors[n], -1.3 * k1.tensors[n] + k2.tensors[n],
                           rtol=0, atol=0)
    flat = gl.flatten(k1)
    assert flat.shape == (flat_dimension(k1.grid, 2),)
    back = gl.unflatten(k1.grid, 2, flat)
    for n in range(3):
        assert np.array_equal(back.tensors[n], k1.tensors[n])
    with pytest.raises(InvalidArgumentError):
        gl.unflatten(k1.grid, 2, flat[:-1])

    raw = gl.unflatten(k1.grid, 2, rng.uniform(-1, 1, flat.shape[0]))
    sym = gl.symmetrize(raw)
    assert_all_symmetric(sym)
    again = gl.symmetrize(sym)
    for n in range(3):
        assert np.allclose(sym.tensors[n], again.tensors[n], rtol=0, atol=1e-15)

    diff = gl.max_abs_difference(k1, k2)
    oracle = max(
        np.max(np.abs(a - b)) for a, b in zip(k1.tensors, k2.tensors)
    )
    assert diff == oracle


def test_snapshot_roundtrip_is_exact(tmp_path):
    k, _ = small_random_hierarchy(n_sites=4, n_max=2, seed=21)
    path = tmp_path / "snapshot.txt"
    gl.save_hierarchy(k, path)
    loaded = gl.load_hierarchy(path)
    assert loaded.grid == k.grid
    assert np.array_equal(gl.flatten(loaded), gl.flatten(k))


def test_max_abs_by_order():
    k, _ = small_random_hierarchy(n_sites=4, n_max=2, seed=22)
    values = max_abs_by_order(k)
    assert values == [float(np.max(np.abs(t))) for t in k.tensors]


def test_grid_and_index_error_paths():
    k, _ = small_random_hierarchy(n_sites=4, n_max=2, seed=23)
    other = gl.constant_field(gl.make_grid(8, 8.0), 0.1)
    with pytest.raises(gl.GridMismatchError):
        gl.evaluate_gf(k, other)
    with pytest.raises(gl.GridMismatchError):
        gl.substitute_affine(k, other, other)
    with pytest.raises(InvalidArgumentError):
        gl.variational_derivative(k, gl.zero_field(k.grid), 4)
    with pytest.raises(InvalidArgumentError):
        gl.taylor_coefficient_fd(k, 3, [0, 1, 2])  # order above n_max
    mismatched = gl.zero_hierarchy(k.grid, 1)
    with pytest.raises(InvalidArgumentError):
        gl.max_abs_difference(k, mismatched)
