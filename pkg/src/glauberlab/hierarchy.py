"""Truncated correlation hierarchies and their functional calculus.

A hierarchy stores symmetric tensors k_0 .. k_{n_max} (k_n of shape
(N,)*n) and represents the entire functional

    B(theta) = sum_{n=0}^{n_max}  dx^n / n!  sum_{x_1..x_n} k_n(x_1..x_n) prod_i theta(x_i),

the finite shadow of a generating functional: the n-th tensor is the n-th
variational Taylor coefficient of B at theta = 0, and the dx^n/n! weights
discretize the sum-over-configurations measure.  Orders above n_max are
closed by zero, which keeps every operation in this package exactly linear
on the truncated space.

The scale norm used for all solver bookkeeping is the computable surrogate

    scale_norm(k, alpha) = sup_n alpha^n max|k_n|,

which dominates the weighted-functional norm sup_theta |B(theta)| e^{-||theta||_1/alpha}
through the series majorant; inequality checks in this package always place
the surrogate on the majorant side.
"""

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import (
    GridMismatchError,
    InvalidArgumentError,
    MemoryGuardError,
    PrecisionLossError,
)
from .lattice import Grid, GridField, require_same_grid

MEMORY_GUARD_ENTRIES = 10_000_000

FD_STEP = 1e-5


@dataclass(frozen=True)
class ScaleParams:
    """Scale indices, activity and scaling parameter of a model run.

    alpha < alpha0 are the target and initial scale indices, z is the
    birth activity, epsilon the scaling parameter (0 denotes the
    mean-field limit).
    """

    alpha: float
    alpha0: float
    z: float
    epsilon: float = 1.0

    def __post_init__(self):
        if not (0 < self.alpha < self.alpha0):
            raise InvalidArgumentError(
                "need 0 < alpha < alpha0, got alpha=%r alpha0=%r"
                % (self.alpha, self.alpha0)
            )
        if not (self.z > 0):
            raise InvalidArgumentError("activity z must be positive")
        if self.epsilon < 0:
            raise InvalidArgumentError("epsilon must be non-negative")


class CorrelationHierarchy:
    """Symmetric tensors k_0 .. k_{n_max} on a shared grid.

    tensors[0] is a 0-d array (a scalar); tensors[n] has shape (N,)*n.
    Symmetry under index permutations is preserved by construction in all
    package operations and can be asserted with `symmetrize`.
    """

    __slots__ = ("grid", "tensors")

    def __init__(self, grid: Grid, tensors, max_entries=MEMORY_GUARD_ENTRIES):
        n = grid.n_sites
        tens = []
        for order, t in enumerate(tensors):
            arr = np.asarray(t, dtype=np.float64)
            if arr.shape != (n,) * order:
                raise InvalidArgumentError(
                    "tensor %d has shape %r, expected %r"
                    % (order, arr.shape, (n,) * order)
                )
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError("tensor %d has non-finite entries" % order)
            tens.append(arr)
        if not tens:
            raise InvalidArgumentError("hierarchy needs at least the order-0 tensor")
        n_max = len(tens) - 1
        if n**n_max > max_entries:
            raise MemoryGuardError(
                "top tensor would hold %d entries (guard %d)"
                % (n**n_max, max_entries)
            )
        self.grid = grid
        self.tensors = tens

    @property
    def n_max(self) -> int:
        return len(self.tensors) - 1

    def copy(self):
        return CorrelationHierarchy(self.grid, [t.copy() for t in self.tensors])

    def __repr__(self):
        return "CorrelationHierarchy(n_sites=%d, n_max=%d)" % (
            self.grid.n_sites,
            self.n_max,
        )


def zero_hierarchy(grid, n_max) -> CorrelationHierarchy:
    if n_max < 0:
        raise InvalidArgumentError("n_max must be non-negative")
    tensors = [np.zeros((grid.n_sites,) * n) for n in range(n_max + 1)]
    return CorrelationHierarchy(grid, tensors)


def exponential_hierarchy(rho: GridField, n_max) -> CorrelationHierarchy:
    """Product hierarchy k_n(x_1..x_n) = prod_i rho(x_i), k_0 = 1.

    The finite analogue of a Poisson-type state with density rho.
    """
    if n_max < 0:
        raise InvalidArgumentError("n_max must be non-negative")
    grid = rho.grid
    if grid.n_sites**n_max > MEMORY_GUARD_ENTRIES:
        raise MemoryGuardError(
            "order %d tensor on %d sites exceeds the memory guard"
            % (n_max, grid.n_sites)
        )
    tensors = [np.array(1.0)]
    for _ in range(n_max):
        tensors.append(np.multiply.outer(tensors[-1], rho.values))
    return CorrelationHierarchy(grid, tensors)


def random_ruelle_hierarchy(grid, n_max, rng, envelope=1.0) -> CorrelationHierarchy:
    """Random symmetric hierarchy with |k_n| <= envelope^n for n >= 1.

    The order-0 entry is drawn near 1.  Used by the inequality harness and
    the test suite; the envelope plays the role of the activity bound, so
    sampled states grow no faster than a prescribed geometric rate.
    """
    tensors = [np.array(rng.uniform(0.5, 1.5))]
    for order in range(1, n_max + 1):
        raw = rng.uniform(-1.0, 1.0, size=(grid.n_sites,) * order)
        tensors.append(_symmetrize_tensor(raw) * envelope**order)
    return CorrelationHierarchy(grid, tensors)


def _contract_trailing(tensor, weights, count):
    """Contract `count` trailing axes of `tensor` with the vector `weights`."""
    out = tensor
    for _ in range(count):
        out = np.einsum("...i,i->...", out, weights)
    return out


def evaluate_gf(k: CorrelationHierarchy, theta: GridField) -> float:
    """Evaluate B(theta) = sum_n dx^n/n! sum_tuples k_n prod theta.

    The order contributions are combined with math.fsum so the returned
    value is correctly rounded; the finite-difference oracle depends on
    this when it divides tiny differences of nearby evaluations.
    """
    require_same_grid(k, theta)
    dx = k.grid.spacing
    terms = []
    weight = 1.0
    for n, tensor in enumerate(k.tensors):
        if n > 0:
            weight *= dx / n
        terms.append(weight * float(_contract_trailing(tensor, theta.values, n)))
    return math.fsum(terms)


def variational_derivative_field(k: CorrelationHierarchy, theta: GridField):
    """First variational derivative of B at theta, as an array over sites.

    delta B(theta; x) = sum_{n<=n_max-1} dx^n/n! sum_tuples k_{n+1}(x, ...) prod theta.
    """
    require_same_grid(k, theta)
    n = k.grid.n_sites
    dx = k.grid.spacing
    out = np.zeros(n)
    weight = 1.0
    for order in range(k.n_max):
        if order > 0:
            weight *= dx / order
        out += weight * _contract_trailing(k.tensors[order + 1], theta.values, order)
    return out


def variational_derivative(k: CorrelationHierarchy, theta: GridField, x) -> float:
    """delta B(theta; x) at a single site x."""
    if not (0 <= int(x) < k.grid.n_sites):
        raise InvalidArgumentError("site index %r out of range" % (x,))
    return float(variational_derivative_field(k, theta)[int(x)])


def substitute_affine(k, a: GridField, b: GridField) -> CorrelationHierarchy:
    """Hierarchy of the substituted functional theta -> B(a*theta + b).

    Output order m carries

        c_m(y_1..y_m) = prod_i a(y_i) * sum_{j<=n_max-m} dx^j/j! sum_w k_{m+j}(y, w) prod b(w_l).

    The inner sum is capped at j <= n_max - m: with orders above n_max
    closed by zero this makes evaluate_gf(c, theta) == evaluate_gf(k, a*theta+b)
    an exact polynomial identity, not an approximation.
    """
    require_same_grid(k, a)
    require_same_grid(k, b)
    nm = k.n_max
    dx = k.grid.spacing
    n = k.grid.n_sites
    acc = [np.array(t, copy=True) for t in k.tensors]
    row = list(k.tensors)
    weight = 1.0
    for j in range(1, nm + 1):
        weight *= dx / j
        row = [
            np.einsum("...i,i->...", row[p + 1], b.values) for p in range(nm - j + 1)
        ]
        for m in range(nm - j + 1):
            acc[m] = acc[m] + weight * row[m]
    for m in range(1, nm + 1):
        for axis in range(m):
            shape = [1] * m
            shape[axis] = n
            acc[m] = acc[m] * a.values.reshape(shape)
    return CorrelationHierarchy(k.grid, acc)


def taylor_coefficient_fd(k: CorrelationHierarchy, n, sites, step=FD_STEP) -> float:
    """Recover k_n(sites) from B by mixed central finite differences.

    Evaluates B along theta = sum_i s_i * step * indicator(sites[i]) over all
    sign patterns s in {-1,+1}^n and divides the alternating sum by
    (2*step)^n dx^n.  An independent oracle for the stored tensors: the
    estimate must reproduce k_n(sites).

    Raises PrecisionLossError when the estimate at `step` and at `2*step`
    disagree by more than 1e-6 (relative to max(1, |estimate|)), which
    flags step/roundoff failure.
    """
    if not (0 <= n <= k.n_max):
        raise InvalidArgumentError("order %r outside 0..n_max" % (n,))
    sites = [int(s) for s in sites]
    if len(sites) != n:
        raise InvalidArgumentError("need %d sites, got %d" % (n, len(sites)))
    for s in sites:
        if not (0 <= s < k.grid.n_sites):
            raise InvalidArgumentError("site index %r out of range" % (s,))
    if n == 0:
        return evaluate_gf(k, GridField(k.grid, np.zeros(k.grid.n_sites)))

    def estimate(h):
        total = 0.0
        for pattern in range(2**n):
            theta = np.zeros(k.grid.n_sites)
            sign_prod = 1.0
            for i, site in enumerate(sites):
                s = 1.0 if (pattern >> i) & 1 else -1.0
                sign_prod *= s
                theta[site] += s * h
            total += sign_prod * evaluate_gf(k, GridField(k.grid, theta))
        return total / (2.0 * h) ** n / k.grid.spacing**n

    est = estimate(step)
    check = estimate(2.0 * step)
    if abs(est - check) > 1e-6 * max(1.0, abs(est)):
        raise PrecisionLossError(
            "finite-difference estimates at step and 2*step differ by %.3g"
            % abs(est - check)
        )
    return est


def scale_norm(k: CorrelationHierarchy, alpha) -> float:
    """Surrogate scale norm sup_n alpha^n max|k_n|."""
    if not (alpha > 0):
        raise InvalidArgumentError("alpha must be positive")
    return max(
        float(alpha**n * np.max(np.abs(t))) for n, t in enumerate(k.tensors)
    )


def ruelle_margin(k: CorrelationHierarchy, z) -> float:
    """sup_n z^-n max|k_n|; at most 1 iff the activity envelope |k_n| <= z^n holds."""
    if not (z > 0):
        raise InvalidArgumentError("z must be positive")
    return max(float(z**-n * np.max(np.abs(t))) for n, t in enumerate(k.tensors))


def gf_upper_bound(k: CorrelationHierarchy, r) -> float:
    """Majorant sum_n max|k_n| r^n / n! >= sup over the radius-r ball of |B|."""
    if not (r > 0):
        raise InvalidArgumentError("r must be positive")
    total = 0.0
    weight = 1.0
    for n, tensor in enumerate(k.tensors):
        if n > 0:
            weight *= r / n
        total += weight * float(np.max(np.abs(tensor)))
    return total


def cauchy_estimate_check(k: CorrelationHierarchy, n, r) -> bool:
    """Check the derivative growth estimate at order n against the majorant.

    True iff max|k_1| <= (1/r) * gf_upper_bound(k, r) for n = 1 and
    max|k_n| <= n! (e/r)^n * gf_upper_bound(k, r) for n >= 2.  Because the
    majorant dominates the sup of |B| over the complex radius-r ball and
    k_n is the n-th derivative kernel at 0, the check holds identically.
    """
    if not (1 <= n <= k.n_max):
        raise InvalidArgumentError("order %r outside 1..n_max" % (n,))
    bound = gf_upper_bound(k, r)
    top = float(np.max(np.abs(k.tensors[n])))
    if n == 1:
        return top <= bound / r
    return top <= math.factorial(n) * (math.e / r) ** n * bound


def _require_compatible(k1, k2):
    if k1.grid != k2.grid:
        raise GridMismatchError("hierarchies live on different grids")
    if k1.n_max != k2.n_max:
        raise InvalidArgumentError(
            "hierarchies have different truncation orders %d and %d"
            % (k1.n_max, k2.n_max)
        )


def axpy(a, k1, k2) -> CorrelationHierarchy:
    """Entrywise a*k1 + k2."""
    _require_compatible(k1, k2)
    return CorrelationHierarchy(
        k1.grid, [a * t1 + t2 for t1, t2 in zip(k1.tensors, k2.tensors)]
    )


def scale_hierarchy(a, k) -> CorrelationHierarchy:
    return CorrelationHierarchy(k.grid, [a * t for t in k.tensors])


def flatten(k: CorrelationHierarchy):
    """Concatenate all tensor entries (orders ascending, C order)."""
    return np.concatenate([t.ravel() for t in k.tensors])


def flat_dimension(grid, n_max) -> int:
    return sum(grid.n_sites**n for n in range(n_max + 1))


def unflatten(grid, n_max, vector) -> CorrelationHierarchy:
    """Inverse of flatten; validates the flat dimension."""
    vec = np.asarray(vector, dtype=np.float64)
    expected = flat_dimension(grid, n_max)
    if vec.shape != (expected,):
        raise InvalidArgumentError(
            "flat vector has shape %r, expected (%d,)" % (vec.shape, expected)
        )
    tensors = []
    offset = 0
    for n in range(n_max + 1):
        size = grid.n_sites**n
        tensors.append(vec[offset : offset + size].reshape((grid.n_sites,) * n).copy())
        offset += size
    return CorrelationHierarchy(grid, tensors)


def _symmetrize_tensor(tensor):
    order = tensor.ndim
    if order < 2:
        return np.array(tensor, copy=True)
    total = np.zeros_like(tensor)
    for perm in permutations(range(order)):
        total += np.transpose(tensor, perm)
    return total / math.factorial(order)


def symmetrize(k: CorrelationHierarchy) -> CorrelationHierarchy:
    """Average every tensor over index permutations (idempotent)."""
    return CorrelationHierarchy(k.grid, [_symmetrize_tensor(t) for t in k.tensors])


def max_abs_difference(k1, k2) -> float:
    _require_compatible(k1, k2)
    return max(
        float(np.max(np.abs(t1 - t2))) for t1, t2 in zip(k1.tensors, k2.tensors)
    )


def max_abs_by_order(k: CorrelationHierarchy):
    return [float(np.max(np.abs(t))) for t in k.tensors]


def save_hierarchy(k: CorrelationHierarchy, path):
    """Write the snapshot text format.

    First line `n_sites,length,n_max`, then one line per entry
    `n,i1,...,in,value` in flatten order.  Values are written with repr,
    so the file round-trips float64 entries exactly.
    """
    lines = [
        "%d,%s,%d" % (k.grid.n_sites, repr(k.grid.length), k.n_max)
    ]
    for n, tensor in enumerate(k.tensors):
        if n == 0:
            lines.append("0,%s" % repr(float(tensor)))
            continue
        for idx in np.ndindex(*tensor.shape):
            lines.append(
                "%d,%s,%s" % (n, ",".join(str(i) for i in idx), repr(float(tensor[idx])))
            )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_hierarchy(path) -> CorrelationHierarchy:
    """Read a snapshot written by save_hierarchy."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise InvalidArgumentError("empty snapshot file %s" % path)
    head = lines[0].split(",")
    if len(head) != 3:
        raise InvalidArgumentError("malformed snapshot header %r" % lines[0])
    n_sites, length, n_max = int(head[0]), float(head[1]), int(head[2])
    grid = Grid(n_sites, length, length / n_sites)
    tensors = [np.zeros((n_sites,) * n) for n in range(n_max + 1)]
    count = 0
    for ln in lines[1:]:
        parts = ln.split(",")
        order = int(parts[0])
        if len(parts) != order + 2:
            raise InvalidArgumentError("malformed snapshot line %r" % ln)
        idx = tuple(int(p) for p in parts[1 : order + 1])
        value = float(parts[-1])
        if order == 0:
            tensors[0] = np.array(value)
        else:
            tensors[order][idx] = value
        count += 1
    expected = sum(n_sites**n for n in range(n_max + 1))
    if count != expected:
        raise InvalidArgumentError(
            "snapshot holds %d entries, expected %d" % (count, expected)
        )
    return CorrelationHierarchy(grid, tensors)
