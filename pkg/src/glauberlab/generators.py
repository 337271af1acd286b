"""Linear generators of the birth-and-death dynamics on truncated hierarchies.

Three kinds of generator act on a hierarchy, differing only in the affine
shift applied to the functional argument for a birth at site x:

    plain:       a_x(y) = exp(-phi(x-y))          b_x(y) = exp(-phi(x-y)) - 1
    rescaled(e): a_x(y) = exp(-e*phi(x-y))        b_x(y) = expm1(-e*phi(x-y)) / e
    mean-field:  a_x(y) = 1                       b_x(y) = -phi(x-y)

On the functional side the generator is

    (L B)(theta) = - sum_x dx theta(x) [ deltaB(theta;x) - z * B(a_x theta + b_x) ],

with unit death rate and birth activity z.  The tensor-level action is
obtained by collecting theta-monomial coefficients: the death part scales
order n by n, the birth part symmetrizes the per-site substituted
hierarchies.  Orders above n_max are closed by zero, so pairing the tensor
route with the direct functional evaluation (minus the top-order product
term the closure discards, see evaluate_generator_gf) is an exact identity
and serves as the module's master self-check.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, MemoryGuardError
from .hierarchy import (
    MEMORY_GUARD_ENTRIES,
    CorrelationHierarchy,
    ScaleParams,
    _contract_trailing,
    evaluate_gf,
    flat_dimension,
    flatten,
    substitute_affine,
    unflatten,
    variational_derivative_field,
    zero_hierarchy,
)
from .lattice import GridField, PairPotential, displacement_matrix, require_same_grid


@dataclass(frozen=True)
class GeneratorKind:
    """Which member of the generator family to apply.

    name is one of "glauber", "rescaled", "vlasov_limit"; epsilon is the
    scaling parameter and is only meaningful for the rescaled kind.
    """

    name: str
    epsilon: float = 0.0

    def __post_init__(self):
        if self.name not in ("glauber", "rescaled", "vlasov_limit"):
            raise InvalidArgumentError("unknown generator kind %r" % (self.name,))
        if self.name == "rescaled" and not (self.epsilon > 0):
            raise InvalidArgumentError("rescaled kind needs epsilon > 0")


GLAUBER = GeneratorKind("glauber")
VLASOV_LIMIT = GeneratorKind("vlasov_limit")


def rescaled(epsilon) -> GeneratorKind:
    return GeneratorKind("rescaled", float(epsilon))


def shift_displacement_tables(pot: PairPotential, kind: GeneratorKind):
    """Per-displacement samples (a, b) of the birth shift fields.

    The plain kind is evaluated as rescaled with epsilon = 1, so the two
    coincide bit for bit; expm1 keeps b accurate down to epsilon -> 0.
    """
    phi = pot.values_by_displacement
    if kind.name == "vlasov_limit":
        return np.ones_like(phi), -phi
    eps = 1.0 if kind.name == "glauber" else kind.epsilon
    return np.exp(-eps * phi), np.expm1(-eps * phi) / eps


def _shift_matrices(pot, kind):
    disp = displacement_matrix(pot.grid)
    a_disp, b_disp = shift_displacement_tables(pot, kind)
    return a_disp[disp], b_disp[disp]


def shift_bound_constants(pot, kind):
    """(c0, c1) with c0 = max_y a_x(y) and c1 = ||b_x||_1, both x-independent."""
    a_disp, b_disp = shift_displacement_tables(pot, kind)
    return float(np.max(a_disp)), float(np.sum(np.abs(b_disp)) * pot.grid.spacing)


def apply_death(k: CorrelationHierarchy) -> CorrelationHierarchy:
    """Death part: order n is scaled by n (each of n particles dies at rate 1)."""
    tensors = [n * t for n, t in enumerate(k.tensors)]
    tensors[0] = np.array(0.0)
    return CorrelationHierarchy(k.grid, tensors)


def apply_birth(k, pot: PairPotential, kind: GeneratorKind) -> CorrelationHierarchy:
    """Birth part: symmetrized per-site substituted hierarchies.

    With c_x the hierarchy of theta -> B(a_x theta + b_x),

        out_n(x_1..x_n) = sum_i c_{x_i, n-1}(x_1 .. without x_i .. x_n),

    which is the order-n coefficient of sum_x dx theta(x) B_x(theta); the
    sum over which argument plays the birth site replaces the 1/(n-1)!
    bookkeeping.  Output order 0 vanishes.
    """
    require_same_grid(k, pot)
    grid = k.grid
    if k.n_max == 0:
        return zero_hierarchy(grid, 0)
    a_rows, b_rows = _shift_matrices(pot, kind)
    subs = [
        substitute_affine(k, GridField(grid, a_rows[x]), GridField(grid, b_rows[x]))
        for x in range(grid.n_sites)
    ]
    tensors = [np.array(0.0)]
    for n in range(1, k.n_max + 1):
        stack = np.stack([subs[x].tensors[n - 1] for x in range(grid.n_sites)])
        acc = np.zeros(stack.shape)
        for i in range(n):
            acc = acc + np.moveaxis(stack, 0, i)
        tensors.append(acc)
    return CorrelationHierarchy(grid, tensors)


def apply_generator(k, params: ScaleParams, pot, kind) -> CorrelationHierarchy:
    """Full generator -death + z * birth on the truncated hierarchy."""
    death = apply_death(k)
    birth = apply_birth(k, pot, kind)
    tensors = [
        params.z * b - d for d, b in zip(death.tensors, birth.tensors)
    ]
    tensors[0] = np.array(0.0)
    return CorrelationHierarchy(k.grid, tensors)


def death_gf_term(k, theta: GridField) -> float:
    """sum_x dx theta(x) deltaB(theta; x), evaluated without tensor transforms."""
    vd = variational_derivative_field(k, theta)
    return float(np.sum(theta.values * vd) * k.grid.spacing)


def _top_order_product_term(k, psi_values) -> float:
    """Order-n_max summand of evaluate_gf(k, psi): dx^nm/nm! sum k_nm prod psi."""
    nm = k.n_max
    contracted = float(_contract_trailing(k.tensors[nm], psi_values, nm))
    return contracted * k.grid.spacing**nm / math.factorial(nm)


def birth_gf_term(k, theta: GridField, pot, kind) -> float:
    """sum_x dx theta(x) [B(a_x theta + b_x) - top-order term of B(a_x theta)].

    The subtracted term is the order-n_max product contribution that
    closure by zero removes from the tensor route; with it the pairing
    against the birth tensors is an exact identity.
    """
    require_same_grid(k, theta)
    require_same_grid(k, pot)
    grid = k.grid
    a_rows, b_rows = _shift_matrices(pot, kind)
    contributions = []
    for x in range(grid.n_sites):
        shifted = GridField(grid, a_rows[x] * theta.values + b_rows[x])
        value = evaluate_gf(k, shifted) - _top_order_product_term(
            k, a_rows[x] * theta.values
        )
        contributions.append(theta.values[x] * value)
    return grid.spacing * math.fsum(contributions)


def evaluate_generator_gf(k, theta, params: ScaleParams, pot, kind) -> float:
    """Direct functional-side evaluation of the generator, the duality oracle.

    Equals evaluate_gf(apply_generator(k, ...), theta) exactly (up to
    roundoff) for symmetric hierarchies.
    """
    return -death_gf_term(k, theta) + params.z * birth_gf_term(k, theta, pot, kind)


def assemble_matrix(grid, n_max, params, pot, kind):
    """Dense matrix of the generator on flattened hierarchies.

    Column j is the flattened image of the j-th standard basis vector; the
    matrix certifies linearity and feeds the exponentiation oracle.
    """
    dim = flat_dimension(grid, n_max)
    if dim * dim > MEMORY_GUARD_ENTRIES:
        raise MemoryGuardError(
            "generator matrix would hold %d entries (guard %d)"
            % (dim * dim, MEMORY_GUARD_ENTRIES)
        )
    matrix = np.zeros((dim, dim))
    for j in range(dim):
        basis = np.zeros(dim)
        basis[j] = 1.0
        image = apply_generator(unflatten(grid, n_max, basis), params, pot, kind)
        matrix[:, j] = flatten(image)
    return matrix


def norm_bound_M(params: ScaleParams, pot: PairPotential) -> float:
    """Uniform numerator M of the scale estimate ||L B|| <= M/(gap) ||B||.

    M = alpha0 (1 + z alpha0 exp(||phi||_1/alpha - 1)); the same constant
    works for all three generator kinds because |a_x| <= 1 and
    ||b_x||_1 <= ||phi||_1 for each of them.
    """
    return params.alpha0 * (
        1.0 + params.z * params.alpha0 * math.exp(pot.norm_l1 / params.alpha - 1.0)
    )


def vlasov_gap_bound(eps, params, pot, alpha_prime, alpha_dprime) -> float:
    """Upper bound for ||(L_rescaled(eps) - L_limit) B|| / ||B|| across the scale gap.

    eps z ||phi||_inf e^{||phi||_1/alpha} ( ||phi||_1 alpha0 / gap + 4 alpha0^3 / (gap^2 e) ),
    gap = alpha_dprime - alpha_prime, valid for alpha <= alpha_prime < alpha_dprime <= alpha0.
    """
    if eps < 0:
        raise InvalidArgumentError("eps must be non-negative")
    if not (
        params.alpha <= alpha_prime < alpha_dprime <= params.alpha0
    ):
        raise InvalidArgumentError(
            "need alpha <= alpha' < alpha'' <= alpha0, got %r < %r in [%r, %r]"
            % (alpha_prime, alpha_dprime, params.alpha, params.alpha0)
        )
    gap = alpha_dprime - alpha_prime
    return (
        eps
        * params.z
        * pot.norm_linf
        * math.exp(pot.norm_l1 / params.alpha)
        * (
            pot.norm_l1 * params.alpha0 / gap
            + 4.0 * params.alpha0**3 / (gap**2 * math.e)
        )
    )
