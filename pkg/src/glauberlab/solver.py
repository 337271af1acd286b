"""Taylor evolution of hierarchies on a scale of norms.

The evolution u(t) = sum_m t^m/m! A^m u0 is summed term by term.  When the
operator loses one scale step per application with uniform constant M
(||A u||_{s'} <= M/(s''-s') ||u||_{s''}), the series is guaranteed to
converge for t below the step radius

    radius = (alpha0 - alpha) / (e * M),

and solve_local enforces that guard.  Truncated hierarchies make A a
bounded matrix, so the series actually converges for every t; the guard is
kept anyway so the scheme is exercised as designed, and the beyond-radius
regime stays reachable only through the matrix exponential oracle.

Global continuation restarts the local solve while the state keeps
satisfying the activity envelope |k_n| <= z^n: the scale indices are then
pinned to alpha0 = 1/z (the envelope makes the state a unit ball element
of that space) with alpha = alpha0/2 by default.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    ConvergenceError,
    DivergentSeriesError,
    InvalidArgumentError,
    MemoryGuardError,
    RadiusExceededError,
    RuelleViolationError,
)
from .generators import GLAUBER, apply_generator, norm_bound_M
from .hierarchy import (
    MEMORY_GUARD_ENTRIES,
    CorrelationHierarchy,
    ScaleParams,
    axpy,
    max_abs_by_order,
    ruelle_margin,
    scale_hierarchy,
    scale_norm,
)

RUELLE_TOL = 1e-6
RUELLE_DRIFT_TOL = 1e-3


@dataclass
class StepRecord:
    """Diagnostics captured after each accepted solver substep."""

    time: float
    terms_used: int
    tail_estimate: float
    ruelle_margin: float
    scale_norm: float
    max_abs_by_order: list


@dataclass
class SolveReport:
    """Outcome of a local or global solve."""

    solution: CorrelationHierarchy
    terms_used: int
    tail_estimate: float
    radius: float
    restarts: int = 0
    steps: list = field(default_factory=list)


def step_radius(M, alpha, alpha0) -> float:
    """Guaranteed lifetime (alpha0 - alpha)/(e M) of one local solve."""
    if not (M > 0):
        raise InvalidArgumentError("M must be positive")
    if not (0 < alpha <= alpha0):
        raise InvalidArgumentError("need 0 < alpha <= alpha0")
    return (alpha0 - alpha) / (math.e * M)


def taylor_evolve(apply, u0, t, m_max, tol, norm_alpha=1.0) -> SolveReport:
    """Sum u(t) = sum_{m<=m*} t^m/m! A^m u0 until the term norm drops below tol.

    The stopping norm is scale_norm at norm_alpha; tail_estimate is the
    norm of the last added term.  Raises ConvergenceError when m_max terms
    did not reach tol.
    """
    if t < 0:
        raise InvalidArgumentError("t must be non-negative")
    if m_max < 1:
        raise InvalidArgumentError("m_max must be at least 1")
    u = u0.copy()
    if t == 0.0:
        return SolveReport(u, 0, 0.0, math.inf)
    term = u0
    for m in range(1, m_max + 1):
        term = scale_hierarchy(t / m, apply(term))
        u = axpy(1.0, term, u)
        tail = scale_norm(term, norm_alpha)
        if tail < tol:
            return SolveReport(u, m, tail, math.inf)
    raise ConvergenceError(
        "tail %.3g still above tol %.3g after %d terms" % (tail, tol, m_max)
    )


def solve_local(params: ScaleParams, pot, kind, u0, t, m_max, tol) -> SolveReport:
    """One guarded local solve with the configured generator kind."""
    radius = step_radius(norm_bound_M(params, pot), params.alpha, params.alpha0)
    if t >= radius:
        raise RadiusExceededError(
            "t=%.9g outside the guaranteed interval [0, %.9g)" % (t, radius)
        )
    report = taylor_evolve(
        lambda h: apply_generator(h, params, pot, kind),
        u0,
        t,
        m_max,
        tol,
        norm_alpha=params.alpha,
    )
    report.radius = radius
    return report


def evolve_global(
    params: ScaleParams,
    pot,
    u0,
    t_final,
    substep_fraction=0.9,
    m_max=60,
    tol=1e-12,
    kind=GLAUBER,
    ruelle_tol=RUELLE_TOL,
    ruelle_drift_tol=RUELLE_DRIFT_TOL,
) -> SolveReport:
    """Continue local solves up to t_final under the activity envelope.

    The scale is pinned to alpha0 = 1/z and alpha = alpha0/2, each substep
    advances substep_fraction of the step radius, and the envelope margin
    is re-checked before every restart.  Tolerances: the initial state must
    satisfy margin <= 1 + ruelle_tol; during the run drift up to
    1 + ruelle_drift_tol is accepted as truncation noise, beyond that the
    run aborts with RuelleViolationError.
    """
    if t_final < 0:
        raise InvalidArgumentError("t_final must be non-negative")
    if not (0 < substep_fraction <= 1):
        raise InvalidArgumentError("substep_fraction must lie in (0, 1]")
    z = params.z
    alpha0 = 1.0 / z
    gparams = ScaleParams(alpha0 / 2.0, alpha0, z, params.epsilon)
    radius = step_radius(norm_bound_M(gparams, pot), gparams.alpha, gparams.alpha0)
    step = substep_fraction * radius

    margin = ruelle_margin(u0, z)
    if margin > 1.0 + ruelle_tol:
        raise RuelleViolationError(margin, 0.0)

    u = u0
    now = 0.0
    substeps = 0
    records = []
    terms_peak = 0
    tail = 0.0
    while t_final - now > 1e-12 * max(1.0, t_final):
        if substeps > 0:
            margin = ruelle_margin(u, z)
            if margin > 1.0 + ruelle_drift_tol:
                raise RuelleViolationError(margin, now)
        dt_step = min(step, t_final - now)
        local = solve_local(gparams, pot, kind, u, dt_step, m_max, tol)
        u = local.solution
        now += dt_step
        substeps += 1
        terms_peak = max(terms_peak, local.terms_used)
        tail = local.tail_estimate
        records.append(
            StepRecord(
                time=now,
                terms_used=local.terms_used,
                tail_estimate=local.tail_estimate,
                ruelle_margin=ruelle_margin(u, z),
                scale_norm=scale_norm(u, gparams.alpha),
                max_abs_by_order=max_abs_by_order(u),
            )
        )
    return SolveReport(
        solution=u,
        terms_used=terms_peak,
        tail_estimate=tail,
        radius=radius,
        restarts=max(0, substeps - 1),
        steps=records,
    )


def f_q_series(q, t, M, gap, tol) -> float:
    """Partial sum of sum_{m>=1} m^q/m! (t m M / gap)^m.

    The comparison series behind perturbation convergence of the solver
    family; finite exactly when x = t M / gap < 1/e.  Terms are summed in
    log space until the increment drops below tol.
    """
    if q < 0 or int(q) != q:
        raise InvalidArgumentError("q must be a non-negative integer")
    if t < 0:
        raise InvalidArgumentError("t must be non-negative")
    if not (M > 0) or not (gap > 0):
        raise InvalidArgumentError("M and gap must be positive")
    if t == 0.0:
        return 0.0
    x = t * M / gap
    if x >= 1.0 / math.e:
        raise DivergentSeriesError(
            "t*M/gap = %.9g is not below 1/e = %.9g" % (x, 1.0 / math.e)
        )
    total = 0.0
    for m in range(1, 100_000):
        term = math.exp(q * math.log(m) + m * math.log(x * m) - math.lgamma(m + 1))
        total += term
        if term < tol:
            return total
    raise ConvergenceError("series increments did not drop below tol")


def matrix_exp_oracle(matrix, v, t):
    """e^{t A} v by dense scaling-and-squaring, independent of the Taylor path."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError("matrix must be square")
    if a.size > MEMORY_GUARD_ENTRIES:
        raise MemoryGuardError(
            "matrix holds %d entries (guard %d)" % (a.size, MEMORY_GUARD_ENTRIES)
        )
    vec = np.asarray(v, dtype=np.float64)
    if vec.shape != (a.shape[0],):
        raise InvalidArgumentError("vector shape %r does not match matrix" % (vec.shape,))
    return scipy.linalg.expm(t * a) @ vec
