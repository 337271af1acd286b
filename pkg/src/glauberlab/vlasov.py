"""The mean-field kinetic equation and its fixed-step integrator.

    d rho_t / dt = -rho_t + z exp(-(phi * rho_t))

on the periodic grid, with * the lattice convolution.  The flow preserves
the positive cone and the a-priori bound ||rho_t||_inf <= max(||rho_0||_inf, z);
the integrator does not clamp undershoots, negativity beyond tolerance is
treated as an integrator defect and surfaces in linf_bound_check.

The exponential functional exp(sum_x rho(x) theta(x) dx) evaluated along a
solution is the mean-field evolution of a product-form state; chaos
preservation is the statement that the hierarchy flow under the limit
generator keeps states of exactly this form.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NonfiniteStateError
from .lattice import (
    GridField,
    PairPotential,
    displacement_matrix,
    field_linf_norm,
    require_same_grid,
)


@dataclass(frozen=True)
class VlasovConfig:
    """Integrator settings: activity, step, scheme and final time."""

    z: float
    dt: float
    scheme: str = "rk4"
    t_final: float = 0.0
    sample_stride: int = 1

    def __post_init__(self):
        if not (self.z > 0):
            raise InvalidArgumentError("z must be positive")
        if not (self.dt > 0):
            raise InvalidArgumentError("dt must be positive")
        if self.scheme not in ("rk4", "euler"):
            raise InvalidArgumentError("scheme must be rk4 or euler")
        if self.t_final < 0:
            raise InvalidArgumentError("t_final must be non-negative")
        if self.t_final > 0 and self.dt > self.t_final:
            raise InvalidArgumentError("dt must not exceed t_final")
        if self.sample_stride < 1:
            raise InvalidArgumentError("sample_stride must be at least 1")


def vlasov_rhs(rho: GridField, z, pot: PairPotential) -> GridField:
    """Right-hand side -rho + z exp(-(phi * rho))."""
    require_same_grid(rho, pot)
    kernel = pot.values_by_displacement[displacement_matrix(pot.grid)]
    conv = np.sum(kernel * rho.values[None, :], axis=1) * pot.grid.spacing
    return GridField(rho.grid, -rho.values + z * np.exp(-conv))


def integrate(rho0: GridField, cfg: VlasovConfig, pot: PairPotential):
    """Integrate to cfg.t_final; returns (final field, trajectory samples).

    Trajectory samples are (t, values-copy) pairs recorded at t = 0, every
    sample_stride-th step, and the final time.  Raises NonfiniteStateError
    as soon as the state picks up a NaN or infinity.
    """
    require_same_grid(rho0, pot)
    if np.any(rho0.values < 0):
        raise InvalidArgumentError("initial density must be non-negative")
    grid = rho0.grid
    kernel = pot.values_by_displacement[displacement_matrix(grid)]
    dx = grid.spacing
    z = cfg.z

    def rhs(values):
        conv = np.sum(kernel * values[None, :], axis=1) * dx
        return -values + z * np.exp(-conv)

    def step(values, h):
        if cfg.scheme == "euler":
            return values + h * rhs(values)
        k1 = rhs(values)
        k2 = rhs(values + 0.5 * h * k1)
        k3 = rhs(values + 0.5 * h * k2)
        k4 = rhs(values + h * k3)
        return values + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    n_full = int(math.floor(cfg.t_final / cfg.dt + 1e-9))
    remainder = cfg.t_final - n_full * cfg.dt
    if remainder < 1e-9 * max(cfg.dt, 1.0):
        remainder = 0.0

    values = rho0.values.copy()
    trajectory = [(0.0, values.copy())]
    t = 0.0
    # overflow is diagnosed by the isfinite check below, not by numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n_full + 1):
            values = step(values, cfg.dt)
            t = i * cfg.dt
            if not np.all(np.isfinite(values)):
                raise NonfiniteStateError("state became non-finite at t=%.9g" % t)
            if i % cfg.sample_stride == 0:
                trajectory.append((t, values.copy()))
        if remainder > 0.0:
            values = step(values, remainder)
            t = cfg.t_final
            if not np.all(np.isfinite(values)):
                raise NonfiniteStateError("state became non-finite at t=%.9g" % t)
    if not trajectory or trajectory[-1][0] != t:
        trajectory.append((t, values.copy()))
    return GridField(grid, values), trajectory


def linf_bound_check(trajectory, rho0: GridField, z) -> bool:
    """True iff every sample obeys rho <= max(||rho_0||_inf, z) + 1e-9 and rho >= -1e-9."""
    bound = max(field_linf_norm(rho0), z) + 1e-9
    for _, values in trajectory:
        if float(np.max(values)) > bound or float(np.min(values)) < -1e-9:
            return False
    return True


def stationary_residual(rho: GridField, z, pot) -> float:
    """Sup-norm of the right-hand side; zero at fixed points."""
    return field_linf_norm(vlasov_rhs(rho, z, pot))


def exponential_gf_eval(rho: GridField, theta: GridField) -> float:
    """Product-form functional exp(sum_x rho(x) theta(x) dx)."""
    require_same_grid(rho, theta)
    return math.exp(float(np.sum(rho.values * theta.values)) * rho.grid.spacing)
