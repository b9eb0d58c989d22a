"""Flux models and exact solutions.

Linear advection (constant or rigid-rotation velocity) with an upwind flux,
and the 2D compressible Euler equations with primitive/conserved conversions,
analytic flux tensor, the isentropic vortex exact solution, and the Gaussian
initial field used by the rotating-scalar benchmark.

All functions are pure and operate elementwise on numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPhysicalStateError

GAMMA_DEFAULT = 1.4


# ---------------------------------------------------------------------------
# linear advection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdvectionModel:
    """Scalar transport u_t + div(v u) = 0.

    velocity: constant (u0, v0) when ``rotation`` is False, otherwise the
    rigid counterclockwise rotation field (-y, x) about the origin.
    """

    velocity: tuple[float, float] = (1.0, 0.0)
    rotation: bool = False

    n_vars = 1

    def velocity_at(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.rotation:
            return -np.asarray(y, dtype=float), np.asarray(x, dtype=float)
        vx = np.full_like(np.asarray(x, dtype=float), self.velocity[0])
        vy = np.full_like(np.asarray(y, dtype=float), self.velocity[1])
        return vx, vy

    def flux(self, u: np.ndarray, vx: np.ndarray, vy: np.ndarray):
        return vx * u, vy * u


def rotation_velocity(x, y):
    """Rigid counterclockwise rotation about the origin: v = (-y, x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -y, x


def upwind_flux(u_minus, u_plus, vn):
    """Scalar upwind flux for advection given vn = v . n (n the outward unit
    normal of the minus side): interior value on outflow, exterior on inflow.
    """
    vn = np.asarray(vn, dtype=float)
    return vn * np.where(vn >= 0.0, u_minus, u_plus)


def gaussian_field(center: tuple[float, float], sigma: float):
    """Pointwise Gaussian u(x) = exp(-||x - x0||^2 / sigma^2)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x0, y0 = center

    def f(x, y):
        return np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / sigma**2)

    return f


# ---------------------------------------------------------------------------
# compressible Euler
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EulerModel:
    """2D compressible Euler equations, conserved vars (rho, rhou, rhov, E)."""

    gamma: float = GAMMA_DEFAULT

    n_vars = 4

    def pressure(self, u: np.ndarray) -> np.ndarray:
        """p = (gamma-1)(E - |m|^2 / (2 rho)); u indexed (..., 4) last axis."""
        rho, ru, rv, en = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
        return (self.gamma - 1.0) * (en - 0.5 * (ru * ru + rv * rv) / rho)

    def primitive(self, u: np.ndarray):
        rho = u[..., 0]
        vx = u[..., 1] / rho
        vy = u[..., 2] / rho
        p = self.pressure(u)
        return rho, vx, vy, p

    def conserved(self, rho, vx, vy, p) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        en = p / (self.gamma - 1.0) + 0.5 * rho * (vx * vx + vy * vy)
        return np.stack(
            np.broadcast_arrays(rho, rho * vx, rho * vy, en), axis=-1
        ).astype(float)

    def check_state(self, u: np.ndarray) -> None:
        rho = u[..., 0]
        p = self.pressure(u)
        if np.any(rho <= 0.0) or np.any(p <= 0.0):
            raise NonPhysicalStateError("non-positive density or pressure")

    def flux(self, u: np.ndarray):
        """Analytic flux tensor; returns (Fx, Fy), each shaped like u."""
        rho, vx, vy, p = self.primitive(u)
        en = u[..., 3]
        fx = np.stack(
            [rho * vx, p + rho * vx * vx, rho * vx * vy, vx * (en + p)], axis=-1
        )
        fy = np.stack(
            [rho * vy, rho * vx * vy, p + rho * vy * vy, vy * (en + p)], axis=-1
        )
        return fx, fy


def euler_flux(state: np.ndarray, gamma: float = GAMMA_DEFAULT):
    """Flux tensor of one or more conserved states; raises on non-physical."""
    model = EulerModel(gamma=gamma)
    model.check_state(np.asarray(state, dtype=float))
    return model.flux(np.asarray(state, dtype=float))


# ---------------------------------------------------------------------------
# isentropic vortex exact solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VortexParams:
    """Isentropic vortex advecting at (u0, v0) from (x0, y0).

    ``x_period`` wraps the vortex center (and the x-distance used in the
    radius) periodically, matching a domain that is periodic in x.
    """

    center: tuple[float, float] = (0.0, 0.0)
    beta: float = 5.0
    velocity: tuple[float, float] = (1.0, 0.0)
    gamma: float = GAMMA_DEFAULT
    x_period: float | None = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("vortex strength beta must be positive")


def vortex_primitive(params: VortexParams, x, y, t: float = 0.0):
    """Primitive (rho, u, v, p) of the vortex at time t.

    The perturbation decays like exp(1 - r^2) from the advected center; far
    from it the state tends to (1, u0, v0, 1).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0, y0 = params.center
    u0, v0 = params.velocity
    g = params.gamma
    xc = x0 + u0 * t
    yc = y0 + v0 * t
    dx = x - xc
    if params.x_period is not None:
        length = params.x_period
        dx = (dx + 0.5 * length) % length - 0.5 * length
    dy = y - yc
    f = 1.0 - (dx * dx + dy * dy)
    ef = np.exp(f)
    rho = (1.0 - params.beta**2 * (g - 1.0) * np.exp(2.0 * f) / (16.0 * g * np.pi**2)) ** (
        1.0 / (g - 1.0)
    )
    u = u0 - params.beta * ef * dy / (2.0 * np.pi)
    v = v0 + params.beta * ef * dx / (2.0 * np.pi)
    p = rho**g
    return rho, u, v, p


def vortex_exact(params: VortexParams, x, y, t: float = 0.0) -> np.ndarray:
    """Conserved state of the vortex at (x, y, t), shaped (..., 4)."""
    rho, u, v, p = vortex_primitive(params, x, y, t)
    return EulerModel(gamma=params.gamma).conserved(rho, u, v, p)
