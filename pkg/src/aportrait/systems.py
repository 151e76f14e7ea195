"""
Registry of the benchmark ODE systems.

Every system carries an analytic right-hand side and Jacobian, both compiled
with numba so the integrator core can call them without Python overhead. The
compiled kernels are reached through two dispatchers keyed by a small
integer system id::

    field_kernel(sid, t, y, p) -> (n,) array
    jac_kernel(sid, t, y, p)   -> (n, n) array

where ``p`` is the parameter vector in the order listed by the registry entry.

Available systems
-----------------
silnikov            x' = y, y' = z, z' = x^3 - a^2 x - y - b z
lorenz              classic Lorenz flow (sigma, beta, rho)
circle              planar flow with the unit-circle limit cycle x = sin t, y = cos t
vanderpol           x' = y, y' = -x + y (1 - x^2)
nosehoover_new      Nose-Hoover oscillator with temperature 1 + eps tanh q
nosehoover_classic  Nose-Hoover oscillator at constant temperature
rosenbrock          nonautonomous linear system x' = A(t) x with frozen
                    eigenvalues -1, -10 but growing solutions
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from numba import njit

__all__ = [
    "SystemDefinition",
    "SYSTEM_NAMES",
    "lookup_system",
    "eval_field",
    "eval_jacobian",
    "eval_divergence",
    "jacobian_along",
    "field_along",
]


# ---------------------------------------------------------------------------
# compiled kernels

@njit(cache=True)
def _silnikov_field(t, y, p):
    a, b = p[0], p[1]
    out = np.empty(3)
    out[0] = y[1]
    out[1] = y[2]
    out[2] = y[0] ** 3 - a * a * y[0] - y[1] - b * y[2]
    return out


@njit(cache=True)
def _silnikov_jac(t, y, p):
    a, b = p[0], p[1]
    J = np.zeros((3, 3))
    J[0, 1] = 1.0
    J[1, 2] = 1.0
    J[2, 0] = 3.0 * y[0] * y[0] - a * a
    J[2, 1] = -1.0
    J[2, 2] = -b
    return J


@njit(cache=True)
def _lorenz_field(t, y, p):
    sigma, beta, rho = p[0], p[1], p[2]
    out = np.empty(3)
    out[0] = sigma * (y[1] - y[0])
    out[1] = rho * y[0] - y[1] - y[0] * y[2]
    out[2] = y[0] * y[1] - beta * y[2]
    return out


@njit(cache=True)
def _lorenz_jac(t, y, p):
    sigma, beta, rho = p[0], p[1], p[2]
    J = np.empty((3, 3))
    J[0, 0] = -sigma
    J[0, 1] = sigma
    J[0, 2] = 0.0
    J[1, 0] = rho - y[2]
    J[1, 1] = -1.0
    J[1, 2] = -y[0]
    J[2, 0] = y[1]
    J[2, 1] = y[0]
    J[2, 2] = -beta
    return J


@njit(cache=True)
def _circle_field(t, y, p):
    s = 1.0 - y[0] * y[0] - y[1] * y[1]
    out = np.empty(2)
    out[0] = y[1] + y[0] * s
    out[1] = -y[0] + y[1] * s
    return out


@njit(cache=True)
def _circle_jac(t, y, p):
    x, v = y[0], y[1]
    J = np.empty((2, 2))
    J[0, 0] = 1.0 - 3.0 * x * x - v * v
    J[0, 1] = 1.0 - 2.0 * x * v
    J[1, 0] = -1.0 - 2.0 * x * v
    J[1, 1] = 1.0 - x * x - 3.0 * v * v
    return J


@njit(cache=True)
def _vanderpol_field(t, y, p):
    out = np.empty(2)
    out[0] = y[1]
    out[1] = -y[0] + y[1] * (1.0 - y[0] * y[0])
    return out


@njit(cache=True)
def _vanderpol_jac(t, y, p):
    J = np.empty((2, 2))
    J[0, 0] = 0.0
    J[0, 1] = 1.0
    J[1, 0] = -1.0 - 2.0 * y[0] * y[1]
    J[1, 1] = 1.0 - y[0] * y[0]
    return J


@njit(cache=True)
def _nh_new_field(t, y, p):
    eps = p[0]
    q, mom, zeta = y[0], y[1], y[2]
    out = np.empty(3)
    out[0] = mom
    out[1] = -q - zeta * mom
    out[2] = mom * mom - (1.0 + eps * math.tanh(q))
    return out


@njit(cache=True)
def _nh_new_jac(t, y, p):
    eps = p[0]
    q, mom, zeta = y[0], y[1], y[2]
    c = math.cosh(q)
    J = np.zeros((3, 3))
    J[0, 1] = 1.0
    J[1, 0] = -1.0
    J[1, 1] = -zeta
    J[1, 2] = -mom
    J[2, 0] = -eps / (c * c)
    J[2, 1] = 2.0 * mom
    return J


@njit(cache=True)
def _nh_classic_field(t, y, p):
    temp = p[0]
    q, mom, zeta = y[0], y[1], y[2]
    out = np.empty(3)
    out[0] = mom
    out[1] = -q - zeta * mom
    out[2] = mom * mom - temp
    return out


@njit(cache=True)
def _nh_classic_jac(t, y, p):
    q, mom, zeta = y[0], y[1], y[2]
    J = np.zeros((3, 3))
    J[0, 1] = 1.0
    J[1, 0] = -1.0
    J[1, 1] = -zeta
    J[1, 2] = -mom
    J[2, 1] = 2.0 * mom
    return J


@njit(cache=True)
def _rosenbrock_matrix(t):
    c = math.cos(6.0 * t)
    s = math.sin(6.0 * t)
    A = np.empty((2, 2))
    A[0, 0] = -1.0 - 9.0 * c * c + 12.0 * s * c
    A[0, 1] = 12.0 * c * c + 9.0 * s * c
    A[1, 0] = -12.0 * s * s + 9.0 * s * c
    A[1, 1] = -(1.0 + 9.0 * s * s + 12.0 * s * c)
    return A


@njit(cache=True)
def _rosenbrock_field(t, y, p):
    A = _rosenbrock_matrix(t)
    out = np.empty(2)
    out[0] = A[0, 0] * y[0] + A[0, 1] * y[1]
    out[1] = A[1, 0] * y[0] + A[1, 1] * y[1]
    return out


@njit(cache=True)
def _rosenbrock_jac(t, y, p):
    return _rosenbrock_matrix(t)


# integer ids keep the integrator's argument types plain, so compiled
# code can be cached on disk
SILNIKOV, LORENZ, CIRCLE, VANDERPOL, NH_NEW, NH_CLASSIC, ROSENBROCK = range(7)


@njit(cache=True)
def field_kernel(sid, t, y, p):
    if sid == SILNIKOV:
        return _silnikov_field(t, y, p)
    elif sid == LORENZ:
        return _lorenz_field(t, y, p)
    elif sid == CIRCLE:
        return _circle_field(t, y, p)
    elif sid == VANDERPOL:
        return _vanderpol_field(t, y, p)
    elif sid == NH_NEW:
        return _nh_new_field(t, y, p)
    elif sid == NH_CLASSIC:
        return _nh_classic_field(t, y, p)
    return _rosenbrock_field(t, y, p)


@njit(cache=True)
def jac_kernel(sid, t, y, p):
    if sid == SILNIKOV:
        return _silnikov_jac(t, y, p)
    elif sid == LORENZ:
        return _lorenz_jac(t, y, p)
    elif sid == CIRCLE:
        return _circle_jac(t, y, p)
    elif sid == VANDERPOL:
        return _vanderpol_jac(t, y, p)
    elif sid == NH_NEW:
        return _nh_new_jac(t, y, p)
    elif sid == NH_CLASSIC:
        return _nh_classic_jac(t, y, p)
    return _rosenbrock_jac(t, y, p)


@njit(cache=True)
def _batch_field(sid, ts, ys, p):
    out = np.empty_like(ys)
    for i in range(ys.shape[0]):
        out[i] = field_kernel(sid, ts[i], ys[i], p)
    return out


@njit(cache=True)
def _batch_jac(sid, ts, ys, p):
    n = ys.shape[1]
    out = np.empty((ys.shape[0], n, n))
    for i in range(ys.shape[0]):
        out[i] = jac_kernel(sid, ts[i], ys[i], p)
    return out


# ---------------------------------------------------------------------------
# registry

@dataclass(frozen=True)
class _Entry:
    sid: int
    dimension: int
    defaults: tuple[tuple[str, float], ...]
    autonomous: bool = True


_REGISTRY: dict[str, _Entry] = {
    "silnikov": _Entry(SILNIKOV, 3, (("a", 1.0), ("b", 0.8))),
    "lorenz": _Entry(LORENZ, 3, (("sigma", 10.0), ("beta", 8.0 / 3.0), ("rho", 28.0))),
    "circle": _Entry(CIRCLE, 2, ()),
    "vanderpol": _Entry(VANDERPOL, 2, ()),
    "nosehoover_new": _Entry(NH_NEW, 3, (("eps", 0.42),)),
    "nosehoover_classic": _Entry(NH_CLASSIC, 3, (("temperature", 1.0),)),
    "rosenbrock": _Entry(ROSENBROCK, 2, (), autonomous=False),
}

SYSTEM_NAMES = tuple(_REGISTRY)


@dataclass(frozen=True)
class SystemDefinition:
    """A named vector field with fixed parameters.

    Instances are immutable and cheap to pass between workers; they pickle by
    name and parameters.
    """

    name: str
    dimension: int
    parameters: Mapping[str, float]
    autonomous: bool = True
    params: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def sid(self) -> int:
        return _REGISTRY[self.name].sid

    def __eq__(self, other):
        if not isinstance(other, SystemDefinition):
            return NotImplemented
        return self.name == other.name and dict(self.parameters) == dict(other.parameters)

    def __hash__(self):
        return hash((self.name, tuple(sorted(self.parameters.items()))))

    def __reduce__(self):
        return (lookup_system, (self.name, dict(self.parameters)))

    def describe(self) -> str:
        if not self.parameters:
            return self.name
        pars = ", ".join(f"{k}={v:g}" for k, v in self.parameters.items())
        return f"{self.name}({pars})"


def lookup_system(name: str, overrides: Mapping[str, float] | None = None) -> SystemDefinition:
    """Return the registered system ``name`` with parameter ``overrides`` applied.

    Raises
    ------
    ValueError
        Unknown system name, unknown parameter key, or a non-finite value.
    """
    try:
        entry = _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown system {name!r}; choose from {', '.join(SYSTEM_NAMES)}") from None
    values = dict(entry.defaults)
    for key, val in (overrides or {}).items():
        if key not in values:
            allowed = ", ".join(values) or "none"
            raise ValueError(f"unknown parameter {key!r} for {name} (allowed: {allowed})")
        val = float(val)
        if not math.isfinite(val):
            raise ValueError(f"parameter {key}={val} is not finite")
        values[key] = val
    params = np.array(list(values.values()) or [0.0], dtype=float)
    params.flags.writeable = False
    return SystemDefinition(name, entry.dimension, MappingProxyType(values),
                            entry.autonomous, params)


def _as_state(sys: SystemDefinition, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (sys.dimension,):
        raise ValueError(f"{sys.name} expects a state of length {sys.dimension}, got shape {y.shape}")
    return y


def eval_field(sys: SystemDefinition, y, t: float = 0.0) -> np.ndarray:
    return field_kernel(sys.sid, float(t), _as_state(sys, y), sys.params)


def eval_jacobian(sys: SystemDefinition, y, t: float = 0.0) -> np.ndarray:
    return jac_kernel(sys.sid, float(t), _as_state(sys, y), sys.params)


def eval_divergence(sys: SystemDefinition, y, t: float = 0.0) -> float:
    return float(np.trace(eval_jacobian(sys, y, t)))


def field_along(sys: SystemDefinition, ts, ys) -> np.ndarray:
    """Field values at many (t, y) pairs; ``ys`` has shape (N, n)."""
    ts = np.ascontiguousarray(ts, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float).reshape(-1, sys.dimension)
    return _batch_field(sys.sid, ts, ys, sys.params)


def jacobian_along(sys: SystemDefinition, ts, ys) -> np.ndarray:
    """Jacobians at many (t, y) pairs, shape (N, n, n)."""
    ts = np.ascontiguousarray(ts, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float).reshape(-1, sys.dimension)
    return _batch_jac(sys.sid, ts, ys, sys.params)
