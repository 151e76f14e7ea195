"""
ODE integration with dense output.

The workhorse is an adaptive Dormand-Prince 5(4) pair with FSAL and Hairer's
fourth-order continuous extension, compiled with numba. The same core can
carry the variational equation ``dPhi/dt = J(y(t)) Phi`` alongside the state,
which is how fundamental matrices are produced. A fixed-step classical RK4
integrator is kept as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .systems import SystemDefinition, _as_state, field_kernel, jac_kernel, jacobian_along

__all__ = [
    "Control",
    "Trajectory",
    "FundamentalMatrix",
    "IntegrationError",
    "BlowUpError",
    "StiffnessError",
    "integrate",
    "integrate_with_fundamental",
    "advance",
    "liouville_check",
    "rk4_fixed",
    "simpson_nodes",
]


class IntegrationError(RuntimeError):
    """Base class for integration failures."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class BlowUpError(IntegrationError):
    pass


class StiffnessError(IntegrationError):
    pass


@dataclass(frozen=True)
class Control:
    """Tolerance settings for the adaptive integrator."""

    rtol: float = 1e-9
    atol: float = 1e-10
    bound: float = 1e6
    first_step: float = 0.0  # 0 selects the step automatically
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0 and self.bound > 0):
            raise ValueError("tolerances and escape bound must be positive")


DEFAULT_CONTROL = Control()

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_A71, _A73, _A74, _A75, _A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                                -17253 / 339200, 22 / 525, -1 / 40)
# continuous extension
_D1 = -12715105075 / 11282082432
_D3 = 87487479700 / 32700410799
_D4 = -10690763975 / 1880347072
_D5 = 701980252875 / 199316789632
_D6 = -1453857185 / 822651844
_D7 = 69997945 / 29380423

_OK, _BLOWUP, _UNDERFLOW, _MAXSTEPS = 0, 1, 2, 3


@njit(cache=True)
def _rhs(sid, p, t, u, n, variational):
    f = field_kernel(sid, t, u[:n], p)
    if not variational:
        return f
    J = jac_kernel(sid, t, u[:n], p)
    out = np.empty(u.shape[0])
    out[:n] = f
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += J[i, k] * u[n + k * n + j]
            out[n + i * n + j] = s
    return out


@njit(cache=True)
def _err_norm(e, u0, u1, rtol, atol):
    acc = 0.0
    for i in range(e.shape[0]):
        sc = atol + rtol * max(abs(u0[i]), abs(u1[i]))
        r = e[i] / sc
        acc += r * r
    return math.sqrt(acc / e.shape[0])


@njit(cache=True)
def _initial_step(sid, p, t0, u0, f0, n, variational, rtol, atol, span):
    sc = atol + rtol * np.abs(u0)
    d0 = math.sqrt(np.mean((u0 / sc) ** 2))
    d1 = math.sqrt(np.mean((f0 / sc) ** 2))
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    u1 = u0 + h0 * f0
    f1 = _rhs(sid, p, t0 + h0, u1, n, variational)
    d2 = math.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, span)


@njit(cache=True)
def _grow2(a, cap):
    b = np.empty((cap, a.shape[1]))
    b[:a.shape[0]] = a
    return b


@njit(cache=True)
def _grow3(a, cap):
    b = np.empty((cap, a.shape[1], a.shape[2]))
    b[:a.shape[0]] = a
    return b


@njit(cache=True)
def _grow1(a, cap):
    b = np.empty(cap)
    b[:a.shape[0]] = a
    return b


@njit(cache=True)
def _dopri5(sid, p, u0, n, t0, t1, rtol, atol, bound, variational, store,
            first_step, max_steps):
    span = t1 - t0
    u = u0.copy()
    t = t0
    cap = 1024 if store else 1
    times = np.empty(cap)
    states = np.empty((cap, n))
    coef = np.empty((cap, 5, n))
    times[0] = t0
    states[0] = u0[:n]
    cnt = 1

    k1 = _rhs(sid, p, t, u, n, variational)
    if first_step > 0.0:
        h = min(first_step, span)
    else:
        h = _initial_step(sid, p, t, u, k1, n, variational, rtol, atol, span)
    steps = 0
    rejected_last = False
    while t < t1:
        if steps >= max_steps:
            return _MAXSTEPS, t, times[:cnt], states[:cnt], coef[:max(cnt - 1, 0)], u, steps
        if h < 16.0 * 2.220446049250313e-16 * max(abs(t), 1.0):
            return _UNDERFLOW, t, times[:cnt], states[:cnt], coef[:max(cnt - 1, 0)], u, steps
        last = False
        if t + h >= t1 or t + 1.01 * h >= t1:
            h = t1 - t
            last = True
        k2 = _rhs(sid, p, t + _C2 * h, u + h * (_A21 * k1), n, variational)
        k3 = _rhs(sid, p, t + _C3 * h, u + h * (_A31 * k1 + _A32 * k2), n, variational)
        k4 = _rhs(sid, p, t + _C4 * h,
                  u + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), n, variational)
        k5 = _rhs(sid, p, t + _C5 * h,
                  u + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), n, variational)
        k6 = _rhs(sid, p, t + h,
                  u + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5),
                  n, variational)
        unew = u + h * (_A71 * k1 + _A73 * k3 + _A74 * k4 + _A75 * k5 + _A76 * k6)
        tnew = t1 if last else t + h
        k7 = _rhs(sid, p, tnew, unew, n, variational)
        steps += 1
        e = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        err = _err_norm(e, u, unew, rtol, atol)
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            if store:
                if cnt >= cap:
                    cap *= 2
                    times = _grow1(times, cap)
                    states = _grow2(states, cap)
                    coef = _grow3(coef, cap)
                ydiff = unew[:n] - u[:n]
                bspl = h * k1[:n] - ydiff
                coef[cnt - 1, 0] = u[:n]
                coef[cnt - 1, 1] = ydiff
                coef[cnt - 1, 2] = bspl
                coef[cnt - 1, 3] = ydiff - h * k7[:n] - bspl
                coef[cnt - 1, 4] = h * (_D1 * k1[:n] + _D3 * k3[:n] + _D4 * k4[:n]
                                        + _D5 * k5[:n] + _D6 * k6[:n] + _D7 * k7[:n])
                times[cnt] = tnew
                states[cnt] = unew[:n]
                cnt += 1
            t = tnew
            u = unew
            k1 = k7
            for i in range(n):
                if not (abs(u[i]) <= bound):
                    return _BLOWUP, t, times[:cnt], states[:cnt], coef[:max(cnt - 1, 0)], u, steps
            fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
            if rejected_last:
                fac = min(fac, 1.0)
            h = h * fac
            rejected_last = False
        else:
            h = h * max(0.2, 0.9 * err ** -0.2)
            rejected_last = True
    if not store:
        times[0] = t
        states[0] = u[:n]
    return _OK, t, times[:cnt], states[:cnt], coef[:max(cnt - 1, 0)], u, steps


@njit(cache=True)
def _rk4(sid, p, y0, t0, t1, nsteps):
    n = y0.shape[0]
    h = (t1 - t0) / nsteps
    times = np.empty(nsteps + 1)
    states = np.empty((nsteps + 1, n))
    coef = np.empty((nsteps, 5, n))
    y = y0.copy()
    times[0] = t0
    states[0] = y
    f0 = field_kernel(sid, t0, y, p)
    for i in range(nsteps):
        t = t0 + i * h
        k1 = f0
        k2 = field_kernel(sid, t + 0.5 * h, y + 0.5 * h * k1, p)
        k3 = field_kernel(sid, t + 0.5 * h, y + 0.5 * h * k2, p)
        k4 = field_kernel(sid, t + h, y + h * k3, p)
        ynew = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        tnew = t1 if i == nsteps - 1 else t0 + (i + 1) * h
        f1 = field_kernel(sid, tnew, ynew, p)
        # cubic Hermite in the same nested form as the DOPRI extension
        ydiff = ynew - y
        bspl = h * f0 - ydiff
        coef[i, 0] = y
        coef[i, 1] = ydiff
        coef[i, 2] = bspl
        coef[i, 3] = ydiff - h * f1 - bspl
        coef[i, 4] = 0.0
        times[i + 1] = tnew
        states[i + 1] = ynew
        y = ynew
        f0 = f1
    return times, states, coef


class Trajectory:
    """Time-ordered solution samples with piecewise-polynomial dense output.

    Calling the trajectory with a time (or array of times) inside
    ``[t0, t1]`` evaluates the interpolant; stored sample times return the
    stored states exactly.
    """

    def __init__(self, times, states, coeffs=None, order: int = 4):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self.coeffs = coeffs
        self.order = order
        if self.times.ndim != 1 or self.states.shape[0] != self.times.shape[0]:
            raise ValueError("times and states must have matching lengths")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return self.times.size

    def __repr__(self):
        return (f"Trajectory(n={self.dimension}, samples={len(self)}, "
                f"span=[{self.t0:g}, {self.t1:g}])")

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    @property
    def start(self) -> np.ndarray:
        return self.states[0].copy()

    @property
    def end(self) -> np.ndarray:
        return self.states[-1].copy()

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        if ts.size and (ts.min() < self.t0 - 1e-12 * max(1.0, abs(self.t0))
                        or ts.max() > self.t1 + 1e-12 * max(1.0, abs(self.t1))):
            raise ValueError(f"time outside trajectory span [{self.t0}, {self.t1}]")
        if len(self) == 1:
            out = np.repeat(self.states[:1], ts.size, axis=0)
            return out[0] if scalar else out
        idx = np.clip(np.searchsorted(self.times, ts, side="right") - 1, 0, len(self) - 2)
        ta = self.times[idx]
        h = self.times[idx + 1] - ta
        th = ((ts - ta) / h)[:, None]
        c = self.coeffs[idx]
        out = c[:, 0] + th * (c[:, 1] + (1 - th) * (c[:, 2] + th * (c[:, 3] + (1 - th) * c[:, 4])))
        exact_lo = ts == ta
        exact_hi = ts == self.times[idx + 1]
        out[exact_lo] = self.states[idx[exact_lo]]
        out[exact_hi] = self.states[idx[exact_hi] + 1]
        return out[0] if scalar else out


@dataclass(frozen=True)
class FundamentalMatrix:
    """Principal fundamental matrix ``Phi(t1)`` with ``Phi(t0) = I``."""

    t0: float
    t1: float
    Phi: np.ndarray

    @property
    def span(self) -> float:
        return self.t1 - self.t0


def _raise_status(status, t, t0, t1):
    if status == _BLOWUP:
        raise BlowUpError(f"blow-up at t={t:.6g}", t)
    if status == _UNDERFLOW:
        raise StiffnessError(f"stiffness failure: step size underflow at t={t:.6g}", t)
    if status == _MAXSTEPS:
        raise StiffnessError(f"stiffness failure: step limit exceeded at t={t:.6g}", t)


def _check_span(y0, t0, t1):
    if not (math.isfinite(t0) and math.isfinite(t1)):
        raise ValueError("integration bounds must be finite")
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")


def integrate(sys: SystemDefinition, y0, t0: float, t1: float,
              control: Control = DEFAULT_CONTROL) -> Trajectory:
    """Integrate ``sys`` from ``y0`` at ``t0`` to ``t1`` with dense output."""
    y0 = _as_state(sys, y0).copy()
    t0, t1 = float(t0), float(t1)
    _check_span(y0, t0, t1)
    status, t, times, states, coef, _, _ = _dopri5(
        sys.sid, sys.params, y0, sys.dimension, t0, t1,
        control.rtol, control.atol, control.bound, False, True,
        control.first_step, control.max_steps)
    _raise_status(status, t, t0, t1)
    return Trajectory(times, states, coef, order=4)


def advance(sys: SystemDefinition, y0, t0: float, t1: float,
            control: Control = DEFAULT_CONTROL) -> np.ndarray:
    """Endpoint of the solution without keeping the trajectory."""
    y0 = _as_state(sys, y0).copy()
    t0, t1 = float(t0), float(t1)
    if t1 == t0:
        return y0
    _check_span(y0, t0, t1)
    status, t, _, _, _, u, _ = _dopri5(
        sys.sid, sys.params, y0, sys.dimension, t0, t1,
        control.rtol, control.atol, control.bound, False, False,
        control.first_step, control.max_steps)
    _raise_status(status, t, t0, t1)
    return u.copy()


def integrate_with_fundamental(sys: SystemDefinition, y0, t0: float, t1: float,
                               control: Control = DEFAULT_CONTROL
                               ) -> tuple[Trajectory, FundamentalMatrix]:
    """Integrate the state together with its principal fundamental matrix.

    The augmented system has ``n + n*n`` components; the step-size control
    sees all of them. A zero-length span returns a one-sample trajectory
    and the identity.
    """
    y0 = _as_state(sys, y0).copy()
    n = sys.dimension
    t0, t1 = float(t0), float(t1)
    if t1 == t0:
        return Trajectory(np.array([t0]), y0[None, :]), FundamentalMatrix(t0, t1, np.eye(n))
    _check_span(y0, t0, t1)
    u0 = np.concatenate([y0, np.eye(n).ravel()])
    status, t, times, states, coef, u, _ = _dopri5(
        sys.sid, sys.params, u0, n, t0, t1,
        control.rtol, control.atol, control.bound, True, True,
        control.first_step, control.max_steps)
    _raise_status(status, t, t0, t1)
    Phi = u[n:].reshape(n, n).copy()
    return Trajectory(times, states, coef, order=4), FundamentalMatrix(t0, t1, Phi)


def rk4_fixed(sys: SystemDefinition, y0, t0: float, t1: float, dt: float) -> Trajectory:
    """Classical fixed-step RK4 with cubic Hermite dense output.

    The step is shrunk slightly so that an integer number of steps lands
    exactly on ``t1``.
    """
    y0 = _as_state(sys, y0).copy()
    _check_span(y0, float(t0), float(t1))
    if not dt > 0:
        raise ValueError("dt must be positive")
    nsteps = max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
    times, states, coef = _rk4(sys.sid, sys.params, y0, float(t0), float(t1), nsteps)
    return Trajectory(times, states, coef, order=3)


def simpson_nodes(a: float, b: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson with ``panels`` double intervals."""
    panels = max(1, int(panels))
    ts = np.linspace(a, b, 2 * panels + 1)
    h = (b - a) / (2 * panels)
    w = np.full(ts.size, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return ts, w * (h / 3.0)


def panel_count(span: float) -> int:
    return max(64, int(math.ceil(64.0 * span)))


def liouville_check(sys: SystemDefinition, trajectory: Trajectory, Phi: FundamentalMatrix) -> float:
    """``|ln det Phi - integral of tr J|`` over the span of ``Phi``."""
    if Phi.span == 0:
        return abs(math.log(np.linalg.det(Phi.Phi)))
    ts, w = simpson_nodes(Phi.t0, Phi.t1, panel_count(Phi.span))
    Js = jacobian_along(sys, ts, trajectory(ts))
    integral = float(np.dot(w, np.trace(Js, axis1=1, axis2=2)))
    sign, logdet = np.linalg.slogdet(Phi.Phi)
    if sign <= 0:
        raise ValueError("fundamental matrix lost orientation; the span is too long "
                         "for double precision")
    return abs(logdet - integral)
