"""
Windowed exponent engines.

Four estimates are computed over a window ``[a, a + T]`` of a trajectory:

``LE_J``  eigenvalues of the time-averaged Jacobian
``LE_O``  eigenvalues of the symmetric part of that average
``LE_V``  time average of the instantaneous eigenvalue real parts
``GFE``   ``(1/T) log`` of the eigenvalues of the window's principal
          fundamental matrix (generalized Floquet exponents)

Only real parts are reported. Long runs are split into ``m`` equal windows
and the k-th components (after a descending sort inside each window) are
averaged across windows.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .integrator import (DEFAULT_CONTROL, Control, Trajectory, advance, integrate,
                         integrate_with_fundamental, panel_count, simpson_nodes)
from .smalleig import eigvals, floquet_from_monodromy, order_by_modulus
from .systems import SystemDefinition, jacobian_along

__all__ = [
    "METHODS",
    "WindowPlan",
    "ExponentReport",
    "window_le_j",
    "window_le_o",
    "window_le_v",
    "window_gfe",
    "exponent_suite",
    "sign_signature",
    "signature_of",
]

METHODS = ("LE_J", "LE_O", "LE_V", "GFE")
ZERO_STAR = 5e-3


@dataclass(frozen=True)
class WindowPlan:
    """``m`` windows of length ``T`` starting after ``transient`` time units.

    The initial state is taken at ``t_start``; only the nonautonomous
    Rosenbrock system cares about the absolute time.
    """

    T: float
    m: int = 1
    t_start: float = 0.0
    transient: float = 0.0

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"window length must be positive, got {self.T}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"window count must be a positive integer, got {self.m}")
        if not self.transient >= 0:
            raise ValueError("transient must be non-negative")

    @property
    def first_window(self) -> float:
        return self.t_start + self.transient

    def bounds(self, k: int) -> tuple[float, float]:
        a = self.first_window + k * self.T
        return a, a + self.T


def _span(trajectory: Trajectory, a, T):
    a = trajectory.t0 if a is None else float(a)
    T = trajectory.t1 - a if T is None else float(T)
    if not T > 0:
        raise ValueError("window length must be positive")
    return a, T


def _node_jacobians(sys, trajectory, a, T):
    ts, w = simpson_nodes(a, a + T, panel_count(T))
    return jacobian_along(sys, ts, trajectory(ts)), w


def _average(Js, w, T):
    return np.tensordot(w, Js, axes=1) / T


def _desc(x):
    return np.sort(np.asarray(x, dtype=float))[::-1]


def _le_j(Abar):
    return _desc(eigvals(Abar).real)


def _le_o(Abar):
    return _desc(eigvals(0.5 * (Abar + Abar.T)).real)


def _le_v(Js, w, T, node_order):
    ev = eigvals(Js)
    if node_order == "modulus":
        ev = order_by_modulus(ev)
    elif node_order != "real":
        raise ValueError(f"node_order must be 'modulus' or 'real', got {node_order!r}")
    return _desc(np.tensordot(w, ev.real, axes=1) / T)


def window_le_j(sys: SystemDefinition, trajectory: Trajectory, a: float | None = None,
                T: float | None = None) -> np.ndarray:
    """Real parts of the eigenvalues of ``(1/T) * integral of J``, descending.

    The window defaults to the whole trajectory. Quadrature is composite
    Simpson on the dense output with ``max(64, ceil(64 T))`` panels.
    """
    a, T = _span(trajectory, a, T)
    Js, w = _node_jacobians(sys, trajectory, a, T)
    return _le_j(_average(Js, w, T))


def window_le_o(sys: SystemDefinition, trajectory: Trajectory, a: float | None = None,
                T: float | None = None) -> np.ndarray:
    """Eigenvalues of the symmetrized average Jacobian, descending."""
    a, T = _span(trajectory, a, T)
    Js, w = _node_jacobians(sys, trajectory, a, T)
    return _le_o(_average(Js, w, T))


def window_le_v(sys: SystemDefinition, trajectory: Trajectory, a: float | None = None,
                T: float | None = None, node_order: str = "modulus") -> np.ndarray:
    """Time-averaged real parts of the instantaneous Jacobian eigenvalues.

    ``node_order`` decides which eigenvalue is "k-th" at each quadrature
    node before averaging: ``"modulus"`` ranks by descending modulus (ties by
    descending imaginary part) so a conjugate pair always occupies two
    adjacent slots; ``"real"`` ranks by descending real part. The averaged
    components are returned sorted descending either way.
    """
    a, T = _span(trajectory, a, T)
    Js, w = _node_jacobians(sys, trajectory, a, T)
    return _le_v(Js, w, T, node_order)


def window_gfe(sys: SystemDefinition, y, T: float, t0: float = 0.0,
               control: Control = DEFAULT_CONTROL) -> np.ndarray:
    """Real parts of the generalized Floquet exponents over ``[t0, t0 + T]``."""
    if not T > 0:
        raise ValueError("window length must be positive")
    _, Phi = integrate_with_fundamental(sys, y, t0, t0 + T, control)
    return _desc(floquet_from_monodromy(Phi).real)


def signature_of(values: Iterable[float], threshold: float = ZERO_STAR) -> str:
    """Render signs as ``(+, 0*, -)``; ``0*`` marks ``|v| < threshold``."""
    marks = []
    for v in values:
        if abs(v) < threshold:
            marks.append("0*")
        elif v > 0:
            marks.append("+")
        else:
            marks.append("-")
    return "(" + ", ".join(marks) + ")"


@dataclass
class ExponentReport:
    system: str
    parameters: dict
    plan: WindowPlan
    dimension: int
    methods: tuple
    windows: dict = field(default_factory=dict)       # method -> (m, n)
    window_traces: np.ndarray = None                  # (m,)
    zero_threshold: float = ZERO_STAR

    @property
    def averages(self) -> dict:
        return {k: v.mean(axis=0) for k, v in self.windows.items()}

    @property
    def trace_average(self) -> float:
        return float(np.mean(self.window_traces))

    def signature(self, method: str) -> str:
        return signature_of(self.averages[method], self.zero_threshold)

    def summary(self) -> dict:
        avg = self.averages
        return {
            "format": "exponents/1",
            "system": self.system,
            "parameters": dict(self.parameters),
            "plan": {"T": self.plan.T, "m": self.plan.m, "t_start": self.plan.t_start,
                     "transient": self.plan.transient},
            "trace_average": self.trace_average,
            "zero_threshold": self.zero_threshold,
            "methods": {m: {"average": [float(x) for x in avg[m]],
                            "signature": self.signature(m)} for m in self.methods},
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["window", "method"] + [f"c{i + 1}" for i in range(self.dimension)])
        for k in range(self.plan.m):
            for method in self.methods:
                writer.writerow([k, method] + [f"{x:.6g}" for x in self.windows[method][k]])
        return buf.getvalue()

    def table(self) -> str:
        """Human-readable rows like the published tables."""
        avg = self.averages
        lines = []
        for m in self.methods:
            vals = ", ".join(f"{x:.4f}" for x in avg[m])
            lines.append(f"{m:<5} {vals:<34} {self.signature(m)}")
        lines.append(f"trace average {self.trace_average:.6f}")
        return "\n".join(lines)


def sign_signature(report: ExponentReport, method: str) -> str:
    return report.signature(method)


def exponent_suite(sys: SystemDefinition, y0, plan: WindowPlan,
                   methods: Sequence[str] = METHODS, control: Control = DEFAULT_CONTROL,
                   node_order: str = "modulus",
                   zero_threshold: float = ZERO_STAR) -> ExponentReport:
    """Run the requested exponent engines over ``plan.m`` consecutive windows.

    The transient is integrated and discarded first. Windows are processed
    in order, each one starting from the end state of the previous one, so
    the run is deterministic. Blow-ups propagate as
    :class:`~aportrait.integrator.BlowUpError` carrying the failing time.
    """
    methods = tuple(methods)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
    n = sys.dimension
    y = advance(sys, y0, plan.t_start, plan.first_window, control)
    windows = {m: np.empty((plan.m, n)) for m in methods}
    traces = np.empty(plan.m)
    for k in range(plan.m):
        a, b = plan.bounds(k)
        if "GFE" in methods:
            traj, Phi = integrate_with_fundamental(sys, y, a, b, control)
            windows["GFE"][k] = _desc(floquet_from_monodromy(Phi).real)
        else:
            traj = integrate(sys, y, a, b, control)
        Js, w = _node_jacobians(sys, traj, a, plan.T)
        Abar = _average(Js, w, plan.T)
        traces[k] = np.trace(Abar)
        if "LE_J" in methods:
            windows["LE_J"][k] = _le_j(Abar)
        if "LE_O" in methods:
            windows["LE_O"][k] = _le_o(Abar)
        if "LE_V" in methods:
            windows["LE_V"][k] = _le_v(Js, w, plan.T, node_order)
        y = traj.end
    return ExponentReport(sys.name, dict(sys.parameters), plan, n, methods, windows, traces,
                          zero_threshold)
