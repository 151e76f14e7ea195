"""
Poincaré sections, period detection and cycle counting.

A closed orbit is found by integrating past a transient to a reference
point ``y_ref``, putting a section plane through ``y_ref`` normal to the
flow there, and following same-orientation returns until one of them lands
within the closure tolerance of ``y_ref``. The rotation number is the loop
count per period, read from the peaks of one state component.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .integrator import DEFAULT_CONTROL, Control, Trajectory, advance, integrate
from .systems import SystemDefinition, _as_state, eval_field, field_along

__all__ = [
    "SectionSpec",
    "OrbitDiagnosis",
    "CycleCount",
    "GrazingWarning",
    "find_crossings",
    "detect_period",
    "count_distinct_cycles",
    "orbit_loop",
    "loop_distance",
    "crossings_to_csv",
    "EQUILIBRIUM",
    "CLOSED",
    "UNRESOLVED",
]

EQUILIBRIUM = "equilibrium"
CLOSED = "closed"
UNRESOLVED = "unresolved"

TIME_TOL = 1e-10
GRAZING_SLOPE = 1e-8
EQUILIBRIUM_SPEED = 1e-9


class GrazingWarning(UserWarning):
    """Tangential touches of a section plane were skipped."""


@dataclass(frozen=True)
class SectionSpec:
    """Hyperplane ``normal . (y - anchor) = 0`` crossed in one direction.

    ``orientation=+1`` keeps crossings where the section function increases
    (velocity aligned with ``normal``); ``-1`` keeps the opposite ones. The
    normal is rescaled to unit length on construction.
    """

    anchor: np.ndarray
    normal: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        anchor = np.array(self.anchor, dtype=float)
        normal = np.array(self.normal, dtype=float)
        if anchor.shape != normal.shape or anchor.ndim != 1:
            raise ValueError("anchor and normal must be vectors of equal length")
        norm = np.linalg.norm(normal)
        if not norm > 0 or not np.isfinite(norm):
            raise ValueError("section normal must be a finite nonzero vector")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        anchor.flags.writeable = False
        normal = normal / norm
        normal.flags.writeable = False
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "normal", normal)

    @classmethod
    def coordinate(cls, dimension: int, index: int, level: float = 0.0,
                   orientation: int = 1) -> "SectionSpec":
        """Plane ``y[index] = level``."""
        anchor = np.zeros(dimension)
        anchor[index] = level
        return cls(anchor, np.eye(dimension)[index], orientation)

    def value(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.anchor) @ self.normal


def _bisect(trajectory: Trajectory, fn, lo, hi, time_tol):
    """Shrink brackets ``fn < 0`` at ``lo``, ``fn >= 0`` at ``hi`` all at once."""
    span = float(np.max(hi - lo)) if lo.size else 0.0
    if span <= 0:
        return 0.5 * (lo + hi)
    iters = max(0, int(math.ceil(math.log2(span / time_tol)))) + 1
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = fn(mid, trajectory(mid)) < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _crossings(trajectory: Trajectory, section: SectionSpec, time_tol=TIME_TOL,
               grazing_slope=GRAZING_SLOPE):
    """Vectorized bracket search plus simultaneous bisection.

    Returns ``(times, states, grazing_count)``.
    """
    n = trajectory.dimension
    empty = np.empty(0), np.empty((0, n)), 0
    if len(trajectory) < 2:
        return empty
    ts = trajectory.times
    g = section.orientation * section.value(trajectory.states)
    idx = np.nonzero((g[:-1] < 0) & (g[1:] >= 0))[0]
    if idx.size == 0:
        return empty
    slope = (g[idx + 1] - g[idx]) / (ts[idx + 1] - ts[idx])
    grazing = slope < grazing_slope
    idx = idx[~grazing]
    if idx.size == 0:
        return np.empty(0), np.empty((0, n)), int(grazing.sum())
    fn = lambda t, y: section.orientation * section.value(y)  # noqa: E731
    times = _bisect(trajectory, fn, ts[idx].copy(), ts[idx + 1].copy(), time_tol)
    return times, trajectory(times), int(grazing.sum())


def _loop_maxima(sys, trajectory, t_lo, t_hi, component, time_tol=TIME_TOL):
    """Times and states where ``y[component]`` peaks inside ``[t_lo, t_hi)``."""
    ts = trajectory.times
    keep = (ts >= t_lo) & (ts <= t_hi)
    first = max(int(np.argmax(keep)) - 1, 0)
    last = min(len(ts) - 1, int(len(ts) - 1 - np.argmax(keep[::-1])) + 1)
    sl = slice(first, last + 1)
    fn = lambda t, y: -field_along(sys, t, y)[:, component]  # noqa: E731
    g = fn(ts[sl], trajectory.states[sl])
    idx = np.nonzero((g[:-1] < 0) & (g[1:] >= 0))[0]
    if idx.size == 0:
        return np.empty(0), np.empty((0, trajectory.dimension))
    times = _bisect(trajectory, fn, ts[sl][idx].copy(), ts[sl][idx + 1].copy(), time_tol)
    inside = (times >= t_lo) & (times < t_hi)
    times = times[inside]
    return times, trajectory(times)


def find_crossings(trajectory: Trajectory, section: SectionSpec,
                   time_tol: float = TIME_TOL) -> list[tuple[float, np.ndarray]]:
    """Same-orientation transversal crossings of ``section``, in time order.

    Sign changes of the section function between stored steps are refined
    by bisection on the dense output until the bracket is shorter than
    ``time_tol``. Brackets whose secant slope is below ``1e-8`` are treated
    as tangential grazes: they are skipped and counted in a
    :class:`GrazingWarning`.
    """
    times, states, grazing = _crossings(trajectory, section, time_tol)
    if grazing:
        warnings.warn(f"skipped {grazing} grazing crossing(s)", GrazingWarning, stacklevel=2)
    return [(float(t), y) for t, y in zip(times, states)]


@dataclass
class OrbitDiagnosis:
    classification: str
    reference: np.ndarray
    period: float | None = None
    rotation: int | None = None
    residual: float | None = None
    crossings: list = field(default_factory=list)
    elapsed: float = 0.0          # integration time spent after the transient
    t_ref: float = 0.0            # time at which the reference point is reached

    @property
    def closed(self) -> bool:
        return self.classification == CLOSED

    def describe(self) -> str:
        if self.classification == CLOSED:
            return (f"closed orbit: period {self.period:.6f}, rotation {self.rotation}, "
                    f"closure residual {self.residual:.3g}")
        if self.classification == EQUILIBRIUM:
            return "equilibrium at " + np.array2string(self.reference, precision=6)
        return f"aperiodic/unresolved after {self.elapsed:g} time units"


def detect_period(sys: SystemDefinition, seed, transient: float = 500.0,
                  closure_tol: float = 1e-6, max_time: float = 20000.0,
                  horizon: float = 200.0, control: Control = DEFAULT_CONTROL,
                  t0: float = 0.0, loop_component: int = 0) -> OrbitDiagnosis:
    """Classify the long-time behaviour from ``seed``.

    After ``transient`` time units the flow-normal section through the
    current point is followed for at most ``horizon`` time units. When no
    return closes within ``closure_tol`` the search restarts from the end
    of that stretch with a fresh section, so slowly converging orbits are
    still caught. The search gives up once ``max_time`` time units beyond
    the transient have been spent.

    The period is the time of the first return within ``closure_tol`` of
    the reference point. The rotation number is the number of loops per
    period, counted as the maxima of ``y[loop_component]`` over one period.
    That count is the same from every starting phase. The number of returns
    to the flow-normal plane is not: a tilted multi-loop orbit can miss the
    plane on some loops. If the component never peaks (for example, it is
    constant), the flow-normal return index is used instead.

    Returns
    -------
    OrbitDiagnosis
        ``closed`` with period, rotation number and residual;
        ``equilibrium`` when the speed at the reference point is below
        ``1e-9``; ``unresolved`` otherwise. Blow-ups raise
        :class:`~aportrait.integrator.BlowUpError`.
    """
    if not closure_tol > 0:
        raise ValueError("closure tolerance must be positive")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    y = advance(sys, seed, t0, t0 + transient, control)
    t = t0 + transient
    spent = 0.0
    while True:
        f = eval_field(sys, y, t)
        speed = float(np.linalg.norm(f))
        if speed < EQUILIBRIUM_SPEED:
            return OrbitDiagnosis(EQUILIBRIUM, y, elapsed=spent, t_ref=t)
        if spent >= max_time:
            return OrbitDiagnosis(UNRESOLVED, y, elapsed=spent, t_ref=t)
        span = min(horizon, max_time - spent)
        traj = integrate(sys, y, t, t + span, control)
        section = SectionSpec(y, f)
        times, states, _ = _crossings(traj, section)
        if times.size:
            dist = np.linalg.norm(states - y, axis=1)
            hits = np.nonzero(dist <= closure_tol)[0]
            if hits.size:
                j = int(hits[0])
                period = float(times[j] - t)
                mt, ms = _loop_maxima(sys, traj, t, t + period, loop_component)
                if mt.size:
                    crossings = [(float(s - t), ms[i]) for i, s in enumerate(mt)]
                else:
                    crossings = [(float(s - t), states[i]) for i, s in enumerate(times[:j + 1])]
                return OrbitDiagnosis(CLOSED, y, period=period, rotation=len(crossings),
                                      residual=float(dist[j]), crossings=crossings,
                                      elapsed=spent + period, t_ref=t)
        y = traj.end
        t += span
        spent += span


def orbit_loop(sys: SystemDefinition, diagnosis: OrbitDiagnosis, samples: int = 1024,
               control: Control = DEFAULT_CONTROL) -> np.ndarray:
    """``samples`` points spaced evenly in time around a closed orbit."""
    if not diagnosis.closed:
        raise ValueError("orbit is not closed")
    t = diagnosis.t_ref
    traj = integrate(sys, diagnosis.reference, t, t + diagnosis.period, control)
    return traj(np.linspace(t, t + diagnosis.period, samples + 1))


def _point_to_polyline(P, Q, chunk=256):
    """For each point of ``P`` the distance to the closed polyline ``Q``."""
    A = Q[:-1]
    D = Q[1:] - A
    dd = np.einsum("ij,ij->i", D, D)
    dd = np.where(dd > 0, dd, 1.0)
    out = np.empty(len(P))
    for s in range(0, len(P), chunk):
        X = P[s:s + chunk, None, :] - A[None]
        u = np.clip(np.einsum("pij,ij->pi", X, D) / dd, 0.0, 1.0)
        R = X - u[..., None] * D[None]
        out[s:s + chunk] = np.sqrt(np.einsum("pij,pij->pi", R, R).min(axis=1))
    return out


def loop_distance(P: np.ndarray, Q: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two sampled loops."""
    return float(max(_point_to_polyline(P, Q).max(), _point_to_polyline(Q, P).max()))


@dataclass
class CycleCount:
    count: int
    representatives: list            # OrbitDiagnosis, one per cluster
    members: list                    # cluster index for each seed, None if excluded
    excluded: list                   # (seed index, OrbitDiagnosis) for non-closed seeds


def _detect(args):
    sys, seed, kwargs = args
    return detect_period(sys, seed, **kwargs)


def count_distinct_cycles(sys: SystemDefinition, seeds: Sequence, match_tol: float = 1e-3,
                          workers: int = 1, samples: int = 1024,
                          **detect_kwargs) -> CycleCount:
    """Cluster the closed orbits reached from ``seeds``.

    Two orbits are the same when the Hausdorff distance between their
    sampled loops is below ``match_tol``. Seeds that do not close are
    excluded and listed in ``excluded``. Clustering runs in seed order,
    so the result does not depend on ``workers``.
    """
    seeds = [_as_state(sys, s) for s in seeds]
    jobs = [(sys, s, detect_kwargs) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            diags = list(pool.map(_detect, jobs))
    else:
        diags = [_detect(j) for j in jobs]
    control = detect_kwargs.get("control", DEFAULT_CONTROL)
    reps, loops, members, excluded = [], [], [], []
    for i, d in enumerate(diags):
        if not d.closed:
            excluded.append((i, d))
            members.append(None)
            continue
        loop = orbit_loop(sys, d, samples, control)
        for c, other in enumerate(loops):
            if loop_distance(loop, other) < match_tol:
                members.append(c)
                break
        else:
            members.append(len(reps))
            reps.append(d)
            loops.append(loop)
    return CycleCount(len(reps), reps, members, excluded)


def crossings_to_csv(crossings: Sequence[tuple[float, np.ndarray]], dimension: int | None = None
                     ) -> str:
    """CSV text with columns ``t, x1, ..., xn`` (6 significant digits)."""
    if dimension is None:
        dimension = len(crossings[0][1]) if crossings else 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(dimension)])
    for t, y in crossings:
        w.writerow([f"{t:.6g}"] + [f"{v:.6g}" for v in y])
    return buf.getvalue()
