"""
Attractiveness portraits (A-portraits).

A trajectory is sampled every ``T`` time units. At each sample the
Jacobian is frozen, and every real eigenvector (or the eigenplane of a
complex pair) is drawn as a short segment through the sample point. Color
gives the sign of the eigenvalue real part: blue attracts, red repels.
Length is proportional to the eigenvalue modulus.

Documents serialize to JSON (``"format": "aportrait/1"``) and project to
static SVG.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
import numpy as np

from .exponents import WindowPlan
from .integrator import DEFAULT_CONTROL, Control, Trajectory, advance, integrate
from .smalleig import ComplexPlane, eigen
from .systems import SystemDefinition, _as_state, eval_jacobian

__all__ = [
    "ATTRACT",
    "REPEL",
    "NEUTRAL",
    "DEFAULT_COLORS",
    "VIEWS",
    "PortraitSegment",
    "PortraitSample",
    "PortraitDocument",
    "CompareResult",
    "portrait_at",
    "build_portrait",
    "sample_plan",
    "view_matrix",
    "render_svg",
    "hidden_structure_compare",
]

ATTRACT = "attract"
REPEL = "repel"
NEUTRAL = "neutral"
REAL_LINE = "real-line"
PLANE_ARM = "complex-plane-arm"

DEFAULT_COLORS = {ATTRACT: "#0000FF", REPEL: "#FF0000", NEUTRAL: "#888888",
                  "trajectory": "#00AA00"}
NEUTRAL_THRESHOLD = 1e-9
AUTO_FRACTION = 0.05
FORMAT = "aportrait/1"

_S2, _S6 = math.sqrt(2.0), math.sqrt(6.0)
VIEWS = {
    "xy": np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
    "xz": np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
    "yz": np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
    # isometric camera looking down the (1, 1, 1) diagonal, z up
    "iso": np.array([[1 / _S2, -1 / _S2, 0.0], [-1 / _S6, -1 / _S6, 2 / _S6]]),
}


def polarity_of(re: float, threshold: float = NEUTRAL_THRESHOLD) -> str:
    if re < -threshold:
        return ATTRACT
    if re > threshold:
        return REPEL
    return NEUTRAL


@dataclass(frozen=True)
class PortraitSegment:
    center: np.ndarray
    direction: np.ndarray
    half_length: float
    polarity: str
    re: float
    im: float
    kind: str

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        d = self.half_length * self.direction
        return self.center - d, self.center + d

    def scaled(self, factor: float) -> "PortraitSegment":
        return PortraitSegment(self.center, self.direction, self.half_length * factor,
                               self.polarity, self.re, self.im, self.kind)


@dataclass
class PortraitSample:
    t: float
    point: np.ndarray
    eigenvalues: np.ndarray          # all n eigenvalues, complex
    segments: list
    defective: bool = False


def _segments(y, spectrum, scale, threshold):
    segs = []
    for s in spectrum.structures:
        if isinstance(s, ComplexPlane):
            lam = s.value
            for row in s.basis:
                segs.append(PortraitSegment(y, row.copy(), scale * abs(lam),
                                            polarity_of(lam.real, threshold),
                                            float(lam.real), float(lam.imag), PLANE_ARM))
        else:
            segs.append(PortraitSegment(y, s.direction.copy(), scale * abs(s.value),
                                        polarity_of(s.value, threshold), float(s.value), 0.0,
                                        REAL_LINE))
    return segs


def portrait_at(sys: SystemDefinition, y, scale: float = 1.0,
                neutral_threshold: float = NEUTRAL_THRESHOLD, t: float = 0.0
                ) -> PortraitSample:
    """Segments of the frozen-Jacobian picture at one point.

    Each real eigenvalue contributes one segment along its eigenvector; a
    complex pair contributes two arms along an orthonormal basis of its
    eigenplane, both carrying the pair's real part and modulus. Half
    lengths are ``scale * |lambda|``. When the Jacobian is defective only
    the available eigenvectors are drawn and ``defective`` is set.
    """
    y = _as_state(sys, y)
    if not np.all(np.isfinite(y)):
        raise ValueError("state must be finite")
    if not scale > 0:
        raise ValueError("scale must be positive")
    es = eigen(eval_jacobian(sys, y, t))
    point = y.copy()
    point.flags.writeable = False
    return PortraitSample(float(t), point, es.eigenvalues.copy(),
                          _segments(point, es, scale, neutral_threshold), es.defective)


@dataclass
class PortraitDocument:
    system: str
    parameters: dict
    plan: WindowPlan
    polyline: np.ndarray                  # (N, n)
    samples: list
    scale: float
    neutral_threshold: float = NEUTRAL_THRESHOLD
    colors: dict = field(default_factory=lambda: dict(DEFAULT_COLORS))
    polyline_times: np.ndarray | None = None

    @property
    def dimension(self) -> int:
        return self.polyline.shape[1]

    @property
    def segments(self) -> list:
        return [s for smp in self.samples for s in smp.segments]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self.polyline) == 0:
            z = np.zeros(self.dimension)
            return z, z.copy()
        return self.polyline.min(axis=0), self.polyline.max(axis=0)

    def polarity_counts(self) -> dict:
        out = {ATTRACT: 0, REPEL: 0, NEUTRAL: 0}
        for s in self.segments:
            out[s.polarity] += 1
        return out

    def to_dict(self) -> dict:
        lo, hi = self.bounding_box()
        return {
            "format": FORMAT,
            "system": self.system,
            "parameters": dict(self.parameters),
            "plan": {"T": self.plan.T, "m": self.plan.m, "t_start": self.plan.t_start,
                     "transient": self.plan.transient},
            "scale": self.scale,
            "neutral_threshold": self.neutral_threshold,
            "colors": dict(self.colors),
            "bounding_box": [lo.tolist(), hi.tolist()],
            "polyline_times": ([] if self.polyline_times is None
                               else self.polyline_times.tolist()),
            "polyline": self.polyline.tolist(),
            "samples": [{
                "t": smp.t,
                "point": smp.point.tolist(),
                "eigenvalues": [[float(z.real), float(z.imag)] for z in smp.eigenvalues],
                "defective": smp.defective,
                "segments": [{"dir": s.direction.tolist(), "half_len": s.half_length,
                              "re": s.re, "im": s.im, "polarity": s.polarity,
                              "kind": s.kind} for s in smp.segments],
            } for smp in self.samples],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "PortraitDocument":
        if d.get("format") != FORMAT:
            raise ValueError(f"not an {FORMAT} document")
        p = d["plan"]
        plan = sample_plan(p["T"], int(p["m"]), p.get("t_start", 0.0), p.get("transient", 0.0))
        poly = np.asarray(d["polyline"], dtype=float)
        if poly.size == 0:
            n = len(d["bounding_box"][0])
            poly = np.empty((0, n))
        samples = []
        for s in d["samples"]:
            point = np.asarray(s["point"], dtype=float)
            segs = [PortraitSegment(point, np.asarray(g["dir"], dtype=float), g["half_len"],
                                    g["polarity"], g["re"], g["im"], g["kind"])
                    for g in s["segments"]]
            ev = np.array([complex(a, b) for a, b in s["eigenvalues"]])
            samples.append(PortraitSample(s["t"], point, ev, segs, s["defective"]))
        times = np.asarray(d.get("polyline_times") or [], dtype=float)
        return cls(d["system"], d["parameters"], plan, poly, samples, d["scale"],
                   d["neutral_threshold"], dict(d["colors"]), times if times.size else None)

    @classmethod
    def from_json(cls, text: str) -> "PortraitDocument":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class _ZeroPlan:
    """Plan with ``m = 0``: a single sample right after the transient."""

    T: float
    t_start: float = 0.0
    transient: float = 0.0
    m: int = 0

    @property
    def first_window(self) -> float:
        return self.t_start + self.transient


def sample_plan(T: float, m: int, t_start: float = 0.0, transient: float = 0.0):
    """Window plan for portraits; unlike exponent plans ``m = 0`` is allowed."""
    if m == 0:
        if not T > 0:
            raise ValueError("T must be positive")
        return _ZeroPlan(float(T), t_start, transient)
    return WindowPlan(T, m, t_start, transient)


def build_portrait(sys: SystemDefinition, y0, plan, scale: float | str = "auto",
                   neutral_threshold: float = NEUTRAL_THRESHOLD, subdivisions: int = 16,
                   control: Control = DEFAULT_CONTROL) -> PortraitDocument:
    """Sample the A-portrait at ``t = kT`` for ``k = 0..m`` after the transient.

    Parameters
    ----------
    plan : WindowPlan
        ``T`` is the sampling interval and ``m`` the number of intervals; the
        plan's ``transient`` is integrated and discarded first. Use
        :func:`sample_plan` for ``m = 0``.
    scale : float or "auto"
        Half length per unit of eigenvalue modulus. ``"auto"`` makes the
        longest segment's full length 5% of the trajectory bounding-box
        diagonal.
    subdivisions : int
        The stored polyline has this many points per sampling interval; the
        sample points are among its vertices.
    """
    if not (scale == "auto" or (isinstance(scale, (int, float)) and scale > 0)):
        raise ValueError("scale must be positive or 'auto'")
    y0 = _as_state(sys, y0)
    t0 = plan.first_window
    y = advance(sys, y0, plan.t_start, t0, control)
    m = int(plan.m)
    ts = t0 + plan.T * np.arange(m + 1)
    if m == 0:
        poly_t = ts.copy()
        poly = y[None, :].copy()
        points = poly
    else:
        traj = integrate(sys, y, t0, ts[-1], control)
        poly_t = t0 + plan.T * np.arange(m * subdivisions + 1) / subdivisions
        poly_t[::subdivisions] = ts
        poly = traj(poly_t)
        points = poly[::subdivisions]
    samples = [portrait_at(sys, p, 1.0, neutral_threshold, t) for t, p in zip(ts, points)]
    if scale == "auto":
        diag = float(np.linalg.norm(poly.max(axis=0) - poly.min(axis=0)))
        top = max((s.half_length for smp in samples for s in smp.segments), default=0.0)
        scale = AUTO_FRACTION * diag / (2.0 * top) if diag > 0 and top > 0 else 1.0
    scale = float(scale)
    if scale != 1.0:
        for smp in samples:
            smp.segments = [s.scaled(scale) for s in smp.segments]
    return PortraitDocument(sys.name, dict(sys.parameters), plan, poly, samples, scale,
                            neutral_threshold, dict(DEFAULT_COLORS), poly_t)


def view_matrix(view, dimension: int) -> np.ndarray:
    """Projection matrix (2, n) for a named view or an explicit matrix."""
    if isinstance(view, str):
        if view not in VIEWS:
            raise ValueError(f"unknown view {view!r}; choose from {sorted(VIEWS)}")
        P = VIEWS[view][:, :dimension]
    else:
        P = np.asarray(view, dtype=float)
    if P.shape != (2, dimension):
        raise ValueError(f"projection must have shape (2, {dimension}), got {P.shape}")
    if np.linalg.matrix_rank(P) < 2:
        raise ValueError("projection is degenerate (rank < 2)")
    return P


def _fmt(v: float) -> str:
    s = f"{v:.6g}"
    return "0" if s == "-0" else s


def render_svg(doc: PortraitDocument, view="xy", width: int = 800, height: int = 800,
               margin: float = 20.0, trajectory_width: float = 0.6,
               segment_width: float = 1.0) -> str:
    """Project a document to static SVG text.

    Geometry is written in model coordinates inside one group whose
    transform fits the projected bounding box to the viewport (the vertical
    axis points up). Strokes use ``non-scaling-stroke`` so widths are in
    pixels. The trajectory is drawn first, then the segments in sample
    order. The output is byte-identical for identical inputs.
    """
    if not (width > 0 and height > 0):
        raise ValueError("viewport dimensions must be positive")
    P = view_matrix(view, doc.dimension)
    poly = doc.polyline @ P.T
    ends = []
    for s in doc.segments:
        a, b = s.endpoints()
        ends.append((P @ a, P @ b, s.polarity))
    pts = [poly] + [np.array([a, b]) for a, b, _ in ends]
    allp = np.concatenate([p for p in pts if len(p)]) if any(len(p) for p in pts) else np.zeros((1, 2))
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = hi - lo
    avail = np.array([width - 2 * margin, height - 2 * margin], dtype=float)
    k = float(np.min(avail / np.where(span > 0, span, 1.0)))
    if not np.any(span > 0):
        k = 1.0
    cx, cy = (lo + hi) / 2
    tx = width / 2 - k * cx
    ty = height / 2 + k * cy
    colors = doc.colors
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<title>{doc.system} A-portrait ({view if isinstance(view, str) else "custom"})</title>',
        f'<g transform="matrix({_fmt(k)} 0 0 {_fmt(-k)} {_fmt(tx)} {_fmt(ty)})">',
        f'<g id="trajectory" fill="none" stroke="{colors["trajectory"]}" '
        f'stroke-width="{_fmt(trajectory_width)}">',
    ]
    if len(poly):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in poly)
        out.append(f'<polyline points="{coords}" vector-effect="non-scaling-stroke"/>')
    out.append("</g>")
    out.append(f'<g id="segments" stroke-width="{_fmt(segment_width)}">')
    for a, b, pol in ends:
        out.append(f'<line x1="{_fmt(a[0])}" y1="{_fmt(a[1])}" x2="{_fmt(b[0])}" '
                   f'y2="{_fmt(b[1])}" stroke="{colors[pol]}" '
                   f'vector-effect="non-scaling-stroke"/>')
    out.append("</g>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


@dataclass
class CompareResult:
    shift: float
    times: np.ndarray
    chaotic: np.ndarray
    periodic: np.ndarray
    score: float


def _pearson(a, b):
    a = a - a.mean(axis=-1, keepdims=True)
    b = b - b.mean(axis=-1, keepdims=True)
    den = np.sqrt((a * a).sum(axis=-1) * (b * b).sum(axis=-1))
    return np.where(den > 0, (a * b).sum(axis=-1) / np.where(den > 0, den, 1.0), 0.0)


def hidden_structure_compare(chaotic: Trajectory, periodic: Trajectory, component: int,
                             period: float, spacing: float = 0.1, resolution: int = 1024,
                             span: float | None = None) -> CompareResult:
    """Best phase alignment of a chaotic series with a periodic one.

    The chaotic component is sampled every ``spacing`` time units over
    ``span`` (default: the whole chaotic trajectory). For each shift
    ``s = j * period / resolution`` the periodic series is read at
    ``t - s``, wrapped into its first period. The shift with the highest
    Pearson correlation wins.

    Returns
    -------
    CompareResult
        The shift, sample times, both aligned series and the score in
        ``[-1, 1]``.
    """
    if not period > 0:
        raise ValueError("period must be positive")
    if span is None:
        span = chaotic.t1 - chaotic.t0
    if span < period or chaotic.t1 - chaotic.t0 < span - 1e-9:
        raise ValueError("comparison span must cover at least one period of the chaotic run")
    if periodic.t1 - periodic.t0 < period - 1e-9:
        raise ValueError("periodic trajectory must cover one full period")
    rel = np.arange(int(math.floor(span / spacing + 1e-9)) + 1) * spacing
    c = chaotic(chaotic.t0 + rel)[:, component]
    shifts = np.arange(resolution) * (period / resolution)
    scores = np.empty(resolution)
    chunk = max(1, 2_000_000 // rel.size)
    for s in range(0, resolution, chunk):
        sh = shifts[s:s + chunk]
        tt = np.mod(rel[None, :] - sh[:, None], period)
        p = periodic(periodic.t0 + tt.ravel())[:, component].reshape(tt.shape)
        scores[s:s + chunk] = _pearson(c[None, :], p)
    j = int(np.argmax(scores))
    best = shifts[j]
    p = periodic(periodic.t0 + np.mod(rel - best, period))[:, component]
    return CompareResult(float(best), chaotic.t0 + rel, c, p, float(scores[j]))
