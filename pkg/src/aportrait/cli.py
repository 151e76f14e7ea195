"""
Command-line interface: ``aportrait <command> [options]``.

Commands
--------
exponents   windowed LE_J / LE_O / LE_V / GFE, CSV + JSON report
period      closed-orbit detection, optional crossings CSV
portrait    A-portrait JSON document plus one SVG per view
sweep       parameter sweep: classification, cycle count, exponents
compare     hidden-structure phase comparison between two parameter sets

Options may also come from a ``key = value`` file given with ``--config``;
command-line flags win over the file, and the file wins over defaults.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exponents import METHODS, WindowPlan, exponent_suite
from .integrator import Control, IntegrationError, advance, integrate
from .orbit import CLOSED, count_distinct_cycles, crossings_to_csv, detect_period
from .portrait import VIEWS, build_portrait, hidden_structure_compare, render_svg, sample_plan
from .systems import SYSTEM_NAMES, lookup_system

DEFAULT_SEEDS = {
    "silnikov": (0.1, 0.0, 0.0),
    "lorenz": (1.0, 1.0, 1.0),
    "circle": (2.0, 0.0),
    "vanderpol": (2.0, 0.0),
    "nosehoover_new": (-2.25, 0.0, 0.0),
    "nosehoover_classic": (0.0, 1.0, 0.0),
    "rosenbrock": (1.0, 0.0),
}
ORBIT_TRANSIENT = 500.0
PORTRAIT_TRANSIENT = 200.0


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Fully resolved inputs for one command, validated before any work."""

    command: str
    system: str
    parameters: dict
    seed: tuple
    T: float | None
    m: int
    transient: float | None
    control: Control
    out: str
    views: tuple
    workers: int
    extra: dict = field(default_factory=dict)

    def system_definition(self, overrides=None):
        params = dict(self.parameters)
        params.update(overrides or {})
        return lookup_system(self.system, params)


# ---------------------------------------------------------------- parsing

def _parse_assignment(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise UsageError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    try:
        return key.strip(), float(value)
    except ValueError:
        raise UsageError(f"parameter {key.strip()!r} needs a number, got {value!r}") from None


def _floats(text: str, what: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers, got {text!r}") from None


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment; ``set`` may repeat."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key in ("set", "set2"):
                out.setdefault(key, []).extend(v.strip() for v in value.split(",") if v.strip())
            else:
                out[key] = value
    return out


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common options")
    g.add_argument("--config", help="key = value file; flags override it")
    g.add_argument("--system", choices=SYSTEM_NAMES, help="system name (default silnikov)")
    g.add_argument("--set", action="append", default=None, metavar="K=V",
                   help="parameter override, repeatable")
    g.add_argument("--seed", help="initial state, comma separated")
    g.add_argument("--T", type=float, help="window length / sampling interval")
    g.add_argument("--m", type=int, help="number of windows / samples")
    g.add_argument("--transient", type=float, help="time discarded before analysis")
    g.add_argument("--tol-abs", type=float, help="absolute integration tolerance")
    g.add_argument("--tol-rel", type=float, help="relative integration tolerance")
    g.add_argument("--out", help="output directory (default .)")
    g.add_argument("--views", help=f"comma list from {','.join(VIEWS)}")
    g.add_argument("--workers", type=int, help="worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aportrait", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("exponents", help="windowed exponent report")
    _common(p)
    p.add_argument("--methods", help=f"comma list from {','.join(METHODS)}")
    p.add_argument("--node-order", choices=("modulus", "real"),
                   help="eigenvalue ranking at quadrature nodes for LE_V")

    p = sub.add_parser("period", help="detect a closed orbit")
    _common(p)
    p.add_argument("--closure-tol", type=float, help="closure tolerance (default 1e-6)")
    p.add_argument("--max-time", type=float, help="search budget after the transient")
    p.add_argument("--crossings", action="store_true", default=None, help="write crossings.csv")

    p = sub.add_parser("portrait", help="build an A-portrait document and SVG views")
    _common(p)
    p.add_argument("--scale", help="half length per unit |eigenvalue|, or 'auto'")

    p = sub.add_parser("sweep", help="parameter sweep with symmetric seeds")
    _common(p)
    p.add_argument("--param", help="parameter to sweep (default b)")
    p.add_argument("--values", help="comma separated parameter values")
    p.add_argument("--methods", help="exponent methods per row (default GFE)")
    p.add_argument("--match-tol", type=float, help="cycle clustering tolerance (default 1e-3)")
    p.add_argument("--max-time", type=float, help="period search budget per seed")

    p = sub.add_parser("compare", help="hidden-structure comparison")
    _common(p)
    p.add_argument("--set2", action="append", default=None, metavar="K=V",
                   help="override for the periodic run, repeatable")
    p.add_argument("--component", help="component index or name x/y/z (default x)")
    p.add_argument("--span", type=float, help="comparison span (default 1000)")
    return parser


_FLOAT_KEYS = {"T", "transient", "tol_abs", "tol_rel", "closure_tol", "max_time", "match_tol",
               "span"}
_INT_KEYS = {"m", "workers"}


def _merge(ns: argparse.Namespace) -> dict:
    """Flags over config file over defaults; returns a plain dict."""
    opts = {k: v for k, v in vars(ns).items()}
    if ns.config:
        try:
            cfg = read_config(ns.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        known = set(opts)
        for key, value in cfg.items():
            if key not in known or key in ("command", "config"):
                raise UsageError(f"unknown config key {key!r}")
            if key in ("set", "set2"):
                merged = list(value if isinstance(value, list) else [value])
                opts[key] = merged + list(opts.get(key) or [])
                continue
            if opts.get(key) is not None:
                continue
            if key in _FLOAT_KEYS:
                value = float(value)
            elif key in _INT_KEYS:
                value = int(value)
            elif key == "crossings":
                value = value.lower() in ("1", "true", "yes", "on")
            opts[key] = value
    return opts


def resolve(argv=None) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    opts = _merge(ns)
    system = opts.get("system") or "silnikov"
    if system not in SYSTEM_NAMES:
        raise UsageError(f"unknown system {system!r}")
    params = dict(_parse_assignment(s) for s in (opts.get("set") or []))
    sysdef = lookup_system(system, params)       # validates keys and values early
    if opts.get("seed"):
        seed = _floats(opts["seed"], "--seed")
    else:
        seed = DEFAULT_SEEDS[system]
    if len(seed) != sysdef.dimension:
        raise UsageError(f"seed needs {sysdef.dimension} components for {system}")
    T = opts.get("T")
    if T is not None and not T > 0:
        raise UsageError("--T must be positive")
    m = opts.get("m")
    if m is not None and m < 0:
        raise UsageError("--m must be non-negative")
    transient = opts.get("transient")
    if transient is not None and transient < 0:
        raise UsageError("--transient must be non-negative")
    ctl = {}
    if opts.get("tol_abs") is not None:
        ctl["atol"] = opts["tol_abs"]
    if opts.get("tol_rel") is not None:
        ctl["rtol"] = opts["tol_rel"]
    control = Control(**ctl)
    views = tuple(v.strip() for v in (opts.get("views") or "xy").split(",") if v.strip())
    for v in views:
        if v not in VIEWS:
            raise UsageError(f"unknown view {v!r}; choose from {','.join(VIEWS)}")
    workers = opts.get("workers") or 1
    if workers < 1:
        raise UsageError("--workers must be at least 1")
    common = {"config", "system", "set", "seed", "T", "m", "transient", "tol_abs", "tol_rel",
              "out", "views", "workers", "command"}
    extra = {k: v for k, v in opts.items() if k not in common}
    return RunConfig(ns.command, system, params, tuple(seed), T,
                     1 if m is None else m, transient, control, opts.get("out") or ".",
                     views, workers, extra)


# --------------------------------------------------------------- commands

def _write(cfg: RunConfig, name: str, text: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _methods(text, default):
    if not text:
        return default
    ms = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in ms if s not in METHODS]
    if bad:
        raise UsageError(f"unknown methods {bad}; choose from {','.join(METHODS)}")
    return ms


def cmd_exponents(cfg: RunConfig, stdout) -> int:
    sysdef = cfg.system_definition()
    methods = _methods(cfg.extra.get("methods"), METHODS)
    node_order = cfg.extra.get("node_order") or "modulus"
    if cfg.T is None:
        transient = ORBIT_TRANSIENT if cfg.transient is None else cfg.transient
        diag = detect_period(sysdef, cfg.seed, transient=transient, control=cfg.control)
        if diag.classification != CLOSED:
            print(f"error: no --T given and the orbit did not close ({diag.describe()})",
                  file=sys.stderr)
            return 2
        print(f"window = period {diag.period:.6f} (rotation {diag.rotation})", file=stdout)
        plan = WindowPlan(diag.period, 1, diag.t_ref, 0.0)
        y0 = diag.reference
    else:
        if cfg.m < 1:
            raise UsageError("--m must be at least 1 for exponents")
        plan = WindowPlan(cfg.T, cfg.m, 0.0, cfg.transient or 0.0)
        y0 = cfg.seed
    report = exponent_suite(sysdef, y0, plan, methods, cfg.control, node_order)
    _write(cfg, "exponents.csv", report.to_csv())
    _write(cfg, "exponents.json", report.to_json())
    print(f"{sysdef.describe()}  T={plan.T:.6g} m={plan.m}", file=stdout)
    print(report.table(), file=stdout)
    return 0


def cmd_period(cfg: RunConfig, stdout) -> int:
    sysdef = cfg.system_definition()
    kw = {"transient": ORBIT_TRANSIENT if cfg.transient is None else cfg.transient,
          "control": cfg.control}
    if cfg.extra.get("closure_tol") is not None:
        kw["closure_tol"] = cfg.extra["closure_tol"]
    if cfg.extra.get("max_time") is not None:
        kw["max_time"] = cfg.extra["max_time"]
    diag = detect_period(sysdef, cfg.seed, **kw)
    print(f"classification: {diag.classification}", file=stdout)
    if diag.closed:
        print(f"period: {diag.period:.6f}", file=stdout)
        print(f"rotation: {diag.rotation}", file=stdout)
        print(f"closure residual: {diag.residual:.3g}", file=stdout)
    print("reference: " + ", ".join(f"{v:.6g}" for v in diag.reference), file=stdout)
    if cfg.extra.get("crossings"):
        _write(cfg, "crossings.csv", crossings_to_csv(diag.crossings, sysdef.dimension))
    return 0


def cmd_portrait(cfg: RunConfig, stdout) -> int:
    sysdef = cfg.system_definition()
    for v in cfg.views:
        if np.linalg.matrix_rank(VIEWS[v][:, :sysdef.dimension]) < 2:
            raise UsageError(f"view {v!r} is degenerate for a {sysdef.dimension}-d system")
    scale = cfg.extra.get("scale") or "auto"
    if scale != "auto":
        try:
            scale = float(scale)
        except ValueError:
            raise UsageError("--scale must be a number or 'auto'") from None
    T = 0.4 if cfg.T is None else cfg.T
    transient = PORTRAIT_TRANSIENT if cfg.transient is None else cfg.transient
    plan = sample_plan(T, cfg.m, 0.0, transient)
    doc = build_portrait(sysdef, cfg.seed, plan, scale, control=cfg.control)
    _write(cfg, "portrait.json", doc.to_json())
    for v in cfg.views:
        _write(cfg, f"portrait_{v}.svg", render_svg(doc, v))
    counts = doc.polarity_counts()
    print(f"{len(doc.samples)} samples, scale {doc.scale:.6g}; segments: "
          + ", ".join(f"{k} {counts[k]}" for k in sorted(counts)), file=stdout)
    return 0


def _sweep_row(args):
    system, params, param, value, seeds, methods, kw, match_tol = args
    cells = {"value": value}
    try:
        sysdef = lookup_system(system, {**params, param: value})
        cc = count_distinct_cycles(sysdef, seeds, match_tol, **kw)
        if cc.count:
            d = cc.representatives[0]
            cells.update(classification=d.classification, period=d.period,
                         rotation=d.rotation, cycles=cc.count)
            for meth_vals in _row_exponents(sysdef, d, methods, kw["control"]):
                cells.update(meth_vals)
        else:
            d = cc.excluded[0][1]
            cells.update(classification=d.classification, cycles=0)
            if d.classification == "unresolved" and methods:
                plan = WindowPlan(20.0, 50, d.t_ref, 0.0)
                rep = exponent_suite(sysdef, d.reference, plan, methods, kw["control"])
                cells.update(_flatten(rep.averages))
        cells["status"] = "ok"
    except (IntegrationError, ValueError, np.linalg.LinAlgError) as exc:
        cells["status"] = f"error: {exc}"
    return cells


def _flatten(averages):
    return {f"{m}_c{i + 1}": float(v) for m, arr in averages.items() for i, v in enumerate(arr)}


def _row_exponents(sysdef, diag, methods, control):
    if not methods:
        return []
    rep = exponent_suite(sysdef, diag.reference, WindowPlan(diag.period, 1, diag.t_ref),
                         methods, control)
    return [_flatten(rep.averages)]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_sweep(cfg: RunConfig, stdout) -> int:
    sysdef = cfg.system_definition()
    param = cfg.extra.get("param") or "b"
    if param not in sysdef.parameters:
        raise UsageError(f"{cfg.system} has no parameter {param!r}")
    values = _floats(cfg.extra.get("values") or "", "--values")
    methods = _methods(cfg.extra.get("methods"), ("GFE",))
    seed = np.asarray(cfg.seed)
    seeds = [seed, -seed] if np.any(seed) else [seed]
    kw = {"transient": ORBIT_TRANSIENT if cfg.transient is None else cfg.transient,
          "control": cfg.control}
    if cfg.extra.get("max_time") is not None:
        kw["max_time"] = cfg.extra["max_time"]
    match_tol = cfg.extra.get("match_tol") or 1e-3
    jobs = [(cfg.system, cfg.parameters, param, v, seeds, methods, kw, match_tol)
            for v in values]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))       # map keeps input order
    else:
        rows = [_sweep_row(j) for j in jobs]
    comps = [f"{m}_c{i + 1}" for m in methods for i in range(sysdef.dimension)]
    header = [param, "classification", "period", "rotation", "cycles"] + comps + ["status"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get("value"))] + [_fmt(r.get(k)) for k in header[1:]])
    _write(cfg, "sweep.csv", buf.getvalue())
    stdout.write(buf.getvalue())
    return 0


def _component(text, dimension):
    names = {"x": 0, "y": 1, "z": 2}
    if text is None:
        return 0
    idx = names.get(text.lower()) if not text.isdigit() else int(text)
    if idx is None or not 0 <= idx < dimension:
        raise UsageError(f"bad component {text!r}")
    return idx


def cmd_compare(cfg: RunConfig, stdout) -> int:
    chaotic_sys = cfg.system_definition()
    periodic_sys = cfg.system_definition(dict(_parse_assignment(s)
                                              for s in (cfg.extra.get("set2") or [])))
    comp = _component(cfg.extra.get("component"), chaotic_sys.dimension)
    span = cfg.extra.get("span") or 1000.0
    transient = ORBIT_TRANSIENT if cfg.transient is None else cfg.transient
    diag = detect_period(periodic_sys, cfg.seed, transient=transient, control=cfg.control)
    if not diag.closed:
        print(f"error: periodic run did not close ({diag.describe()})", file=sys.stderr)
        return 2
    periodic = integrate(periodic_sys, diag.reference, 0.0, diag.period, cfg.control)
    start = advance(chaotic_sys, cfg.seed, 0.0, transient, cfg.control)
    chaotic = integrate(chaotic_sys, start, transient, transient + span, cfg.control)
    res = hidden_structure_compare(chaotic, periodic, comp, diag.period, span=span)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "chaotic", "periodic", "shift", "score"])
    for t, a, b in zip(res.times, res.chaotic, res.periodic):
        w.writerow([_fmt(float(t)), _fmt(float(a)), _fmt(float(b)), _fmt(res.shift),
                    _fmt(res.score)])
    _write(cfg, "compare.csv", buf.getvalue())
    print(f"periodic orbit: period {diag.period:.6f}, rotation {diag.rotation}", file=stdout)
    print(f"best shift {res.shift:.6g}, score {res.score:.6g}", file=stdout)
    return 0


COMMANDS = {"exponents": cmd_exponents, "period": cmd_period, "portrait": cmd_portrait,
            "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        cfg = resolve(argv)
        return COMMANDS[cfg.command](cfg, stdout)
    except UsageError as exc:
        print(f"aportrait: error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"aportrait: integration failed: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"aportrait: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"aportrait: cannot write output: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
