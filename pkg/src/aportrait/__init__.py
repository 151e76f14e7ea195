"""
aportrait: exponents, closed orbits and attractiveness portraits for small ODE systems.

The package covers low-dimensional (2-d and 3-d) autonomous and periodically
forced systems:

* :mod:`aportrait.systems` vector fields, analytic Jacobians and a registry
* :mod:`aportrait.integrator` Dormand-Prince 5(4) with dense output and the
  variational equation
* :mod:`aportrait.smalleig` closed-form 2x2 / 3x3 eigen-decomposition
* :mod:`aportrait.exponents` windowed LE_J, LE_O, LE_V and generalized
  Floquet exponents
* :mod:`aportrait.orbit` Poincaré sections, period detection, cycle counting
* :mod:`aportrait.portrait` A-portrait documents, SVG projection and phase
  comparison
"""
from .systems import SYSTEM_NAMES, SystemDefinition, lookup_system, eval_field, eval_jacobian
from .integrator import (BlowUpError, Control, FundamentalMatrix, IntegrationError,
                         StiffnessError, Trajectory, advance, integrate,
                         integrate_with_fundamental, rk4_fixed)
from .smalleig import eigen, eigvals, floquet_from_monodromy
from .exponents import (METHODS, ExponentReport, WindowPlan, exponent_suite, sign_signature,
                        window_gfe, window_le_j, window_le_o, window_le_v)
from .orbit import (OrbitDiagnosis, SectionSpec, count_distinct_cycles, detect_period,
                    find_crossings)
from .portrait import (PortraitDocument, build_portrait, hidden_structure_compare,
                       portrait_at, render_svg, sample_plan)

__version__ = "0.1.0"

__all__ = [
    "SYSTEM_NAMES", "SystemDefinition", "lookup_system", "eval_field", "eval_jacobian",
    "BlowUpError", "Control", "FundamentalMatrix", "IntegrationError", "StiffnessError",
    "Trajectory", "advance", "integrate", "integrate_with_fundamental", "rk4_fixed",
    "eigen", "eigvals", "floquet_from_monodromy",
    "METHODS", "ExponentReport", "WindowPlan", "exponent_suite", "sign_signature",
    "window_gfe", "window_le_j", "window_le_o", "window_le_v",
    "OrbitDiagnosis", "SectionSpec", "count_distinct_cycles", "detect_period",
    "find_crossings",
    "PortraitDocument", "build_portrait", "hidden_structure_compare", "portrait_at",
    "render_svg", "sample_plan",
]
