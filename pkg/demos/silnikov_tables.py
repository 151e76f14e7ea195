"""Exponent tables for limit cycles of the Silnikov equation (a = 1).

For each b the closed orbit is detected from the seed (0.1, 0, 0) and the
four estimates are computed over exactly one period starting at the
orbit's reference point.

    python3 demos/silnikov_tables.py
"""
from aportrait import WindowPlan, detect_period, exponent_suite, lookup_system

for b in (0.8, 0.6, 0.5, 0.392):
    sys = lookup_system("silnikov", {"a": 1.0, "b": b})
    diag = detect_period(sys, [0.1, 0.0, 0.0])
    print(f"b = {b}: {diag.describe()}")
    if not diag.closed:
        continue
    report = exponent_suite(sys, diag.reference, WindowPlan(diag.period, 1, diag.t_ref))
    print(report.table())
    print()
