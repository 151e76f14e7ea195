"""Compare a chaotic signal with the periodic orbit it grew out of.

Just past b = 0.3341 the Silnikov flow is chaotic, but the x signal keeps
shadowing the 13-loop cycle found at b = 0.3341. The best time shift and the
correlation score quantify that resemblance over short and long spans.

    python3 demos/hidden_structure.py
"""
from aportrait import advance, detect_period, hidden_structure_compare, integrate, lookup_system

seed = [0.1, 0.0, 0.0]
periodic_sys = lookup_system("silnikov", {"a": 1.0, "b": 0.3341})
chaotic_sys = lookup_system("silnikov", {"a": 1.0, "b": 0.3342})

diag = detect_period(periodic_sys, seed)
print(diag.describe())
cycle = integrate(periodic_sys, diag.reference, diag.t_ref, diag.t_ref + diag.period)

start = advance(chaotic_sys, seed, 0.0, 500.0)
for span in (100.0, 200.0, 1000.0):
    chaotic = integrate(chaotic_sys, start, 500.0, 500.0 + span)
    res = hidden_structure_compare(chaotic, cycle, 0, diag.period)
    print(f"span {span:6.0f}: shift {res.shift:.4f}, score {res.score:.4f}")
