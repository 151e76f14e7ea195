"""Locate the symmetry-breaking point where two mirror cycles merge into one.

Symmetric seeds (0.1, 0, 0) and (-0.1, 0, 0) give two distinct closed orbits
below the boundary and a single symmetric orbit above it. A short bisection
brackets the boundary.

    python3 demos/bifurcation_sweep.py
"""
from aportrait import count_distinct_cycles, lookup_system

SEEDS = [[0.1, 0.0, 0.0], [-0.1, 0.0, 0.0]]


def cycles(b):
    return count_distinct_cycles(lookup_system("silnikov", {"a": 1.0, "b": b}), SEEDS).count


for b in (0.46, 0.48, 0.50, 0.52, 0.60):
    print(f"b = {b:.2f}  cycles = {cycles(b)}")

lo, hi = 0.48, 0.50
for _ in range(8):
    mid = 0.5 * (lo + hi)
    if cycles(mid) == 2:
        lo = mid
    else:
        hi = mid
print(f"boundary bracketed in [{lo:.5f}, {hi:.5f}]")
