"""Coexisting structures of the Nose-Hoover oscillator variant at eps = 0.42.

Two seeds stay on bounded tori and a third seed settles onto a limit cycle.
Each gets an A-portrait summary.

    python3 demos/nose_hoover.py
"""
import numpy as np

from aportrait import WindowPlan, build_portrait, detect_period, integrate, lookup_system

nh = lookup_system("nosehoover_new", {"eps": 0.42})

for seed in ([-2.25, 0.0, 0.0], [2.53, 0.0, 0.0]):
    tr = integrate(nh, seed, 0.0, 8000.0)
    doc = build_portrait(nh, seed, WindowPlan(0.5, 2000))
    print(f"torus from {seed}: max |state| {np.abs(tr.states).max():.3f}, "
          f"polarities {doc.polarity_counts()}")

diag = detect_period(nh, [0.0, 5.0, 0.0])
print(diag.describe())
if diag.closed:
    doc = build_portrait(nh, diag.reference, WindowPlan(diag.period / 200, 200, diag.t_ref))
    print(f"limit cycle polarities {doc.polarity_counts()}")
