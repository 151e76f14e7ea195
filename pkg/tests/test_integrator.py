import math

import numpy as np
import pytest

from aportrait.integrator import (BlowUpError, Control, integrate, integrate_with_fundamental,
                                  liouville_check, rk4_fixed, simpson_nodes, advance)
from aportrait.systems import SYSTEM_NAMES, lookup_system

from oracles import circle_exact, lorenz, rk4, rosenbrock_solution

SEEDS = {"silnikov": [0.1, 0, 0], "lorenz": [1, 1, 1], "circle": [2, 0], "vanderpol": [2, 0],
         "nosehoover_new": [-2.25, 0, 0], "nosehoover_classic": [0, 1, 0],
         "rosenbrock": [1, 0]}


def test_circle_matches_exact_solution():
    s = lookup_system("circle")
    tr = integrate(s, [2.0, 0.0], 0.0, 10.0)
    for t in (0.3, 1.7, 5.0, 10.0):
        assert np.allclose(tr(t), circle_exact(t, 2.0), atol=1e-8)


def test_rosenbrock_matches_closed_form():
    s = lookup_system("rosenbrock")
    y0 = rosenbrock_solution(0.0, 1.0, 0.5)
    tr = integrate(s, y0, 0.0, 2.0)
    exact = rosenbrock_solution(2.0, 1.0, 0.5)
    assert np.allclose(tr.end, exact, rtol=1e-8)


def test_lorenz_short_run_matches_rk4_oracle():
    s = lookup_system("lorenz")
    y = advance(s, [1.0, 1.0, 1.0], 0.0, 2.0)
    ref = rk4(lorenz, [1.0, 1.0, 1.0], 0.0, 2.0, 20000)
    assert np.allclose(y, ref, atol=1e-6)


def test_rk4_fixed_agrees_with_dopri():
    s = lookup_system("silnikov")
    a = rk4_fixed(s, [0.1, 0, 0], 0.0, 20.0, 1e-3)
    b = integrate(s, [0.1, 0, 0], 0.0, 20.0)
    assert np.allclose(a.end, b.end, atol=1e-8)
    ts = np.linspace(0, 20, 41)
    assert np.allclose(a(ts), b(ts), atol=1e-7)


def test_dense_output_hits_stored_states_exactly():
    s = lookup_system("lorenz")
    tr = integrate(s, [1, 1, 1], 0.0, 3.0)
    assert np.array_equal(tr(tr.times[5:9]), tr.states[5:9])
    with pytest.raises(ValueError):
        tr(3.5)


def test_dense_output_accuracy_between_steps():
    s = lookup_system("circle")
    tr = integrate(s, [0.5, 0.0], 0.0, 4.0)
    mids = 0.5 * (tr.times[1:] + tr.times[:-1])
    err = max(np.abs(tr(t) - circle_exact(t, 0.5)).max() for t in mids[::3])
    assert err < 1e-7


@pytest.mark.parametrize("name", SYSTEM_NAMES)
def test_liouville_identity(name):
    s = lookup_system(name)
    # Lorenz shrinks volume by e^(-41/3) per time unit, so det(Phi) leaves the
    # resolvable range of its entries quickly
    span = {"rosenbrock": math.pi / 3, "lorenz": 0.5}.get(name, 3.0)
    tr, Phi = integrate_with_fundamental(s, SEEDS[name], 0.0, span)
    assert liouville_check(s, tr, Phi) <= 1e-6 * span


def test_monodromy_composition():
    s = lookup_system("silnikov", {"b": 0.6})
    y0 = np.array([0.3, -0.1, 0.2])
    tr1, P1 = integrate_with_fundamental(s, y0, 0.0, 2.0)
    tr2, P2 = integrate_with_fundamental(s, tr1.end, 2.0, 5.0)
    _, P = integrate_with_fundamental(s, y0, 0.0, 5.0)
    assert np.allclose(P2.Phi @ P1.Phi, P.Phi, atol=1e-8)


def test_zero_span_fundamental_is_identity():
    s = lookup_system("lorenz")
    tr, P = integrate_with_fundamental(s, [1, 2, 3], 1.0, 1.0)
    assert np.array_equal(P.Phi, np.eye(3)) and len(tr) == 1


def test_blow_up_reports_time():
    s = lookup_system("silnikov")
    with pytest.raises(BlowUpError) as info:
        integrate(s, [3.0, 0.0, 0.0], 0.0, 50.0)
    assert 0.0 < info.value.t < 50.0


def test_control_validation_and_span():
    with pytest.raises(ValueError):
        Control(rtol=-1.0)
    with pytest.raises(ValueError):
        integrate(lookup_system("lorenz"), [1, 1, 1], 1.0, 0.5)


def test_simpson_integrates_cubics_exactly():
    ts, w = simpson_nodes(0.0, 2.0, 3)
    assert np.dot(w, ts ** 3 - ts) == pytest.approx(4.0 - 2.0, abs=1e-13)
