import pickle

import numpy as np
import pytest

from aportrait.systems import (SYSTEM_NAMES, eval_divergence, eval_field, eval_jacobian,
                               field_along, jacobian_along, lookup_system)


def _fd_jacobian(sys, y, t=0.0, h=1e-6):
    n = len(y)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (eval_field(sys, y + e, t) - eval_field(sys, y - e, t)) / (2 * h)
    return J


@pytest.mark.parametrize("name", SYSTEM_NAMES)
def test_jacobian_matches_finite_differences(name):
    sys = lookup_system(name)
    rng = np.random.default_rng(11)
    for _ in range(20):
        y = rng.uniform(-2, 2, sys.dimension)
        t = rng.uniform(0, 3)
        J = eval_jacobian(sys, y, t)
        assert np.allclose(J, _fd_jacobian(sys, y, t), atol=1e-6, rtol=0)


def test_defaults_and_overrides():
    s = lookup_system("silnikov", {"b": 0.6})
    assert dict(s.parameters) == {"a": 1.0, "b": 0.6}
    assert s.dimension == 3 and s.autonomous
    assert not lookup_system("rosenbrock").autonomous
    assert s.describe() == "silnikov(a=1, b=0.6)"


@pytest.mark.parametrize("name,over", [("nope", {}), ("lorenz", {"gamma": 1.0}),
                                       ("silnikov", {"b": float("nan")})])
def test_lookup_errors(name, over):
    with pytest.raises(ValueError):
        lookup_system(name, over)


def test_state_dimension_checked():
    with pytest.raises(ValueError):
        eval_field(lookup_system("lorenz"), [1.0, 2.0])


def test_lorenz_divergence_constant():
    s = lookup_system("lorenz")
    for y in ([1, 2, 3], [-5, 0.1, 40]):
        assert eval_divergence(s, y) == pytest.approx(-41 / 3, abs=1e-12)


def test_silnikov_field_values():
    s = lookup_system("silnikov", {"a": 1.0, "b": 0.8})
    assert np.allclose(eval_field(s, [2.0, 1.0, 0.5]), [1.0, 0.5, 8 - 2 - 1 - 0.4])


def test_circle_cycle_is_invariant():
    s = lookup_system("circle")
    th = np.linspace(0, 2 * np.pi, 9)
    ys = np.column_stack([np.cos(th), np.sin(th)])
    f = field_along(s, np.zeros(9), ys)
    # on the unit circle the field is tangent with unit speed
    assert np.allclose(np.einsum("ij,ij->i", f, ys), 0.0, atol=1e-14)
    assert np.allclose(np.linalg.norm(f, axis=1), 1.0)


def test_batch_agrees_with_pointwise():
    s = lookup_system("nosehoover_new")
    rng = np.random.default_rng(3)
    ys = rng.normal(size=(7, 3))
    Js = jacobian_along(s, np.zeros(7), ys)
    for y, J in zip(ys, Js):
        assert np.array_equal(J, eval_jacobian(s, y))


def test_pickle_and_equality():
    s = lookup_system("lorenz", {"rho": 24.0})
    s2 = pickle.loads(pickle.dumps(s))
    assert s2 == s and hash(s2) == hash(s)
    assert s != lookup_system("lorenz")
