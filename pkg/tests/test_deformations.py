"""Tests for the projective one-form deformation and the rotational
dual-norm perturbation of the sphere."""

import math

import numpy as np
import pytest

from fanning_lab import deformations as df
from fanning_lab import jacobi as jb
from fanning_lab import metrics as mx
from fanning_lab import numkit as nk
from fanning_lab.errors import SmallnessViolation


def pp(x, y):
    return mx.PhasePoint(np.asarray(x, float), np.asarray(y, float))


def constant_form(c):
    c = tuple(float(v) for v in c)

    def theta(x):
        return list(c)

    def potential(x):
        acc = c[0] * x[0]
        for i in range(1, len(c)):
            acc = acc + c[i] * x[i]
        return acc

    return df.ClosedOneForm(theta=theta, potential=potential)


def exact_form(scale=0.2):
    """Exact form with bounded dual norm on the whole sphere chart."""
    return df.ambient_coordinate_form(scale)


def nonclosed_form():
    def theta(x):
        return [x[1] * 0.5, -0.5 * x[0]]

    return df.ClosedOneForm(theta=theta, potential=lambda x: 0.0 * x[0])


# -- construction ---------------------------------------------------------------

def test_one_form_closedness_check():
    sphere = mx.zoo_metric("sphere")
    with pytest.raises(SmallnessViolation):
        df.projective_deform(sphere, nonclosed_form())


def test_one_form_consistency_helpers(rng):
    form = exact_form(0.2)
    xs = rng.uniform(-1, 1, size=(5, 2))
    assert form.closedness_residual(xs) < 1e-12
    assert form.gradient_matches_potential(xs) < 1e-12


def test_projective_smallness_violation():
    euclid = mx.zoo_metric("euclidean")
    with pytest.raises(SmallnessViolation):
        df.projective_deform(euclid, constant_form((1.4, 0.0)))


def test_projective_zero_form_is_identity(rng):
    sphere = mx.zoo_metric("sphere")
    deformed = df.projective_deform(sphere, constant_form((0.0, 0.0)))
    for _ in range(4):
        x = rng.uniform(-1, 1, size=2)
        y = rng.normal(size=2)
        assert deformed.F_value(x, y) == pytest.approx(
            sphere.F_value(x, y), rel=1e-14)


def test_projective_deform_is_randers_sum():
    euclid = mx.zoo_metric("euclidean")
    deformed = df.projective_deform(euclid, constant_form((0.3, 0.0)))
    assert deformed.family == "randers"
    x, y = [0.2, 0.1], [1.0, 2.0]
    assert deformed.F_value(x, y) == pytest.approx(
        math.sqrt(5.0) + 0.3, rel=1e-14)


def test_projective_geodesic_traces_coincide(rng):
    # deformed and base geodesics share their unparametrized traces
    sphere = mx.zoo_metric("sphere")
    form = exact_form(0.15)
    deformed = df.projective_deform(sphere, form)
    for _ in range(3):
        x0 = rng.uniform(-0.4, 0.4, size=2)
        y0 = rng.normal(size=2)
        SF = mx.spray(deformed)
        S0 = mx.spray(sphere)
        solF = nk.rk_integrate(lambda z: SF.value(z[:2], z[2:]),
                               np.concatenate([x0, y0 / deformed.F_value(x0, y0)]),
                               0.0, 0.8, 800)
        sol0 = nk.rk_integrate(lambda z: S0.value(z[:2], z[2:]),
                               np.concatenate([x0, y0 / sphere.F_value(x0, y0)]),
                               0.0, 1.2, 1200)
        trace0 = np.array([z[:2] for _, z in sol0])
        traceF = np.array([z[:2] for _, z in solF])

        def arclen(tr):
            seg = np.linalg.norm(np.diff(tr, axis=0), axis=1)
            return np.concatenate([[0.0], np.cumsum(seg)])

        s0, sF = arclen(trace0), arclen(traceF)
        keep = sF <= s0[-1]
        interp = np.stack([np.interp(sF[keep], s0, trace0[:, i])
                           for i in range(2)], axis=1)
        dist = np.max(np.linalg.norm(traceF[keep] - interp, axis=1))
        assert dist < 1e-5


def test_pushforward_of_deformed_spray(rng):
    # the spray of the deformed metric, carried over by the correspondence
    # of unit spheres, is phi times the base spray
    base = mx.zoo_metric("sphere")
    form = exact_form(0.15)
    deformed = df.projective_deform(base, form)
    S0 = mx.spray(base)
    SF = mx.spray(deformed)
    for _ in range(3):
        x = rng.uniform(-0.4, 0.4, size=2)
        y = rng.normal(size=2)
        y = y / deformed.F_value(x, y)
        v = pp(x, y)
        th = np.array(form.theta(list(x)), float)
        xi = mx.legendre(deformed, v) - th
        u = mx.legendre_inverse(base, x, xi, warm=y)
        assert base.F_value(x, u) == pytest.approx(1.0, abs=1e-9)

        # numeric directional derivative of the unit-sphere correspondence
        # along the deformed spray
        vec = SF.value(x, y)
        h = 1e-6
        z0 = np.concatenate([x, y])

        def psi_of(z):
            vv = pp(z[:2], z[2:])
            th_z = np.array(form.theta(list(z[:2])), float)
            xi_z = mx.legendre(deformed, vv) - th_z
            u_z = mx.legendre_inverse(base, z[:2], xi_z, warm=z[2:])
            return np.concatenate([z[:2], u_z])

        dpsi = (psi_of(z0 + h * vec) - psi_of(z0 - h * vec)) / (2 * h)
        phi = 1.0 / (1.0 + th @ u)
        expected = phi * S0.value(x, u)
        assert np.max(np.abs(dpsi - expected)) < 1e-6


def test_unit_covectors_shift(rng):
    # unit covectors of the deformed metric are theta plus base unit covectors
    base = mx.zoo_metric("sphere")
    form = exact_form(0.15)
    deformed = df.projective_deform(base, form)
    for _ in range(4):
        x = rng.uniform(-0.5, 0.5, size=2)
        y = rng.normal(size=2)
        y = y / deformed.F_value(x, y)
        xi = mx.legendre(deformed, pp(x, y))
        th = np.array(form.theta(list(x)), float)
        assert mx.conorm(base, x, xi - th) == pytest.approx(1.0, abs=1e-8)


def test_projective_rhs_zero_form_reduces_to_base_curvature(rng):
    sphere = mx.zoo_metric("sphere")
    form = constant_form((0.0, 0.0))
    x = rng.uniform(-0.5, 0.5, size=2)
    y = rng.normal(size=2)
    u = rng.normal(size=2)
    rhs = df.projective_curvature_rhs(sphere, form, pp(x, y), u)
    assert rhs == pytest.approx(1.0, abs=1e-4)


def test_projective_euclidean_constant_form_flat(rng):
    euclid = mx.zoo_metric("euclidean")
    form = constant_form((0.3, 0.0))
    deformed = df.projective_deform(euclid, form)
    for _ in range(3):
        x = rng.uniform(-1, 1, size=2)
        y = rng.normal(size=2)
        u = rng.normal(size=2)
        K_direct = jb.flag_curvature(deformed, pp(x, y), u)
        rhs = df.projective_curvature_rhs(euclid, form, pp(x, y), u)
        assert abs(K_direct) < 1e-6
        assert abs(rhs) < 1e-6


def test_projective_formula_on_sphere(rng):
    sphere = mx.zoo_metric("sphere")
    form = exact_form(0.2)
    deformed = df.projective_deform(sphere, form)
    for _ in range(3):
        x = rng.uniform(-0.5, 0.5, size=2)
        y = rng.normal(size=2)
        u = rng.normal(size=2)
        K_direct = jb.flag_curvature(deformed, pp(x, y), u)
        K_formula = df.projective_curvature_rhs(sphere, form, pp(x, y), u)
        assert abs(K_direct - K_formula) < 1e-3


# -- rotational perturbation --------------------------------------------------------

def test_rotation_field_is_killing(rng):
    sphere = mx.zoo_metric("sphere")
    xs = rng.uniform(-1.2, 1.2, size=(6, 2))
    assert df.killing_residual(sphere.g, df.rotation_field, xs) < 1e-10


def test_rotation_field_not_killing_for_anisotropic():
    def g(x):
        return [[1.0 + x[0] * x[0], 0.0], [0.0, 2.0]]

    xs = np.array([[0.4, 0.3]])
    assert df.killing_residual(g, df.rotation_field, xs) > 1e-3


def test_katok_smallness():
    with pytest.raises(SmallnessViolation):
        df.katok_metric(1.0)
    with pytest.raises(SmallnessViolation):
        df.katok_metric(-0.2)


def test_katok_eps_zero_is_round_sphere(rng):
    m = df.katok_metric(0.0)
    sphere = mx.zoo_metric("sphere")
    for _ in range(4):
        x = rng.uniform(-1, 1, size=2)
        y = rng.normal(size=2)
        assert m.F_value(x, y) == pytest.approx(sphere.F_value(x, y),
                                                rel=1e-10)


def test_katok_non_reversible():
    m = df.katok_metric(0.3)
    x = [0.7, 0.2]
    y = [1.0, 0.4]
    asym = abs(m.F_value(x, y) - m.F_value(x, [-y[0], -y[1]]))
    assert asym > 0.01


def test_katok_involution(rng):
    m = df.katok_metric(0.3)
    for _ in range(3):
        x = rng.uniform(-0.8, 0.8, size=2)
        xi = rng.normal(size=2)
        # dual of the dual: the conorm recovers the generating costar
        s = 1.0 + x @ x
        expected = (math.sqrt(xi @ xi) * s * 0.5
                    + 0.3 * (xi @ np.array(df.rotation_field(list(x)))))
        assert mx.conorm(m, x, xi) == pytest.approx(expected, rel=1e-7)


def test_katok_matches_zermelo_closed_form(rng):
    m = df.katok_metric(0.25)
    for _ in range(5):
        x = rng.uniform(-0.9, 0.9, size=2)
        v = rng.normal(size=2)
        assert m.F_value(x, v) == pytest.approx(
            df.katok_zermelo_cross_check(0.25, x, v), rel=1e-9)


def test_katok_curvature_stays_one(rng):
    flags = []
    for _ in range(4):
        flags.append((rng.uniform(-0.8, 0.8, size=2),
                      rng.normal(size=2), rng.normal(size=2)))
    dev = df.katok_curvature_check(0.3, flags)
    assert dev < 1e-3
