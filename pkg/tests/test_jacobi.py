"""Tests for orbit transport, Jacobi frames, flag curvature and the oracle."""

import math

import numpy as np
import pytest

from fanning_lab import jacobi as jb
from fanning_lab import metrics as mx
from fanning_lab.errors import (DegenerateFlag, NotUnitSpeed, OutOfChart)


def pp(x, y):
    return mx.PhasePoint(np.asarray(x, float), np.asarray(y, float))


# -- transport ----------------------------------------------------------------

def test_transport_euclidean_linear_flow():
    m = mx.zoo_metric("euclidean")
    orbit = jb.transport(m, pp([0.0, 0.0], [1.0, 0.5]), T=1.0, resolution=100)
    for t in (-1.0, -0.4, 0.0, 0.3, 1.0):
        _, _, M = orbit.state(t)
        expected = np.block([[np.eye(2), t * np.eye(2)],
                             [np.zeros((2, 2)), np.eye(2)]])
        assert np.max(np.abs(M - expected)) < 1e-12


def test_transport_euclidean_flow_property():
    m = mx.zoo_metric("euclidean")
    v0 = pp([0.1, -0.2], [0.7, 0.2])
    orbit = jb.transport(m, v0, T=1.0, resolution=50)
    _, _, M_s = orbit.state(0.4)
    _, _, M_ts = orbit.state(0.9)
    x, y, _ = orbit.state(0.4)
    orbit2 = jb.transport(m, pp(x, y), T=0.6, resolution=50)
    _, _, M_t_at = orbit2.state(0.5)
    assert np.max(np.abs(M_ts - M_t_at @ M_s)) < 1e-12


def test_transport_out_of_chart():
    m = mx.riemannian_metric(lambda x: [[1.0, 0.0], [0.0, 1.0]], 2,
                             mx.Box.cube(2, 0.5))
    with pytest.raises(OutOfChart):
        jb.transport(m, pp([0.0, 0.0], [1.0, 0.0]), T=1.0, resolution=100)


def test_transport_symplecticity_drift_sphere():
    m = mx.zoo_metric("sphere")
    v0 = pp([0.1, 0.3], [0.45, -0.1])
    orbit = jb.transport(m, v0, T=2.0, resolution=2000)
    O0 = orbit.omega.Omega
    worst = 0.0
    for t in (0.5, 1.0, 2.0, -1.5, -2.0):
        x, y, M = orbit.state(t)
        Ot = mx.omega_matrix(m, pp(x, y))
        worst = max(worst, float(np.max(np.abs(M.T @ Ot @ M - O0))))
    assert worst < 1e-7


def test_transport_energy_conservation():
    m = mx.zoo_metric("randers", b=(0.2, -0.1))
    v0 = pp([0.0, 0.0], [0.8, 0.6])
    orbit = jb.transport(m, v0, T=1.0, resolution=2000)
    f0 = m.F_value(v0.x, v0.y)
    for t in np.linspace(-1.0, 1.0, 9):
        x, y, _ = orbit.state(float(t))
        assert abs(m.F_value(x, y) - f0) < 1e-7


# -- Jacobi frames --------------------------------------------------------------

def test_jacobi_frame_euclidean_closed_form():
    m = mx.zoo_metric("euclidean")
    orbit = jb.transport(m, pp([0.0, 0.0], [1.0, 0.0]), T=0.5, resolution=200)
    for t in (0.0, 0.2, -0.3):
        sample = jb.jacobi_frame(orbit, t)
        expected = np.vstack([-t * np.eye(2), np.eye(2)])
        assert np.max(np.abs(sample.frames.center.A - expected)) < 1e-10
        assert np.max(np.abs(sample.invariants.K)) < 1e-8


def test_jacobi_frame_initial_plane_is_vertical():
    m = mx.zoo_metric("sphere")
    orbit = jb.transport(m, pp([0.2, 0.1], [0.5, -0.3]), T=0.01)
    A = jb.jacobi_frame(orbit, 0.0).frames.center.A
    assert np.max(np.abs(A - np.vstack([np.zeros((2, 2)), np.eye(2)]))) < 1e-12


def test_wronskian_at_zero_equals_fundamental_tensor():
    m = mx.zoo_metric("sphere")
    v0 = pp([0.3, -0.1], [0.7, 0.2])
    orbit = jb.transport(m, v0, T=0.01)
    W = jb.jacobi_frame(orbit, 0.0).invariants.W
    g = mx.fundamental_tensor(m, v0)
    assert np.max(np.abs(W - g)) < 1e-8


def test_wronskian_matches_fundamental_tensor_along_orbit():
    # the Wronskian of the Jacobi curve, read in the transported vertical
    # basis, reproduces the fundamental tensor at the moving point
    for mid, kw in (("sphere", {}), ("randers", {"b": (0.25, 0.05)})):
        m = mx.zoo_metric(mid, **kw)
        v0 = pp([0.05, 0.1], [0.55, 0.15])
        orbit = jb.transport(m, v0, T=1.0, resolution=2000)
        for t in (0.0, 0.33, 0.8):
            inv = jb.jacobi_frame(orbit, t).invariants
            x, y, _ = orbit.state(t)
            g = mx.fundamental_tensor(m, pp(x, y))
            assert np.max(np.abs(inv.W - g)) < 1e-6


# -- flag curvature -------------------------------------------------------------

def test_flag_curvature_euclidean_zero(rng):
    m = mx.zoo_metric("euclidean")
    for _ in range(4):
        x = rng.uniform(-1, 1, size=2)
        y = rng.normal(size=2)
        u = rng.normal(size=2)
        K = jb.flag_curvature(m, pp(x, y), u)
        assert abs(K) < 1e-8


def test_flag_curvature_sphere_plus_one(rng):
    m = mx.zoo_metric("sphere")
    for _ in range(4):
        x = rng.uniform(-1.0, 1.0, size=2)
        y = rng.normal(size=2)
        u = rng.normal(size=2)
        K = jb.flag_curvature(m, pp(x, y), u)
        assert abs(K - 1.0) < 1e-4


def test_flag_curvature_poincare_minus_one(rng):
    m = mx.zoo_metric("hyperbolic")
    for _ in range(4):
        x = rng.uniform(-0.5, 0.5, size=2)
        y = rng.normal(size=2)
        u = rng.normal(size=2)
        K = jb.flag_curvature(m, pp(x, y), u)
        assert abs(K + 1.0) < 1e-4


def test_flag_curvature_degenerate_flag():
    m = mx.zoo_metric("euclidean")
    with pytest.raises(DegenerateFlag):
        jb.flag_curvature(m, pp([0.0, 0.0], [1.0, 1.0]), [2.0, 2.0])


def test_flag_curvature_representative_invariance(rng):
    m = mx.zoo_metric("riemannian-conformal", a=0.4, n=3)
    x = rng.uniform(-0.5, 0.5, size=3)
    y = rng.normal(size=3)
    u = rng.normal(size=3)
    v = pp(x, y)
    base = jb.flag_curvature(m, v, u)
    values = [
        jb.flag_curvature(m, v, 2.7 * u),
        jb.flag_curvature(m, v, u + 0.8 * y),
        jb.flag_curvature(m, pp(x, 1.9 * y), u),
    ]
    for val in values:
        assert abs(val - base) < 1e-6 * max(1.0, abs(base))


def test_flag_curvature_scaled_sphere():
    m = mx.zoo_metric("sphere", radius=2.0)
    K = jb.flag_curvature(m, pp([0.2, 0.1], [1.0, 0.4]), [0.0, 1.0])
    assert abs(K - 0.25) < 1e-4


# -- Riemann oracle ---------------------------------------------------------------

def test_riemann_oracle_flat():
    g = lambda x: [[1.0, 0.0], [0.0, 1.0]]
    assert abs(jb.riemann_oracle(g, [0.3, 0.4], [1.0, 0.2], [0.1, 1.0])) < 1e-9


def test_riemann_oracle_sphere_consistency(rng):
    m = mx.zoo_metric("sphere")
    vals = []
    for _ in range(5):
        x = rng.uniform(-1.0, 1.0, size=2)
        vals.append(jb.riemann_oracle(m.g, x, [1.0, 0.0], [0.0, 1.0]))
    vals = np.array(vals)
    assert np.max(np.abs(vals - 1.0)) < 1e-6
    assert vals.max() - vals.min() < 1e-6


def test_riemann_oracle_conformal_closed_form(rng):
    a = 0.5
    m = mx.zoo_metric("riemannian-conformal", a=a, n=3)
    for _ in range(3):
        x = rng.uniform(-0.5, 0.5, size=3)
        # plane orthogonal to the gradient direction: K = -a^2 e^{-2 a x1}
        got = jb.riemann_oracle(m.g, x, [0.0, 1.0, 0.0], [0.0, 0.0, 1.0])
        assert got == pytest.approx(-a * a * math.exp(-2 * a * x[0]), abs=1e-6)
        # plane containing the gradient direction: flat
        got = jb.riemann_oracle(m.g, x, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        assert abs(got) < 1e-6


def test_flag_curvature_matches_riemann_oracle_conformal(rng):
    m = mx.zoo_metric("riemannian-conformal", a=0.5, n=3)
    for _ in range(3):
        x = rng.uniform(-0.6, 0.6, size=3)
        y = rng.normal(size=3)
        u = rng.normal(size=3)
        K = jb.flag_curvature(m, pp(x, y), u)
        K_oracle = jb.riemann_oracle(m.g, x, y, u)
        scale = max(abs(K_oracle), 0.1)
        assert abs(K - K_oracle) / scale < 1e-3


def test_flag_curvature_time_invariance_sphere():
    m = mx.zoo_metric("sphere")
    v0 = pp([0.1, 0.2], [0.5, -0.2])
    orbit = jb.transport(m, v0, T=0.8, resolution=2000)
    vals = []
    for t in (0.0, 0.4, 0.8):
        x, y, _ = orbit.state(t)
        vals.append(jb.flag_curvature(m, pp(x, y), [-y[1], y[0]]))
    vals = np.array(vals)
    assert np.max(np.abs(vals - 1.0)) < 1e-4


# -- contact reduction ------------------------------------------------------------

def unit_vector(m, x, y):
    return np.asarray(y, float) / m.F_value(x, y)


def test_contact_reduce_needs_unit_speed():
    m = mx.zoo_metric("sphere")
    orbit = jb.transport(m, pp([0.0, 0.0], [1.0, 0.0]), T=0.05)
    with pytest.raises(NotUnitSpeed):
        jb.contact_reduce(orbit, 0.0)


def test_contact_reduce_r_at_zero_is_canonical():
    m = mx.zoo_metric("sphere")
    x = np.array([0.2, 0.0])
    y = unit_vector(m, x, [1.0, 0.3])
    orbit = jb.transport(m, pp(x, y), T=0.08)
    split = jb.contact_reduce(orbit, 0.0)
    assert np.allclose(split.r, np.concatenate([np.zeros(2), y]), atol=1e-12)


def test_contact_reduce_euclidean_exact():
    m = mx.zoo_metric("euclidean")
    x = np.array([0.0, 0.0])
    y = np.array([1.0, 0.0])
    orbit = jb.transport(m, pp(x, y), T=0.6, resolution=500)
    split = jb.contact_reduce(orbit, 0.5)
    assert split.kr_residual < 1e-8
    assert split.block_residual < 1e-8
    assert split.alpha_residual < 1e-10


def test_contact_reduce_sphere_identities():
    m = mx.zoo_metric("sphere")
    x = np.array([0.15, -0.1])
    y = unit_vector(m, x, [0.8, 0.25])
    orbit = jb.transport(m, pp(x, y), T=0.45, resolution=2000)
    split = jb.contact_reduce(orbit, 0.3)
    assert split.kr_residual < 1e-5
    assert split.block_residual < 1e-5
    assert split.w_residual < 1e-6
    assert split.alpha_residual < 1e-7
