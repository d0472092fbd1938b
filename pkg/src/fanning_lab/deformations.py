"""Curvature under two metric deformations: adding a closed one-form and
perturbing the dual norm by a rotational isometry field.

Adding a small closed one-form theta keeps the unparametrized geodesics and
changes the flag curvature by a Schwarzian-type correction built from the
derivatives of phi = 1/(1 + theta) along the unperturbed spray; the
correction is evaluated by two independent routes (stencil differentiation
of phi along a short integrated orbit, and the Schwarzian of
f(t) = t + h(gamma(t)) composed through a dual-number orbit jet) which must
agree to 1e-8 before a value is returned.

Perturbing the dual norm of the round sphere by a multiple of the rotation
generator produces the classical constant-curvature non-reversible metrics;
the metric is built numerically through the dual-norm machinery, with the
closed-form Randers expression kept as a cross-check only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jacobi as jb
from . import metrics as mx
from . import numkit as nk
from .errors import InternalInconsistency, SmallnessViolation

__all__ = [
    "ClosedOneForm",
    "KillingField",
    "projective_deform",
    "projective_curvature_rhs",
    "rotation_field",
    "killing_residual",
    "katok_metric",
    "katok_zermelo_cross_check",
    "katok_curvature_check",
]


@dataclass(frozen=True)
class ClosedOneForm:
    """A one-form given with an explicit primitive (theta = d potential)."""

    theta: Callable
    potential: Callable

    def closedness_residual(self, xs) -> float:
        """Max antisymmetry defect of the x-Jacobian of theta over samples."""
        worst = 0.0
        for x in xs:
            n = len(x)
            jac = np.zeros((n, n))
            for j in range(n):
                seed = [nk.Dual3(float(xi), 1.0 if i == j else 0.0)
                        for i, xi in enumerate(x)]
                th = self.theta(seed)
                for i in range(n):
                    v = th[i]
                    jac[i, j] = v.d1 if isinstance(v, nk.Dual3) else 0.0
            worst = max(worst, float(np.max(np.abs(jac - jac.T))))
        return worst

    def gradient_matches_potential(self, xs) -> float:
        """Max deviation between theta and the differential of the potential."""
        worst = 0.0
        for x in xs:
            n = len(x)
            th = np.array([nk.scalar_value(v) for v in self.theta(list(x))])
            grad = np.zeros(n)
            for j in range(n):
                seed = [nk.Dual3(float(xi), 1.0 if i == j else 0.0)
                        for i, xi in enumerate(x)]
                r = self.potential(seed)
                grad[j] = r.d1 if isinstance(r, nk.Dual3) else 0.0
            worst = max(worst, float(np.max(np.abs(grad - th))))
        return worst


def _validation_points(metric: mx.MetricSpec, points_per_axis: int = 5):
    return metric.domain.grid(points_per_axis)


def _check_smallness(base: mx.MetricSpec, form: ClosedOneForm,
                     points) -> float:
    """sup of the dual norm of theta over the sample grid (must stay < 1)."""
    worst = 0.0
    for x in points:
        th = np.array([nk.scalar_value(v) for v in form.theta(list(x))])
        if np.linalg.norm(th) == 0.0:
            continue
        worst = max(worst, mx.conorm(base, x, th))
    if worst >= 1.0:
        raise SmallnessViolation(
            f"dual norm of the one-form reaches {worst:.3f} >= 1 on the grid")
    return worst


def projective_deform(base: mx.MetricSpec, form: ClosedOneForm,
                      sample_points=None) -> mx.MetricSpec:
    """The deformed metric F = F0 + theta (Randers-type).

    Validates closedness of theta (1e-10 on samples) and the smallness
    condition sup F0*(theta) < 1 on a grid of the chart box.
    """
    points = (sample_points if sample_points is not None
              else _validation_points(base))
    res = form.closedness_residual(points[:: max(1, len(points) // 16)])
    if res > 1e-10:
        raise SmallnessViolation(
            f"one-form is not closed: antisymmetry defect {res:.2e}")
    _check_smallness(base, form, points)

    theta = form.theta
    if base.family == "riemannian":
        return mx.randers_metric(base.g, theta, base.n, base.domain,
                                 name=base.name + "+form")
    if base.family == "randers":
        beta0 = base.beta

        def beta(x):
            t = theta(x)
            b = beta0(x)
            return [bi + ti for bi, ti in zip(b, t)]

        return mx.randers_metric(base.g, beta, base.n, base.domain,
                                 name=base.name + "+form")

    F0 = base.F

    def F(xs, ys):
        th = theta(xs)
        lin = th[0] * ys[0]
        for i in range(1, base.n):
            lin = lin + th[i] * ys[i]
        return F0(xs, ys) + lin

    return mx.custom_metric(F, base.n, base.domain, name=base.name + "+form")


def ambient_coordinate_form(scale: float = 0.2) -> ClosedOneForm:
    """Exact one-form scale * d(X) with X the first ambient coordinate of the
    unit sphere, written in the stereographic chart: X = 2 x1 / (1 + |x|^2).

    Coordinate functions of the unit sphere are 1-Lipschitz for the round
    metric, so the dual norm of this form is at most |scale| everywhere on
    the chart.
    """

    def potential(x):
        s = 1.0 + x[0] * x[0] + x[1] * x[1]
        return scale * 2.0 * x[0] / s

    def theta(x):
        s = 1.0 + x[0] * x[0] + x[1] * x[1]
        inv = 1.0 / (s * s)
        return [scale * 2.0 * (1.0 + x[1] * x[1] - x[0] * x[0]) * inv,
                scale * (-4.0) * x[0] * x[1] * inv]

    return ClosedOneForm(theta=theta, potential=potential)


def _orbit_scalar_jet(base: mx.MetricSpec, x, y):
    """Third-order t-Taylor seeds of the geodesic through (x, y).

    x(t) to third order (the jerk uses the spray Jacobian), y(t) to second;
    scalars composed with these seeds therefore carry two honest t-derivatives,
    and three when they depend on x alone.
    """
    G, DS = mx.spray_data(base, x, y)
    field = np.concatenate([y, -2.0 * G])
    accel = -2.0 * G                      # xddot = ydot
    jerk = DS[base.n:, :] @ field         # xdddot = yddot = d/dt(-2G)
    xs = [nk.Dual3(float(xi), float(yi), float(ai), float(ji))
          for xi, yi, ai, ji in zip(x, y, accel, jerk)]
    ys = [nk.Dual3(float(yi), float(ai), float(ji), 0.0)
          for yi, ai, ji in zip(y, accel, jerk)]
    return xs, ys


def projective_curvature_rhs(base: mx.MetricSpec, form: ClosedOneForm,
                             v: mx.PhasePoint, u,
                             resolution: int = jb.DEFAULT_RESOLUTION) -> float:
    """Predicted flag curvature of F0 + theta from unperturbed data.

    Returns phi(u)^2 K0(u, plane) - (1/2)[(1/2) Sphi^2 - phi SSphi] where
    Sphi, SSphi are spray derivatives of phi = 1/(1 + theta) at the
    corresponding unit vector of the base metric.  The equivalent form
    through the Schwarzian of f(t) = t + potential(gamma(t)) is evaluated as
    well and both must agree to 1e-8.
    """
    deformed = projective_deform(base, form,
                                 sample_points=np.array([v.x]))
    x = np.asarray(v.x, dtype=float)
    y = np.asarray(v.y, dtype=float) / deformed.F_value(v.x, v.y)
    vv = mx.PhasePoint(x, y)

    gF = mx.fundamental_tensor(deformed, vv)
    u = np.asarray(u, dtype=float)
    w = u - (y @ gF @ u) / (y @ gF @ y) * y

    th = np.array([nk.scalar_value(z) for z in form.theta(list(x))])
    xi = mx.legendre(deformed, vv) - th
    u_psi = mx.legendre_inverse(base, x, xi, warm=y)
    g0 = mx.fundamental_tensor(base, mx.PhasePoint(x, u_psi))
    w_tilde = np.linalg.solve(g0, gF @ w)

    K0 = jb.flag_curvature(base, mx.PhasePoint(x, u_psi), w_tilde,
                           resolution=resolution)

    # spray derivatives of phi by stencil over a short integrated orbit
    S = mx.spray(base)
    h_phi = 3e-3
    stc = nk.Stencil(0.0, h_phi, 4)

    def phi_at(t):
        if t == 0.0:
            z = np.concatenate([x, u_psi])
        else:
            steps = max(4, int(math.ceil(abs(t) * resolution)))
            sol = nk.rk_integrate(lambda zz: S.value(zz[:base.n], zz[base.n:]),
                                  np.concatenate([x, u_psi]), 0.0, t, steps)
            z = sol[-1][1]
        th_z = np.array([nk.scalar_value(q)
                         for q in form.theta(list(z[:base.n]))])
        return 1.0 / (1.0 + th_z @ z[base.n:])

    samples = [np.array([phi_at(t)]) for t in stc.nodes]
    phi0 = samples[len(samples) // 2][0]
    Sphi = nk.central_derivative(samples, stc)[0]
    SSphi = nk.central_second_derivative(samples, stc)[0]
    rhs_phi = phi0 * phi0 * K0 - 0.5 * (0.5 * Sphi * Sphi - phi0 * SSphi)

    # same prediction through the Schwarzian of f(t) = t + h(gamma(t))
    xs, _ = _orbit_scalar_jet(base, x, u_psi)
    fjet = form.potential(xs)
    if not isinstance(fjet, nk.Dual3):
        fjet = nk.Dual3(fjet)
    fdot = 1.0 + fjet.d1
    fddot = fjet.d2
    fdddot = fjet.d3
    schw = fdddot / fdot - 1.5 * (fddot / fdot) ** 2
    rhs_f = (K0 - 0.5 * schw) / (fdot * fdot)

    if abs(rhs_phi - rhs_f) > 1e-8 * max(1.0, abs(rhs_phi)):
        raise InternalInconsistency(
            f"phi-form {rhs_phi} and f-form {rhs_f} disagree")
    return float(rhs_phi)


# ---------------------------------------------------------------------------
# rotational perturbation of the round sphere
# ---------------------------------------------------------------------------

def rotation_field(x):
    """Generator of rotations about the chart center: (-x2, x1)."""
    return [-1.0 * x[1], x[0]]


@dataclass(frozen=True)
class KillingField:
    """Vector field with a measured isometry defect for a given metric."""

    V: Callable
    residual: float


def killing_residual(g_callable, V: Callable, xs) -> float:
    """Max norm of the Lie derivative of g along V over sample points.

    (L_V g)_ij = V^k d_k g_ij + g_kj d_i V^k + g_ik d_j V^k, with all
    derivatives taken by dual numbers.
    """
    worst = 0.0
    for x in xs:
        n = len(x)
        Vx = np.array([nk.scalar_value(z) for z in V(list(x))])
        G = np.array([[nk.scalar_value(e) for e in row]
                      for row in g_callable(list(x))])
        dg = np.zeros((n, n, n))
        dV = np.zeros((n, n))
        for k in range(n):
            seed = [nk.Dual3(float(xi), 1.0 if i == k else 0.0)
                    for i, xi in enumerate(x)]
            Gs = g_callable(seed)
            for i in range(n):
                for j in range(n):
                    e = Gs[i][j]
                    dg[k, i, j] = e.d1 if isinstance(e, nk.Dual3) else 0.0
            Vs = V(seed)
            for i in range(n):
                e = Vs[i]
                dV[k, i] = e.d1 if isinstance(e, nk.Dual3) else 0.0
        lie = (np.einsum("k,kij->ij", Vx, dg)
               + np.einsum("kj,ik->ij", G, dV)
               + np.einsum("ik,jk->ij", G, dV))
        worst = max(worst, float(np.max(np.abs(lie))))
    return worst


def katok_metric(epsilon: float, chart_radius: float = 25.0) -> mx.MetricSpec:
    """Perturb the round sphere's dual norm by epsilon times the rotation field.

    The perturbed metric is produced by the numeric dual-norm construction;
    it is non-reversible for epsilon > 0 and Randers in disguise (see
    katok_zermelo_cross_check).  Requires 0 <= epsilon < 1, which is exactly
    the smallness condition F(eps V) < 1 since sup F(V) = 1 on the chart.
    """
    if not 0.0 <= epsilon < 1.0:
        raise SmallnessViolation(
            f"rotational perturbation needs 0 <= eps < 1, got {epsilon}")
    domain = mx.Box.cube(2, chart_radius)
    sphere = mx.zoo_metric("sphere")

    # the sup of F(eps V) over the chart is attained on the unit circle
    grid = mx.Box.cube(2, 1.0).grid(5)
    worst = 0.0
    for x in grid:
        Vx = np.array(rotation_field(list(x)), dtype=float)
        if np.linalg.norm(Vx) == 0.0:
            continue
        worst = max(worst, sphere.F_value(x, epsilon * Vx))
    if worst >= 1.0 or epsilon >= 1.0:
        raise SmallnessViolation(
            f"F(eps V) reaches {max(worst, epsilon):.3f} >= 1")

    def costar(xs, ys):
        s = 1.0 + xs[0] * xs[0] + xs[1] * xs[1]
        a = nk.sqrt(ys[0] * ys[0] + ys[1] * ys[1]) * (s * 0.5)
        V = rotation_field(xs)
        return a + epsilon * (ys[0] * V[0] + ys[1] * V[1])

    def warm(x, v):
        c = mx.sphere_conformal_factor(x, 1.0)
        return [c * v[0], c * v[1]]

    if epsilon == 0.0:
        return mx.riemannian_metric(sphere.g, 2, domain, name="katok(eps=0)")
    return mx.dual_metric(costar, 2, domain, warm_start=warm,
                          name=f"katok(eps={epsilon})")


def katok_zermelo_cross_check(epsilon: float, x, v) -> float:
    """Closed-form Randers value of the perturbed norm (cross-check only).

    The unit co-ball |xi|_{g^{-1}} + eps xi(V) <= 1 is an ellipsoid; its
    support function is an explicit Randers norm.  The numeric dual remains
    the authoritative definition; this pins down sign conventions in tests.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    c = mx.sphere_conformal_factor(x, 1.0)
    ginv = np.eye(2) / c
    W = epsilon * np.array(rotation_field(list(x)), dtype=float)
    Q = ginv - np.outer(W, W)
    Qinv = np.linalg.inv(Q)
    rho2 = 1.0 + W @ Qinv @ W
    alpha = math.sqrt(rho2 * (v @ Qinv @ v))
    beta = -(Qinv @ W) @ v
    return alpha + beta


def katok_curvature_check(epsilon: float, flags,
                          resolution: int = jb.DEFAULT_RESOLUTION) -> float:
    """Max |K - 1| of the perturbed sphere over the given flags.

    Flags are (x, y, u) triples; y is normalized to unit length in the
    perturbed metric before the curvature is computed.
    """
    metric = katok_metric(epsilon)
    worst = 0.0
    for x, y, u in flags:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        y = y / metric.F_value(x, y)
        K = jb.flag_curvature(metric, mx.PhasePoint(x, y), u,
                              resolution=resolution)
        worst = max(worst, abs(K - 1.0))
    return worst


def _register():
    mx.register_metric(
        "katok",
        lambda epsilon=0.3: katok_metric(epsilon),
        "round sphere with a rotational dual-norm perturbation")


_register()
