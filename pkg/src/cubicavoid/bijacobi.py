"""Reduced bi-Jacobi fields, the index form, and its finite-difference oracle.

A bi-Jacobi field is the linearization of the modified-cubic flow.  Written
in left-trivialized jets X0..X3 (X_{i+1} = d/dt X_i + nabla_{xi0} X_i) it
satisfies the linear system

    d/dt X3 = -nabla_{xi0} X3 - F(X0, X1, X2; xi0, xi1, xi2)
              - (D_{X0} + nabla_{X0}) grad(h),

where F collects the curvature terms of the second variation.  F is
assembled here as a fixed composition tree of bracket/connection/curvature
calls, evaluated pointwise in t; every covariant derivative of the curvature
reduces to the algebra through the recursion

    (d/dt R-tensor)(a, b, c) = nabla_w(R(a,b)c) - R(nabla_w a, b)c
                               - R(a, nabla_w b)c - R(a, b) nabla_w c

with w the appropriate direction.  Because the operator itself moves with
the base point, the second derivative carries the extra first-derivative
term in the direction d/dt xi0 = xi1 - nabla_{xi0} xi0:

    second t-derivative of R = grad2R(xi0, xi0; .) + grad1R(xi1; .).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarse, NonFiniteState
from .finitediff import integrate_samples, sampled_derivative


@dataclass
class JacobiState:
    """Left-trivialized jets X0..X3 of a variation field."""

    x0: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray

    def stack(self):
        return np.stack([np.asarray(self.x0, dtype=float),
                         np.asarray(self.x1, dtype=float),
                         np.asarray(self.x2, dtype=float),
                         np.asarray(self.x3, dtype=float)])

    @classmethod
    def zero(cls, n):
        return cls(*(np.zeros(n) for _ in range(4)))


def grad1_curvature(model, w, a, b, c):
    """First covariant derivative of the curvature tensor in direction w."""
    return (
        model.nabla(w, model.curvature(a, b, c))
        - model.curvature(model.nabla(w, a), b, c)
        - model.curvature(a, model.nabla(w, b), c)
        - model.curvature(a, b, model.nabla(w, c))
    )


def grad2_curvature(model, w1, w2, a, b, c):
    """Second covariant derivative of the curvature tensor, directions (w1, w2)."""
    return (
        model.nabla(w1, grad1_curvature(model, w2, a, b, c))
        - grad1_curvature(model, model.nabla(w1, w2), a, b, c)
        - grad1_curvature(model, w2, model.nabla(w1, a), b, c)
        - grad1_curvature(model, w2, a, model.nabla(w1, b), c)
        - grad1_curvature(model, w2, a, b, model.nabla(w1, c))
    )


def curvature_term(model, x0, x1, x2, xi0, xi1, xi2):
    """Curvature contribution F to the linearized cubic equation.

    Multilinear in the X-slots; broadcasts over leading axes of the X
    arguments so whole batches of fields evaluate in one call.
    """
    if model.flat:
        return np.zeros(np.broadcast(x0, xi0).shape)
    R = model.curvature

    def dR(a, b, c):
        return grad1_curvature(model, xi0, a, b, c)

    # second t-derivative of R applied to (X0, xi0) xi0
    dd = (grad2_curvature(model, xi0, xi0, x0, xi0, xi0)
          + grad1_curvature(model, xi1, x0, xi0, xi0))
    return (
        dd
        + grad1_curvature(model, x0, xi1, xi0, xi0)
        + R(R(x0, xi0, xi0), xi0, xi0)
        + R(x0, xi2, xi0)
        + 4.0 * R(x1, xi0, xi1)
        + 2.0 * (dR(x1, xi0, xi0) + dR(x0, xi1, xi0) + R(x2, xi0, xi0))
        + 3.0 * (dR(x0, xi0, xi1) + R(x0, xi0, xi2) + R(x0, xi1, xi1))
    )


def _jacobi_rates(model, xis, x, dmat, grad):
    """Linear rates of stacked jets x (..., 4, n) at one base point."""
    xi0, xi1, xi2 = xis
    x0 = x[..., 0, :]
    out = np.empty_like(x)
    if model.flat:
        out[..., 0:3, :] = x[..., 1:4, :]
        out[..., 3, :] = 0.0
        if dmat is not None:
            out[..., 3, :] = -np.einsum("ij,...j->...i", dmat, x0)
        return out
    out[..., 0, :] = x[..., 1, :] - model.nabla(xi0, x0)
    out[..., 1, :] = x[..., 2, :] - model.nabla(xi0, x[..., 1, :])
    out[..., 2, :] = x[..., 3, :] - model.nabla(xi0, x[..., 2, :])
    force = curvature_term(model, x0, x[..., 1, :], x[..., 2, :], xi0, xi1, xi2)
    if dmat is not None:
        force = force + np.einsum("ij,...j->...i", dmat, x0) + model.nabla(x0, grad)
    out[..., 3, :] = -model.nabla(xi0, x[..., 3, :]) - force
    return out


def bijacobi_rhs(model, potential, base, j):
    """Time derivative of a :class:`JacobiState` along one base state."""
    xis = base.xis()
    if potential.is_zero:
        dmat, grad = None, None
    else:
        h = potential.offset(base.g)
        dmat = potential.gradient_derivative_matrix(h)
        grad = potential.gradient(h)
    rates = _jacobi_rates(model, xis, j.stack(), dmat, grad)
    return JacobiState(*rates)


class _BaseTables:
    """Base-trajectory data at nodes and midpoints for linear RK4 sweeps."""

    def __init__(self, model, potential, base):
        times = base.times
        mids = 0.5 * (times[:-1] + times[1:])
        self.xis_nodes = base.xis
        self.xis_mids = base.xi_at_many(mids)
        if potential.is_zero:
            self.grads_nodes = self.grads_mids = None
            self.dmats_nodes = self.dmats_mids = None
        else:
            self.grads_nodes = np.stack([potential.gradient(h) for h in base.hs])
            self.dmats_nodes = np.stack(
                [potential.gradient_derivative_matrix(h) for h in base.hs])
            hs_mid = [base.h_at(t) for t in mids]
            self.grads_mids = np.stack([potential.gradient(h) for h in hs_mid])
            self.dmats_mids = np.stack(
                [potential.gradient_derivative_matrix(h) for h in hs_mid])

    def at_node(self, k):
        if self.grads_nodes is None:
            return self.xis_nodes[k], None, None
        return self.xis_nodes[k], self.dmats_nodes[k], self.grads_nodes[k]

    def at_mid(self, k):
        if self.grads_mids is None:
            return self.xis_mids[k], None, None
        return self.xis_mids[k], self.dmats_mids[k], self.grads_mids[k]


def _tables(model, potential, base):
    cached = getattr(base, "_jacobi_tables", None)
    if cached is None:
        cached = _BaseTables(model, potential, base)
        base._jacobi_tables = cached
    return cached


def _integrate_jacobi_batch(model, potential, base, inits):
    """RK4 for a batch of jet stacks on the base grid; returns (N+1, B, 4, n)."""
    tables = _tables(model, potential, base)
    dt = base.dt
    steps = base.steps
    out = np.empty((steps + 1,) + inits.shape)
    out[0] = inits
    x = inits
    for k in range(steps):
        xn, dn, gn = tables.at_node(k)
        xm, dm, gm = tables.at_mid(k)
        xe, de, ge = tables.at_node(k + 1)
        f1 = _jacobi_rates(model, xn, x, dn, gn)
        f2 = _jacobi_rates(model, xm, x + 0.5 * dt * f1, dm, gm)
        f3 = _jacobi_rates(model, xm, x + 0.5 * dt * f2, dm, gm)
        f4 = _jacobi_rates(model, xe, x + dt * f3, de, ge)
        x = x + (dt / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(float(base.times[k + 1]))
        out[k + 1] = x
    return out


@dataclass
class BiJacobiField:
    """Sampled jets of one bi-Jacobi field along a base trajectory."""

    times: np.ndarray
    jets: np.ndarray  # (N+1, 4, n)

    @property
    def x0(self):
        return self.jets[:, 0, :]

    @property
    def x1(self):
        return self.jets[:, 1, :]


def integrate_bijacobi(model, potential, base, init):
    """Integrate one bi-Jacobi field with RK4 on the base grid."""
    inits = init.stack()[None]
    jets = _integrate_jacobi_batch(model, potential, base, inits)[:, 0]
    return BiJacobiField(times=base.times.copy(), jets=jets)


@dataclass(frozen=True)
class VariationField:
    """Samples of an admissible variation on the trajectory grid.

    Admissible fields vanish at both ends together with their time
    derivative; this is checked at construction (the index-form contracts
    depend on it).  Pass ``admissible=False`` for fields that only satisfy
    the conditions at the left end, e.g. fundamental bi-Jacobi solutions.
    """

    times: np.ndarray
    values: np.ndarray
    admissible: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "times", t)
        if v.shape[0] != t.shape[0]:
            raise ValueError("values and times must share the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("variation field has non-finite samples")
        if self.admissible:
            scale = max(float(np.max(np.abs(v))), 1e-30)
            dt = float(t[1] - t[0])
            dv = sampled_derivative(v, dt)
            span = float(t[-1] - t[0])
            if max(np.linalg.norm(v[0]), np.linalg.norm(v[-1])) > 1e-9 * scale:
                raise ValueError("variation field must vanish at both endpoints")
            # sanity gate, not a precision bound: the one-sided stencil of a
            # genuinely admissible sampled field leaves an O(dt^4) residual
            if max(np.linalg.norm(dv[0]), np.linalg.norm(dv[-1])) > 5e-2 * scale / span:
                raise ValueError("variation derivative must vanish at both endpoints")

    @classmethod
    def from_callable(cls, times, fn, admissible=True):
        values = np.stack([np.asarray(fn(t), dtype=float) for t in times])
        return cls(times=times, values=values, admissible=admissible)


def _field_jets(model, base, values):
    """(X0, X1, X2) from samples via the recursion with FD time derivatives."""
    dt = base.dt
    xi0 = base.xis[:, 0, :]
    x0 = values
    x1 = sampled_derivative(x0, dt) + model.nabla(xi0, x0)
    x2 = sampled_derivative(x1, dt) + model.nabla(xi0, x1)
    return x0, x1, x2


def _potential_node_terms(model, potential, base, x0):
    if potential.is_zero:
        return np.zeros_like(x0)
    tables = _tables(model, potential, base)
    return (np.einsum("kij,kj->ki", tables.dmats_nodes, x0)
            + model.nabla(x0, tables.grads_nodes))


def index_form(model, potential, base, X, Y):
    """Second variation of the action as a bilinear form on variation fields.

    Composite-Simpson quadrature on the trajectory grid of
    ``<X2, Y2>_M + <Y0, F(X-jets) + (D_{X0} + nabla_{X0}) grad(h)>_M``.
    """
    if base.steps < 16:
        raise GridTooCoarse("index form needs at least 16 grid intervals")
    x0, x1, x2 = _field_jets(model, base, X.values)
    y0, _, y2 = _field_jets(model, base, Y.values)
    xi = base.xis
    force = curvature_term(model, x0, x1, x2, xi[:, 0, :], xi[:, 1, :], xi[:, 2, :])
    force = force + _potential_node_terms(model, potential, base, x0)
    integrand = model.inner(x2, y2) + model.inner(y0, force)
    return float(integrate_samples(integrand, base.dt))


def _body_velocity_samples(model, gs, dt):
    """xi0 samples of a discrete group curve by 4th-order log stencils.

    The derivative of t -> Log(g_k^{-1} g(t)) at t_k is exactly the body
    velocity, so differencing the logs seen from each node needs no dexp
    correction.
    """
    num = len(gs)
    coeffs = {
        "interior": (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, [-2, -1, 0, 1, 2]),
        "first": (np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0, [0, 1, 2, 3, 4]),
        "second": (np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0, [-1, 0, 1, 2, 3]),
    }
    out = np.empty((num, model.n))
    for k in range(num):
        if k == 0:
            c, offs = coeffs["first"]
        elif k == 1:
            c, offs = coeffs["second"]
        elif k == num - 2:
            c, offs = coeffs["second"]
            c, offs = -c[::-1], [-o for o in offs[::-1]]
        elif k == num - 1:
            c, offs = coeffs["first"]
            c, offs = -c[::-1], [-o for o in offs[::-1]]
        else:
            c, offs = coeffs["interior"]
        ginv = model.inverse(gs[k])
        acc = np.zeros(model.n)
        for cj, oj in zip(c, offs):
            if cj == 0.0:
                continue
            acc += cj * model.log(model.compose(ginv, gs[k + oj]))
        out[k] = acc / dt
    return out


def second_variation_fd(model, potential, base, X, eps):
    """Second difference of the action along s -> g(t) Exp(s X0(t)).

    Serves as the independent oracle for :func:`index_form`; the discrete
    action is evaluated by the same stencil/quadrature pipeline at s in
    {-eps, 0, +eps} so the discretization bias cancels in the difference.
    """
    if not 1e-4 <= eps <= 1e-2:
        raise ValueError("eps must lie in [1e-4, 1e-2]")

    dt = base.dt

    def action(s):
        if s == 0.0:
            gs = list(base.gs)
        else:
            gs = [model.compose(g, model.exp(s * v))
                  for g, v in zip(base.gs, X.values)]
        xi0 = _body_velocity_samples(model, gs, dt)
        xi1 = sampled_derivative(xi0, dt) + model.nabla(xi0, xi0)
        dens = 0.5 * model.inner(xi1, xi1)
        if not potential.is_zero:
            dens = dens + np.array([potential.value_at(g) for g in gs])
        value = integrate_samples(dens, dt)
        if not np.isfinite(value):
            raise NonFiniteState(base.times[0])
        return value

    f0 = getattr(base, "_action_cache", None)
    if f0 is None:
        f0 = action(0.0)
        base._action_cache = f0
    return (action(eps) - 2.0 * f0 + action(-eps)) / (eps * eps)
