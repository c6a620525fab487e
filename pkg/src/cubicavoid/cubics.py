"""Modified Riemannian cubic dynamics: IVP integration and shooting BVP.

State is the left-trivialized jet (g, xi0, xi1, xi2) with xi0 = g^{-1} gdot
and xi_{i+1} = d/dt xi_i + nabla_{xi0} xi_i.  The reduced fourth-order
equation closes with

    d/dt xi2 = -nabla_{xi0} xi2 - R(xi1, xi0) xi0 - grad(h),   h = g^{-1} g0.

The algebra components advance with classical RK4; the group factor uses a
Runge-Kutta-Munthe-Kaas step through the group exponential, which keeps
SO(3) orthogonality at machine precision without projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CutLocusDuringIntegration,
    LogNearCutLocus,
    NoConvergence,
    NonFiniteState,
)
from .finitediff import hermite_basis
from .groups import (
    CUT_LOCUS_MARGIN,
    ORTHOGONALITY_TOL,
    GroupModel,
    dexpinv,
    orthogonality_defect,
    project_rotation,
    rotation_angle,
)
from .potentials import ObstaclePotential


@dataclass
class CubicState:
    """Group element plus the three algebra jets of the reduced cubic."""

    g: np.ndarray
    xi0: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray

    def xis(self):
        return np.stack([np.asarray(self.xi0, dtype=float),
                         np.asarray(self.xi1, dtype=float),
                         np.asarray(self.xi2, dtype=float)])


def _xi_rates(model, potential, g, xis):
    """Rates of (xi0, xi1, xi2); raises LogNearCutLocus via the potential."""
    xi0, xi1, xi2 = xis
    rates = np.empty_like(xis)
    force = np.zeros(model.n)
    if not potential.is_zero:
        force = potential.gradient(potential.offset(g))
    if model.flat:
        rates[0] = xis[1]
        rates[1] = xis[2]
        rates[2] = -force
        return rates
    rates[0] = xis[1] - model.nabla(xi0, xi0)
    rates[1] = xis[2] - model.nabla(xi0, xi1)
    rates[2] = -model.nabla(xi0, xi2) - model.curvature(xi1, xi0, xi0) - force
    return rates


def cubic_rhs(model, potential, state):
    """Time derivative of a :class:`CubicState` as ``(gdot, xi_rates)``."""
    xis = state.xis()
    rates = _xi_rates(model, potential, state.g, xis)
    return model.velocity(state.g, xis[0]), rates


def _rkmk4_step(model, potential, g, xis, dt, t):
    """One RKMK4 step; group increment assembled in the algebra."""
    def stage(theta, z):
        gs = model.compose(g, model.exp(theta)) if np.any(theta) else g
        try:
            zr = _xi_rates(model, potential, gs, z)
        except LogNearCutLocus as exc:
            raise CutLocusDuringIntegration(t, cause=exc) from exc
        return dexpinv(model, theta, z[0]), zr

    zero = np.zeros(model.n)
    k1g, k1z = stage(zero, xis)
    k2g, k2z = stage(0.5 * dt * k1g, xis + 0.5 * dt * k1z)
    k3g, k3z = stage(0.5 * dt * k2g, xis + 0.5 * dt * k2z)
    k4g, k4z = stage(dt * k3g, xis + dt * k3z)
    theta = (dt / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
    g_next = model.compose(g, model.exp(theta))
    xis_next = xis + (dt / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
    return g_next, xis_next, k1z


@dataclass
class CubicTrajectory:
    """Dense samples of a modified cubic on a uniform grid.

    ``xis[k]`` stacks (xi0, xi1, xi2) at node k and ``xi_rates[k]`` their
    time derivatives, which make the in-segment Hermite accessors 4th-order
    accurate.  ``hs[k]`` caches h = g^{-1} g0 (the potential's hot path).
    """

    model: GroupModel
    potential: ObstaclePotential
    times: np.ndarray
    gs: np.ndarray
    xis: np.ndarray        # (N+1, 3, n)
    xi_rates: np.ndarray   # (N+1, 3, n)
    hs: np.ndarray

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def steps(self):
        return len(self.times) - 1

    @property
    def span(self):
        return float(self.times[0]), float(self.times[-1])

    def _segment(self, t):
        a, b = self.span
        k = int(np.clip(np.floor((t - a) / self.dt), 0, self.steps - 1))
        tau = (t - self.times[k]) / self.dt
        return k, float(np.clip(tau, 0.0, 1.0))

    def xi_at(self, t):
        """Hermite-interpolated (xi0, xi1, xi2) at time t."""
        k, tau = self._segment(t)
        h00, h10, h01, h11 = hermite_basis(tau)
        return (
            h00 * self.xis[k] + h01 * self.xis[k + 1]
            + self.dt * (h10 * self.xi_rates[k] + h11 * self.xi_rates[k + 1])
        )

    def xi_at_many(self, ts):
        """Vectorized :meth:`xi_at` for an array of times; returns (T, 3, n)."""
        ts = np.asarray(ts, dtype=float)
        a, _ = self.span
        k = np.clip(np.floor((ts - a) / self.dt).astype(int), 0, self.steps - 1)
        tau = np.clip((ts - self.times[k]) / self.dt, 0.0, 1.0)
        h00, h10, h01, h11 = (c[:, None, None] for c in hermite_basis(tau))
        return (h00 * self.xis[k] + h01 * self.xis[k + 1]
                + self.dt * (h10 * self.xi_rates[k] + h11 * self.xi_rates[k + 1]))

    def g_at(self, t):
        """Group element at t via Hermite interpolation in the log chart."""
        k, tau = self._segment(t)
        if tau == 0.0:
            return self.gs[k]
        if tau == 1.0:
            return self.gs[k + 1]
        g0 = self.gs[k]
        sigma1 = self.model.log(self.model.compose(self.model.inverse(g0), self.gs[k + 1]))
        d0 = self.xis[k, 0]
        d1 = dexpinv(self.model, sigma1, self.xis[k + 1, 0])
        h00, h10, h01, h11 = hermite_basis(tau)
        sigma = h01 * sigma1 + self.dt * (h10 * d0 + h11 * d1)
        return self.model.compose(g0, self.model.exp(sigma))

    def h_at(self, t):
        return self.potential.offset(self.g_at(t))

    def state_at(self, t):
        """(g, stacked xis, h) at time t."""
        g = self.g_at(t)
        return g, self.xi_at(t), self.potential.offset(g)

    def end_state(self):
        return CubicState(self.gs[-1], *self.xis[-1])


def _guard_cut_locus(model, potential, g, xi0, dt, t):
    # the offset angle moves at most |xi0| per unit time; raise before a
    # step can reach pi, where the log direction flips discontinuously
    if potential.is_zero or not model.is_matrix_group:
        return
    angle = rotation_angle(potential.offset(g))
    margin = 1.5 * abs(dt) * float(np.linalg.norm(xi0)) + 10.0 * CUT_LOCUS_MARGIN
    if angle + margin >= np.pi:
        raise CutLocusDuringIntegration(t)


def integrate_cubic(model, potential, init, span, steps):
    """Integrate the reduced cubic IVP with fixed-step RKMK4.

    ``steps`` is the number of RK steps; the grid has steps + 1 nodes.
    A reversed span (b < a) integrates backwards in time.
    """
    if steps < 16:
        raise ValueError("need at least 16 integration steps")
    a, b = float(span[0]), float(span[1])
    if b == a:
        raise ValueError("span must have nonzero length")
    n = model.n
    times = a + (b - a) * np.arange(steps + 1) / steps
    dt = (b - a) / steps

    gs = np.empty((steps + 1, 3, 3)) if model.is_matrix_group else np.empty((steps + 1, n))
    xis = np.empty((steps + 1, 3, n))
    rates = np.empty((steps + 1, 3, n))

    g = np.asarray(init.g, dtype=float)
    model.check_element(g)
    z = init.xis()
    gs[0] = g
    xis[0] = z
    for k in range(steps):
        _guard_cut_locus(model, potential, gs[k], xis[k][0], dt, float(times[k]))
        g, z, k1z = _rkmk4_step(model, potential, gs[k], xis[k], dt, float(times[k]))
        rates[k] = k1z
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(g))):
            raise NonFiniteState(float(times[k + 1]))
        if model.is_matrix_group and orthogonality_defect(g) > ORTHOGONALITY_TOL:
            # RKMK keeps this at machine precision; guard against long runs
            g = project_rotation(g)
        gs[k + 1] = g
        xis[k + 1] = z
    _guard_cut_locus(model, potential, gs[steps], xis[steps][0], dt, float(times[steps]))
    try:
        rates[steps] = _xi_rates(model, potential, gs[steps], xis[steps])
    except LogNearCutLocus as exc:
        raise CutLocusDuringIntegration(float(times[steps]), cause=exc) from exc

    hs = np.stack([potential.offset(gs[k]) for k in range(steps + 1)])
    return CubicTrajectory(
        model=model, potential=potential, times=times,
        gs=gs, xis=xis, xi_rates=rates, hs=hs,
    )


def _bvp_residual(model, potential, boundary, p, span, steps):
    g_a, xi0_a, g_b, xi0_b = boundary
    n = model.n
    init = CubicState(g_a, xi0_a, p[:n], p[n:])
    traj = integrate_cubic(model, potential, init, span, steps)
    gap = model.log(model.compose(model.inverse(traj.gs[-1]), g_b))
    return np.concatenate([gap, traj.xis[-1, 0] - np.asarray(xi0_b, dtype=float)])


def shoot_bvp(model, potential, boundary, guess, span, steps,
              tol=1e-8, max_iters=100, lm_lambda=1e-3, fd_step=1e-6,
              random_restarts=3, seed=0):
    """Solve the two-point BVP (positions and velocities) by shooting.

    Unknowns are (xi1, xi2) at t = a; the residual stacks the endpoint log
    gap and the endpoint velocity mismatch.  A damped Levenberg-Marquardt
    iteration with forward-difference Jacobian drives |r| below ``tol``.
    Returns the full initial :class:`CubicState`.
    """
    g_a, xi0_a = boundary[0], np.asarray(boundary[1], dtype=float)
    n = model.n
    m = 2 * n

    def residual(p):
        return _bvp_residual(model, potential, boundary, p, span, steps)

    def solve_from(p0):
        p = np.asarray(p0, dtype=float).copy()
        r = residual(p)
        lam = lm_lambda
        best = (np.linalg.norm(r), p.copy())
        for _ in range(max_iters):
            rnorm = np.linalg.norm(r)
            if rnorm <= tol:
                return p, rnorm
            jac = np.empty((m, m))
            for j in range(m):
                dp = np.zeros(m)
                dp[j] = fd_step
                jac[:, j] = (residual(p + dp) - r) / fd_step
            jtj = jac.T @ jac
            step = np.linalg.solve(jtj + lam * np.eye(m), -jac.T @ r)
            r_new = residual(p + step)
            if np.linalg.norm(r_new) < rnorm:
                p = p + step
                r = r_new
                lam = max(lam / 10.0, 1e-14)
                if np.linalg.norm(r) < best[0]:
                    best = (np.linalg.norm(r), p.copy())
            else:
                lam *= 10.0
                if lam > 1e10:
                    break
        return best[1], best[0]

    guesses = [np.concatenate([np.asarray(guess[0], dtype=float),
                               np.asarray(guess[1], dtype=float)])]
    rng = np.random.default_rng(seed)
    scale = 1.0 + np.linalg.norm(xi0_a)
    guesses.extend(scale * rng.standard_normal(m) for _ in range(random_restarts))

    best_res = np.inf
    for idx, p0 in enumerate(guesses):
        try:
            p, rnorm = solve_from(p0)
        except (CutLocusDuringIntegration, NonFiniteState):
            if idx == len(guesses) - 1 and not np.isfinite(best_res):
                raise
            continue
        if rnorm <= tol:
            return CubicState(np.asarray(g_a, dtype=float), xi0_a, p[:n], p[n:])
        best_res = min(best_res, rnorm)
    raise NoConvergence(max_iters, best_res)
