"""Obstacle-avoidance potentials V(g) = f(d^2(g, g0)) and their reduced calculus.

Distances to the obstacle always use the auxiliary bi-invariant metric B, so
the gradient has the closed form  grad(h) = -2 f'(|Log h|_B^2) beta(Log h)
with h = g^{-1} g0 and beta = M^{-1} B.  The sign is fixed so that the
identity-side directional derivative matches finite differences of
V(Exp(s x) g) exactly:  d/ds V_ext(e, Exp(-s x) h)|_0 = <grad(h), x>_M.
With that convention a repulsive shape (f' < 0) pushes trajectories away
from the obstacle.

The directional derivative of the gradient under identity-side perturbation,
D_x grad(h) = d/ds grad(Exp(-s x) h)|_0, is evaluated by central finite
differences; it is the potential's contribution to the linearized dynamics
together with the connection term nabla_x grad(h).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import LogNearCutLocus, StepUnderflow
from .groups import CUT_LOCUS_MARGIN, GroupModel, rotation_angle

SHAPES = ("inverse_shift", "gaussian_bump", "quadratic", "zero")


@dataclass(frozen=True)
class ObstaclePotential:
    """Shape function, obstacle location, and the FD step policy.

    Shapes (s is the squared B-distance to the obstacle):
      inverse_shift  f(s) = tau / (s + rho)
      gaussian_bump  f(s) = tau * exp(-s / sigma2)
      quadratic      f(s) = tau * s
      zero           f(s) = 0
    """

    model: GroupModel
    obstacle: np.ndarray
    shape: str = "zero"
    tau: float = 0.0
    rho: float = 1.0
    sigma2: float = 1.0
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown potential shape {self.shape!r}")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.shape == "inverse_shift" and self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.shape == "gaussian_bump" and self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        obstacle = np.asarray(self.obstacle, dtype=float)
        object.__setattr__(self, "obstacle", obstacle)

    # -- scalar shape -------------------------------------------------------

    @property
    def is_zero(self):
        return self.shape == "zero" or self.tau == 0.0

    def shape_value(self, s):
        if self.shape == "inverse_shift":
            return self.tau / (s + self.rho)
        if self.shape == "gaussian_bump":
            return self.tau * np.exp(-s / self.sigma2)
        if self.shape == "quadratic":
            return self.tau * s
        return 0.0 * s

    def shape_slope(self, s):
        if self.shape == "inverse_shift":
            return -self.tau / (s + self.rho) ** 2
        if self.shape == "gaussian_bump":
            return -(self.tau / self.sigma2) * np.exp(-s / self.sigma2)
        if self.shape == "quadratic":
            return self.tau + 0.0 * s
        return 0.0 * s

    # -- reduced potential calculus ------------------------------------------

    def offset(self, g):
        """h = g^{-1} g0, the obstacle seen from the moving frame."""
        return self.model.compose(self.model.inverse(g), self.obstacle)

    def squared_distance(self, h):
        w = self.model.log(h)
        return float(self.model.bi_inner(w, w))

    def value(self, h):
        """V_ext(e, h) = f(d_B^2(e, h))."""
        if self.is_zero:
            return 0.0
        return float(self.shape_value(self.squared_distance(h)))

    def value_at(self, g):
        if self.is_zero:
            return 0.0
        return self.value(self.offset(g))

    def gradient(self, h):
        """Reduced gradient of the extended potential at the identity."""
        if self.is_zero:
            return np.zeros(self.model.n)
        w = self.model.log(h)
        s = float(self.model.bi_inner(w, w))
        return -2.0 * float(self.shape_slope(s)) * (self.model.beta @ w)

    def gradient_derivative(self, h, x, richardson=False):
        """D_x grad(h) = d/ds grad(Exp(-s x) h)|_0 by central differences.

        Linear in x up to the FD error; homogeneous exactly because the step
        is taken along the normalized direction.
        """
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros(self.model.n)
        scale = float(np.linalg.norm(x))
        if scale == 0.0:
            return np.zeros(self.model.n)
        unit = x / scale
        step = self.fd_step * (1.0 + np.linalg.norm(self.model.log(h)))
        d = self._directional(h, unit, step)
        if richardson:
            d_half = self._directional(h, unit, 0.5 * step)
            d = (4.0 * d_half - d) / 3.0
        return scale * d

    def _directional(self, h, unit, step):
        if self.model.is_matrix_group:
            # past the cut locus the log flips its axis, so a straddling
            # stencil would difference across a discontinuity
            angle = rotation_angle(h)
            if angle + step * float(np.linalg.norm(unit)) >= np.pi - CUT_LOCUS_MARGIN:
                raise StepUnderflow(
                    f"FD step {step:.2e} does not fit between the offset "
                    f"(angle {angle:.6f}) and the cut locus"
                )
        try:
            plus = self.gradient(self.model.compose(self.model.exp(-step * unit), h))
            minus = self.gradient(self.model.compose(self.model.exp(step * unit), h))
        except LogNearCutLocus as exc:
            raise StepUnderflow(
                f"FD step {step:.2e} leaves the admissible neighborhood"
            ) from exc
        return (plus - minus) / (2.0 * step)

    def gradient_derivative_matrix(self, h):
        """Matrix of the linear map x -> D_x grad(h) in basis coordinates."""
        n = self.model.n
        if self.is_zero:
            return np.zeros((n, n))
        cols = [self.gradient_derivative(h, e) for e in np.eye(n)]
        return np.stack(cols, axis=1)

    def hessian_term(self, h, x):
        """Full reduced Hessian action (D_x + nabla_x) grad(h).

        This is the potential's complete contribution to the linearized
        cubic dynamics; as the Hessian of a scalar it is M-self-adjoint.
        """
        if self.is_zero:
            return np.zeros(self.model.n)
        return self.gradient_derivative(h, x) + self.model.nabla(x, self.gradient(h))

    def with_tau(self, tau):
        return replace(self, tau=float(tau))


def zero_potential(model):
    """Convenience constructor for the V = 0 case."""
    return ObstaclePotential(model=model, obstacle=model.identity(), shape="zero")
