"""Finite-difference stencils and quadrature on uniform grids."""

from __future__ import annotations

import numpy as np

from .errors import GridTooCoarse


def sampled_derivative(values, dt):
    """4th-order derivative of uniformly sampled values along axis 0.

    Central 5-point stencil in the interior, one-sided closures at the
    first/last two samples.
    """
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 5:
        raise GridTooCoarse("need at least 5 samples for the 4th-order stencil")
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * dt)
    d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * dt)
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * dt)
    d[-2] = (3.0 * v[-1] + 10.0 * v[-2] - 18.0 * v[-3] + 6.0 * v[-4] - v[-5]) / (12.0 * dt)
    d[-1] = (25.0 * v[-1] - 48.0 * v[-2] + 36.0 * v[-3] - 16.0 * v[-4] + 3.0 * v[-5]) / (12.0 * dt)
    return d


def simpson_weights(num_nodes, dt):
    """Composite Simpson weights; odd interval counts close with a 3/8 rule."""
    if num_nodes < 5:
        raise GridTooCoarse("Simpson quadrature needs at least 5 grid nodes")
    intervals = num_nodes - 1
    w = np.zeros(num_nodes)
    if intervals % 2 == 0:
        w[0] = w[-1] = 1.0
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= dt / 3.0
    else:
        # Simpson on the first even stretch, 3/8 on the final three intervals.
        head = intervals - 3
        ws = np.zeros(num_nodes)
        ws[0] = ws[head] = 1.0
        ws[1:head:2] = 4.0
        ws[2:head:2] = 2.0
        ws *= dt / 3.0
        ws[head] += 3.0 * dt / 8.0
        ws[head + 1] += 9.0 * dt / 8.0
        ws[head + 2] += 9.0 * dt / 8.0
        ws[head + 3] += 3.0 * dt / 8.0
        w = ws
    return w


def integrate_samples(values, dt):
    """Simpson integral of sampled values along axis 0."""
    v = np.asarray(values, dtype=float)
    w = simpson_weights(v.shape[0], dt)
    return np.tensordot(w, v, axes=(0, 0))


def hermite_basis(tau):
    """Cubic Hermite basis values at normalized position tau in [0, 1]."""
    t2 = tau * tau
    t3 = t2 * tau
    return (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + tau,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
