"""Biconjugate-point scan and the local-optimality verdict.

The 2n fundamental bi-Jacobi solutions seeded at t = a with
X2(a) = A_i (first family) and X3(a) = A_i (second family) stack into the
square matrix A(t) whose rows hold the (X0, X1) coordinates.  The base
trajectory is a strict local minimizer among fixed position/velocity
endpoint competitors iff det A(t) != 0 on (a, b].

Because det A grows like (t - a)^(4n) from the seeded zeros, raw magnitude
thresholds are meaningless: detection combines the parity-exact sign of the
determinant with the scale-free singular-value ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bijacobi import _integrate_jacobi_batch, _jacobi_rates
from .errors import GridTooCoarse

VERDICT_MINIMIZER = "OmegaLocalMinimizer"
VERDICT_NOT_MINIMIZER = "NotMinimizer"
VERDICT_INCONCLUSIVE = "Inconclusive"


@dataclass
class ConjugacyScan:
    """Sampled fundamental matrices over (a, b] plus detection bookkeeping."""

    times: np.ndarray
    a_samples: np.ndarray          # (len(times), 2n, 2n)
    det_values: np.ndarray
    sv_ratios: np.ndarray
    start: float                   # t = a (A vanishes there by construction)
    dt: float
    biconjugate_times: list = field(default_factory=list)
    inconclusive_times: list = field(default_factory=list)
    verdict: str | None = None
    _refiner: object = None        # callable t -> A(t), set by fundamental_scan

    @classmethod
    def from_matrices(cls, times, mats, start=None, refiner=None):
        times = np.asarray(times, dtype=float)
        mats = np.asarray(mats, dtype=float)
        if not np.all(np.isfinite(mats)):
            raise ValueError("fundamental matrices contain non-finite entries")
        dets = np.linalg.det(mats)
        svs = np.linalg.svd(mats, compute_uv=False)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratios = np.where(svs[:, 0] > 0.0, svs[:, -1] / svs[:, 0], 0.0)
        if start is None:
            start = times[0] - (times[1] - times[0])
        return cls(
            times=times, a_samples=mats, det_values=dets, sv_ratios=ratios,
            start=float(start), dt=float(times[1] - times[0]), _refiner=refiner,
        )


def _fundamental_seeds(n):
    seeds = np.zeros((2 * n, 4, n))
    for i in range(n):
        seeds[i, 2, i] = 1.0
        seeds[n + i, 3, i] = 1.0
    return seeds


def _stack_matrix(jets):
    """A(t) rows from seed jets (..., 2n, 4, n): coordinates of (X0, X1)."""
    return np.concatenate([jets[..., 0, :], jets[..., 1, :]], axis=-1)


def fundamental_scan(model, potential, base):
    """Integrate the fundamental IVP batch and sample A(t) on the grid."""
    if base.steps < 16:
        raise GridTooCoarse("conjugacy scan needs at least 16 grid intervals")
    n = model.n
    seeds = _fundamental_seeds(n)
    jets = _integrate_jacobi_batch(model, potential, base, seeds)  # (N+1, 2n, 4, n)

    def refine(t):
        """Re-integrate the batch from a stored node up to arbitrary t."""
        t = float(np.clip(t, base.times[0], base.times[-1]))
        k = int(np.clip(np.floor((t - base.times[0]) / base.dt), 0, base.steps - 1))
        t0 = float(base.times[k])
        x = jets[k]
        if t > t0:
            substeps = max(2, int(np.ceil(4 * (t - t0) / base.dt)))
            h = (t - t0) / substeps
            for j in range(substeps):
                x = _rk4_substep(model, potential, base, t0 + j * h, h, x)
        return _stack_matrix(x)

    scan = ConjugacyScan.from_matrices(
        base.times[1:], _stack_matrix(jets[1:]),
        start=float(base.times[0]), refiner=refine,
    )
    return scan


def _point_data(model, potential, base, t):
    xis = base.xi_at(t)
    if potential.is_zero:
        return xis, None, None
    h = base.h_at(t)
    return xis, potential.gradient_derivative_matrix(h), potential.gradient(h)


def _rk4_substep(model, potential, base, t, h, x):
    x0, d0, g0 = _point_data(model, potential, base, t)
    xm, dm, gm = _point_data(model, potential, base, t + 0.5 * h)
    x1, d1, g1 = _point_data(model, potential, base, t + h)
    f1 = _jacobi_rates(model, x0, x, d0, g0)
    f2 = _jacobi_rates(model, xm, x + 0.5 * h * f1, dm, gm)
    f3 = _jacobi_rates(model, xm, x + 0.5 * h * f2, dm, gm)
    f4 = _jacobi_rates(model, x1, x + h * f3, d1, g1)
    return x + (h / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4)


def _bisect_root(det_at, lo, hi, flo, width):
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        fmid = det_at(mid)
        if fmid == 0.0:
            return mid, mid
        if (flo < 0) != (fmid < 0):
            hi = mid
        else:
            lo, flo = mid, fmid
    return lo, hi


def _sv_local_minima(svs, burn_in):
    """Interior local minima of the sv-ratio sequence (plus a dipping tail).

    The ratio necessarily decays to zero towards t = a (the fundamental
    solutions are seeded there), so only genuine dips are candidates.
    """
    num = len(svs)
    out = []
    for k in range(max(burn_in, 1), num - 1):
        if svs[k] <= svs[k - 1] and svs[k] <= svs[k + 1]:
            out.append(k)
    if num >= 2 and svs[-1] < svs[-2] and num - 1 >= burn_in:
        out.append(num - 1)
    return out


def detect_biconjugate(scan, rel_tol=1e-8, burn_in=3):
    """Flag biconjugate times by determinant sign change or sv-ratio collapse.

    Sign-change flags are refined by bisection re-integration to a bracket
    of width <= dt/16 when the scan carries a refiner.  Singular-value dips
    (local minima of the scale-free ratio) below rel_tol are detections;
    dips in [rel_tol, 10 rel_tol) that refinement cannot separate from zero
    are recorded on ``scan.inconclusive_times``.
    """
    dets = scan.det_values
    svs = scan.sv_ratios
    times = scan.times
    dt = scan.dt
    detections = []
    inconclusive = []

    def det_at(t):
        return float(np.linalg.det(scan._refiner(t)))

    def sv_at(t):
        s = np.linalg.svd(scan._refiner(t), compute_uv=False)
        return s[-1] / s[0] if s[0] > 0 else 0.0

    num = len(times)
    for k in range(burn_in, num):
        if k + 1 < num and dets[k] * dets[k + 1] < 0.0:
            lo, hi = float(times[k]), float(times[k + 1])
            if scan._refiner is not None:
                lo, hi = _bisect_root(det_at, lo, hi, dets[k], dt / 16.0)
            detections.append(0.5 * (lo + hi))
        if dets[k] == 0.0:
            detections.append(float(times[k]))

    for k in _sv_local_minima(svs, burn_in):
        if svs[k] >= 10.0 * rel_tol:
            continue
        t = float(times[k])
        if any(abs(t - d) <= dt for d in detections):
            continue
        if scan._refiner is not None:
            local = np.linspace(max(t - dt, scan.start + dt), min(t + dt, times[-1]), 17)
            ratios = [sv_at(tt) for tt in local]
            low = min(ratios)
            if low < rel_tol:
                detections.append(float(local[int(np.argmin(ratios))]))
                continue
            if low >= 10.0 * rel_tol:
                continue
            inconclusive.append(t)
        elif svs[k] < rel_tol:
            detections.append(t)
        else:
            inconclusive.append(t)

    merged = []
    for t in sorted(detections):
        if not merged or t - merged[-1] > dt:
            merged.append(t)
    scan.biconjugate_times = merged
    scan.inconclusive_times = inconclusive
    return merged


def verdict(scan, detections):
    """Optimality verdict from a completed detection run."""
    if detections:
        result = VERDICT_NOT_MINIMIZER
    elif scan.inconclusive_times:
        result = VERDICT_INCONCLUSIVE
    else:
        result = VERDICT_MINIMIZER
    scan.verdict = result
    return result
