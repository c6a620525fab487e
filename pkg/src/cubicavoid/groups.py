"""Lie group models: SO(3) and abelian R^n with left-invariant metrics.

A :class:`GroupModel` owns the basis, structure constants, kinetic metric M,
auxiliary bi-invariant metric B, and the precomputed bilinear connection on
the algebra (solved once from the Koszul relation
``2<nabla_x y, z> = <[x,y],z> - <[y,z],x> + <[z,x],y>``).  Algebra elements
are plain numpy coordinate vectors; every operation broadcasts over leading
axes so batches of samples evaluate in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LogNearCutLocus

# Admissible rotation angles stay below pi minus this margin.
CUT_LOCUS_MARGIN = 1e-8

# Orthogonality drift above this triggers re-projection onto SO(3).
ORTHOGONALITY_TOL = 1e-9


def hat(v):
    """Skew matrix of a 3-vector, hat(v) @ w == cross(v, w)."""
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(W):
    """Inverse of :func:`hat`."""
    W = np.asarray(W, dtype=float)
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def rotation_exp(v):
    """Rodrigues formula for the rotation with axis-angle vector ``v``."""
    v = np.asarray(v, dtype=float)
    theta2 = float(v @ v)
    theta = np.sqrt(theta2)
    K = hat(v)
    if theta < 1e-4:
        # series for sin(t)/t and (1-cos(t))/t^2, accurate to ~1e-16 here
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return np.eye(3) + a * K + b * (K @ K)


def _quaternion_from_rotation(R):
    # Shepperd's branch selection: numerically stable for every angle.
    m00, m01, m02 = R[0]
    m10, m11, m12 = R[1]
    m20, m21, m22 = R[2]
    if m22 < 0:
        if m00 > m11:
            t = 1.0 + m00 - m11 - m22
            q = np.array([m21 - m12, t, m01 + m10, m20 + m02])
        else:
            t = 1.0 - m00 + m11 - m22
            q = np.array([m02 - m20, m01 + m10, t, m12 + m21])
    else:
        if m00 < -m11:
            t = 1.0 - m00 - m11 + m22
            q = np.array([m10 - m01, m20 + m02, m12 + m21, t])
        else:
            t = 1.0 + m00 + m11 + m22
            q = np.array([t, m21 - m12, m02 - m20, m10 - m01])
    q *= 0.5 / np.sqrt(t)
    if q[0] < 0:
        q = -q
    return q


def rotation_log(R, margin=CUT_LOCUS_MARGIN):
    """Axis-angle vector of a rotation matrix.

    Raises :class:`LogNearCutLocus` when the rotation angle reaches
    ``pi - margin``; below that the quaternion route keeps full accuracy.
    """
    R = np.asarray(R, dtype=float)
    q = _quaternion_from_rotation(R)
    s = float(np.linalg.norm(q[1:]))
    angle = 2.0 * np.arctan2(s, q[0])
    limit = np.pi - margin
    if angle >= limit:
        raise LogNearCutLocus(angle, limit)
    if s < 1e-12:
        return 2.0 * q[1:] / q[0]
    return (angle / s) * q[1:]


def rotation_angle(R):
    """Rotation angle in [0, pi]; defined at the cut locus unlike the log."""
    q = _quaternion_from_rotation(np.asarray(R, dtype=float))
    return 2.0 * np.arctan2(float(np.linalg.norm(q[1:])), q[0])


def project_rotation(R):
    """Nearest rotation matrix via polar decomposition."""
    U, _, Vt = np.linalg.svd(np.asarray(R, dtype=float))
    S = U @ Vt
    if np.linalg.det(S) < 0:
        U = U.copy()
        U[:, -1] = -U[:, -1]
        S = U @ Vt
    return S


def orthogonality_defect(R):
    return float(np.linalg.norm(R.T @ R - np.eye(R.shape[0])))


def _as_spd(mat, n, name):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim == 1:
        mat = np.diag(mat)
    if mat.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}, got {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(mat)) <= 0:
        raise ValueError(f"{name} must be positive definite")
    return mat


@dataclass(frozen=True, eq=False)
class GroupModel:
    """A concrete group: basis, structure constants, metrics, connection.

    ``structure[i, j, k]`` holds c_ij^k with [A_i, A_j] = c_ij^k A_k, and
    ``conn[i, j, k]`` the connection coefficients with
    nabla_{A_i} A_j = conn[i, j, k] A_k.  ``curv[i, j, k, l]`` caches the
    curvature endomorphism R(A_i, A_j) A_k = curv[i, j, k, l] A_l so that
    curvature evaluation is a single contraction.
    """

    kind: str                 # "so3" | "abelian"
    n: int
    basis: np.ndarray
    structure: np.ndarray
    metric: np.ndarray        # M, the kinetic left-invariant metric
    bi_metric: np.ndarray     # B, auxiliary bi-invariant metric for distances
    conn: np.ndarray
    curv: np.ndarray
    beta: np.ndarray          # M^{-1} B, converts B-gradients to M-gradients
    flat: bool = False        # bracket, connection and curvature all vanish

    # -- algebra operations (broadcast over leading axes) -----------------

    def _check(self, *vecs):
        for v in vecs:
            if v.shape[-1] != self.n:
                raise ValueError(
                    f"algebra element has dimension {v.shape[-1]}, expected {self.n}"
                )

    def bracket(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check(x, y)
        return np.einsum("...i,...j,ijk->...k", x, y, self.structure)

    def nabla(self, x, y):
        """Connection bilinear map nabla_x y on the algebra."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check(x, y)
        return np.einsum("...i,...j,ijk->...k", x, y, self.conn)

    def curvature(self, x, y, z):
        """Curvature endomorphism R(x, y) z on the algebra."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        self._check(x, y, z)
        return np.einsum("...i,...j,...k,ijkl->...l", x, y, z, self.curv)

    def inner(self, x, y):
        """Kinetic inner product <x, y>_M."""
        return np.einsum("...i,ij,...j->...", x, self.metric, y)

    def norm(self, x):
        return np.sqrt(np.maximum(self.inner(x, x), 0.0))

    def bi_inner(self, x, y):
        return np.einsum("...i,ij,...j->...", x, self.bi_metric, y)

    def bi_norm(self, x):
        return np.sqrt(np.maximum(self.bi_inner(x, x), 0.0))

    # -- group operations --------------------------------------------------

    @property
    def is_matrix_group(self):
        return self.kind == "so3"

    def identity(self):
        if self.is_matrix_group:
            return np.eye(3)
        return np.zeros(self.n)

    def compose(self, a, b):
        if self.is_matrix_group:
            return a @ b
        return a + b

    def inverse(self, g):
        if self.is_matrix_group:
            return g.T.copy()
        return -g

    def exp(self, v):
        """Group exponential of an algebra coordinate vector."""
        v = np.asarray(v, dtype=float)
        self._check(v)
        if self.is_matrix_group:
            return rotation_exp(v)
        return v.copy()

    def log(self, g):
        """Inverse of :meth:`exp`; raises near the cut locus on SO(3)."""
        g = np.asarray(g, dtype=float)
        if self.is_matrix_group:
            return rotation_log(g)
        return g.copy()

    def velocity(self, g, xi0):
        """Group-tangent velocity of a curve with body velocity xi0."""
        if self.is_matrix_group:
            return g @ hat(xi0)
        return np.asarray(xi0, dtype=float).copy()

    def check_element(self, g):
        """Validate the group-element invariant; returns the defect."""
        g = np.asarray(g, dtype=float)
        if self.is_matrix_group:
            defect = orthogonality_defect(g)
            if defect > ORTHOGONALITY_TOL or np.linalg.det(g) <= 0:
                raise ValueError(f"matrix is not a rotation (defect {defect:.2e})")
            return defect
        if not np.all(np.isfinite(g)):
            raise ValueError("group element has non-finite entries")
        return 0.0


def _koszul_connection(structure, metric):
    # 2 <nabla_i A_j, A_k> = <[A_i,A_j],A_k> - <[A_j,A_k],A_i> + <[A_k,A_i],A_j>
    cm = np.einsum("abl,lc->abc", structure, metric)
    rhs = cm - np.transpose(cm, (2, 0, 1)) + np.transpose(cm, (1, 2, 0))
    minv = np.linalg.inv(metric)
    return 0.5 * np.einsum("ijk,kl->ijl", rhs, minv)


def _curvature_tensor(structure, conn):
    # R(A_i, A_j) A_k = nabla_i nabla_j A_k - nabla_j nabla_i A_k - nabla_[A_i,A_j] A_k
    t1 = np.einsum("jkm,iml->ijkl", conn, conn)
    t2 = np.einsum("ikm,jml->ijkl", conn, conn)
    t3 = np.einsum("ijm,mkl->ijkl", structure, conn)
    return t1 - t2 - t3


def _check_structure(structure, tol=1e-12):
    c = structure
    if np.max(np.abs(c + np.transpose(c, (1, 0, 2)))) > tol:
        raise ValueError("structure constants are not antisymmetric")
    jac = (
        np.einsum("ijm,mkl->ijkl", c, c)
        + np.einsum("jkm,mil->ijkl", c, c)
        + np.einsum("kim,mjl->ijkl", c, c)
    )
    if np.max(np.abs(jac)) > tol:
        raise ValueError("structure constants violate the Jacobi identity")


def _build(kind, n, basis, structure, metric, bi_metric):
    metric = _as_spd(metric, n, "metric")
    bi_metric = _as_spd(bi_metric, n, "bi_metric")
    _check_structure(structure)
    conn = _koszul_connection(structure, metric)
    curv = _curvature_tensor(structure, conn)
    beta = np.linalg.solve(metric, bi_metric)
    return GroupModel(
        kind=kind, n=n, basis=basis, structure=structure, metric=metric,
        bi_metric=bi_metric, conn=conn, curv=curv, beta=beta,
        flat=bool(np.all(structure == 0.0)),
    )


def so3(inertia=None, bi_metric=None):
    """SO(3) with the hat-map basis and inertia metric ``<x,y> = x^T M y``.

    ``inertia`` may be a length-3 diagonal or a full SPD 3x3 matrix; the
    default is the identity, in which case the metric is bi-invariant.
    """
    basis = np.stack([hat(e) for e in np.eye(3)])
    structure = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            structure[i, j] = np.cross(np.eye(3)[i], np.eye(3)[j])
    metric = np.eye(3) if inertia is None else inertia
    bi = np.eye(3) if bi_metric is None else bi_metric
    return _build("so3", 3, basis, structure, metric, bi)


def abelian(n, metric=None, bi_metric=None):
    """Flat abelian R^n; exp and log are the identity maps."""
    basis = np.eye(n)
    structure = np.zeros((n, n, n))
    metric = np.eye(n) if metric is None else metric
    bi = np.eye(n) if bi_metric is None else bi_metric
    return _build("abelian", n, basis, structure, metric, bi)


def dexpinv(model, omega, v):
    """Truncated inverse differential of exp, enough for 4th-order stepping.

    Series in ad_omega with Bernoulli coefficients; the cubic term has a
    vanishing coefficient, so truncating after the quadratic term leaves an
    O(|omega|^4) defect.
    """
    w1 = model.bracket(omega, v)
    w2 = model.bracket(omega, w1)
    return v + 0.5 * w1 + w2 / 12.0
