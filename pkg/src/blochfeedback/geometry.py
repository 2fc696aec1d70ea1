"""Vector and rotation primitives on R^3.

Vectors are numpy arrays with a trailing axis of length 3; matrices are
``(..., 3, 3)`` arrays in row-major convention, i.e. ``m[i, j]`` is the entry
in row ``i`` and column ``j`` and ``m @ v`` acts on column vectors.  Every
function broadcasts over leading axes.
"""

from __future__ import annotations

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
BASIS = (E1, E2, E3)

# generator of the rotating frame, S x = x ^ e3
S = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


class DegenerateStateError(ArithmeticError):
    """Raised when a vector that must be normalized has zero length."""


def wedge(a, b):
    """Cross product ``a ^ b`` (broadcasting)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ],
        axis=-1,
    )


def dot(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def rot_about_e1(alpha):
    """Rotation of angle ``alpha`` about the e1 axis."""
    alpha = np.asarray(alpha, dtype=float)
    c, s = np.cos(alpha), np.sin(alpha)
    out = np.zeros(alpha.shape + (3, 3))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = c
    out[..., 1, 2] = -s
    out[..., 2, 1] = s
    out[..., 2, 2] = c
    return out


def exp_sigma_omega_S(theta):
    """Closed form of ``expm(theta * S)``.

    This is a rotation about e3 by ``-theta``; ``theta`` may be an array
    (one matrix per entry).
    """
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = np.zeros(theta.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1.0
    return out


def renormalize(v):
    """Project ``v`` (or each row of ``v``) back onto the unit sphere.

    Raises
    ------
    DegenerateStateError
        If any vector has zero length; in a time loop this means the step
        size is far too large.
    """
    v = np.asarray(v, dtype=float)
    norm = np.sqrt(dot(v, v))
    if np.any(norm == 0.0) or not np.all(np.isfinite(norm)):
        bad = np.flatnonzero(~(np.atleast_1d(norm) > 0.0) | ~np.isfinite(np.atleast_1d(norm)))
        raise DegenerateStateError(
            f"cannot normalize degenerate vector(s) at index {bad.tolist()}"
        )
    return v / norm[..., None]


def rotation_defects(m):
    """Return ``(orthogonality_defect, det_defect)`` for a stack of matrices.

    The orthogonality defect is ``max |m^T m - I|`` entrywise, the
    determinant defect is ``max |det m - 1|``.
    """
    m = np.asarray(m, dtype=float)
    gram = np.swapaxes(m, -1, -2) @ m
    orth = np.max(np.abs(gram - np.eye(3)))
    det = np.max(np.abs(np.linalg.det(m) - 1.0))
    return float(orth), float(det)


def is_rotation(m, tol=1e-12):
    orth, det = rotation_defects(m)
    return orth <= tol and det <= tol


def nearest_rotation(m):
    """Orthogonal polar factor of a 3x3 matrix, forced to determinant +1."""
    u, _, vt = np.linalg.svd(m)
    if np.linalg.det(u @ vt) < 0.0:
        u = u.copy()
        u[:, -1] *= -1.0
    return u @ vt
