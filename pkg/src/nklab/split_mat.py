"""Split-quaternion algebra on 2x2 real matrices.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)``.  Traceless matrices
(elements of sl(2,R)) are written in the split-quaternion basis

    i = [[1, 0], [0, -1]],  j = [[0, 1], [1, 0]],  k = [[0, 1], [-1, 0]]

with ``<i,i> = <j,j> = 1`` and ``<k,k> = -1`` for the indefinite product
``<a,b> = -1/2 tr(adj(a) b)``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .config import TOL
from .errors import GramMismatch, NoSolution

ID2 = np.eye(2)
SQ_I = np.array([[1.0, 0.0], [0.0, -1.0]])
SQ_J = np.array([[0.0, 1.0], [1.0, 0.0]])
SQ_K = np.array([[0.0, 1.0], [-1.0, 0.0]])
BASIS = (SQ_I, SQ_J, SQ_K)
# <e_a, e_b> on the basis above
MINKOWSKI = np.diag([1.0, 1.0, -1.0])


def mat2(entries) -> np.ndarray:
    m = np.asarray(entries, dtype=float).reshape(2, 2)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def sl2(entries) -> np.ndarray:
    """Return a traceless copy of ``entries``.

    Small trace drift (below ``TOL.trace_symmetrize``) is removed by
    subtracting ``tr/2 * Id``; anything larger is rejected.
    """
    m = mat2(entries).copy()
    tr = m[0, 0] + m[1, 1]
    if abs(tr) >= TOL.trace_symmetrize:
        raise ValueError(f"matrix is not traceless (trace={tr:.3e})")
    m[0, 0] -= tr / 2
    m[1, 1] -= tr / 2
    return m


def adj(a: np.ndarray) -> np.ndarray:
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]], dtype=a.dtype)


def det(a: np.ndarray):
    # no float() cast: complex input is allowed for complex-step derivatives
    return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]


def inv(a: np.ndarray) -> np.ndarray:
    return adj(a) / det(a)


def minkowski_inner(a: np.ndarray, b: np.ndarray) -> float:
    """``-1/2 tr(adj(a) b)``; equals ``-det(a)`` when ``a == b``."""
    return -0.5 * float(np.trace(adj(a) @ b))


def cross(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return 0.5 * (alpha @ beta - beta @ alpha)


def from_coords(x) -> np.ndarray:
    """Traceless matrix ``x[0] i + x[1] j + x[2] k``."""
    x0, x1, x2 = x
    return np.array([[x0, x1 + x2], [x1 - x2, -x0]], dtype=np.result_type(x0, x1, x2, float))


def coords(alpha: np.ndarray) -> np.ndarray:
    """Inverse of :func:`from_coords`; the trace part is discarded."""
    return np.array(
        [
            0.5 * (alpha[0, 0] - alpha[1, 1]),
            0.5 * (alpha[0, 1] + alpha[1, 0]),
            0.5 * (alpha[0, 1] - alpha[1, 0]),
        ]
    )


def _exp_coefficients(m):
    # exp(alpha) = c0 * Id + c1 * alpha where alpha^2 = m Id
    if abs(m) < TOL.null_cone:
        return 1.0 + m / 2.0, 1.0 + m / 6.0
    if np.iscomplexobj(m):
        r = np.sqrt(m)
        return np.cosh(r), np.sinh(r) / r
    if m > 0:
        r = np.sqrt(m)
        return np.cosh(r), np.sinh(r) / r
    r = np.sqrt(-m)
    return np.cos(r), np.sin(r) / r


def exp_sl2(alpha: np.ndarray) -> np.ndarray:
    """Closed-form exponential of a traceless 2x2 matrix.

    Uses ``alpha^2 = <alpha,alpha> Id``.  Complex input is accepted so the
    map can be differentiated by the complex-step method.
    """
    m = -(alpha[0, 0] * alpha[1, 1] - alpha[0, 1] * alpha[1, 0])
    c0, c1 = _exp_coefficients(m)
    return c0 * np.eye(2) + c1 * alpha


def gram(triple: Sequence[np.ndarray]) -> np.ndarray:
    return np.array([[minkowski_inner(a, b) for b in triple] for a in triple])


def solve_conjugation(src: Sequence[np.ndarray], dst: Sequence[np.ndarray]) -> tuple[np.ndarray, int]:
    """Find ``c`` with ``det(c) = +-1`` and ``c src[i] c^-1 = dst[i]``.

    Returns ``(c, sign)`` where ``sign`` is the sign of ``det(c)``.  The
    kernel vector is oriented so its first nonzero entry is positive.
    """
    g_src, g_dst = gram(src), gram(dst)
    if np.max(np.abs(g_src - g_dst)) > TOL.gram_match:
        raise GramMismatch(f"Gram matrices differ by {np.max(np.abs(g_src - g_dst)):.3e}")
    units = [np.eye(2)[:, [r]] @ np.eye(2)[[c], :] for r in range(2) for c in range(2)]
    rows = []
    for s, d in zip(src, dst):
        rows.append(np.stack([(e @ s - d @ e).ravel() for e in units], axis=1))
    system = np.vstack(rows)
    _, sv, vt = np.linalg.svd(system)
    scale = max(sv[0], 1.0)
    if sv[-1] > TOL.conjugation * scale or (len(sv) > 1 and sv[-2] < TOL.conjugation * scale):
        raise NoSolution(f"kernel is not one-dimensional (singular values {sv})")
    vec = vt[-1]
    lead = vec[np.flatnonzero(np.abs(vec) > 1e-12)[0]]
    vec = vec * np.sign(lead)
    c = vec.reshape(2, 2)
    d = det(c)
    if abs(d) < 1e-14:
        raise NoSolution("conjugating matrix is singular")
    c = c / np.sqrt(abs(d))
    for s, t in zip(src, dst):
        if np.max(np.abs(c @ s @ inv(c) - t)) > TOL.conjugation * max(1.0, np.max(np.abs(t))):
            raise NoSolution("conjugation residual above tolerance")
    return c, int(np.sign(d))


def random_sl2(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Draw an SL(2,R) element as ``exp`` of a traceless matrix with entries in [-scale, scale]."""
    x, y, z = rng.uniform(-scale, scale, size=3)
    return exp_sl2(np.array([[x, y], [z, -x]]))


def random_sl2_vector(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return from_coords(rng.uniform(-scale, scale, size=3))
