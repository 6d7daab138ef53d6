"""Nearly Kähler structure on SL(2,R) x SL(2,R) in left-invariant coordinates.

A tangent vector ``(a alpha, b beta)`` at ``(a, b)`` is stored as the
6-vector of split-quaternion coordinates of ``(alpha, beta)``::

    X = (alpha_i, alpha_j, alpha_k, beta_i, beta_j, beta_k)

In these coordinates the metric ``g``, the almost complex structure ``J``
and the almost product structure ``P`` are constant matrices, and the
Levi-Civita connection on left-invariant fields is a constant bilinear map
(``koszul``) computed once from the Koszul formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import split_mat as sm
from .config import TOL
from .errors import DegeneratePlane, SingularGram

SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class Point:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for m in (self.a, self.b):
            if abs(sm.det(m) - 1.0) > TOL.det_one:
                raise ValueError(f"point factor has det {sm.det(m)!r}, expected 1")

    @classmethod
    def identity(cls) -> "Point":
        return cls(np.eye(2), np.eye(2))

    def as_r8(self) -> np.ndarray:
        return np.concatenate([self.a.ravel(), self.b.ravel()])


@dataclass(frozen=True)
class TangentVec:
    """Tangent vector ``(a alpha, b beta)`` at ``base``; ``vec`` holds the coordinates of (alpha, beta)."""

    base: Point
    vec: np.ndarray = field(repr=False)

    @property
    def alpha(self) -> np.ndarray:
        return sm.from_coords(self.vec[:3])

    @property
    def beta(self) -> np.ndarray:
        return sm.from_coords(self.vec[3:])

    def as_r8(self) -> np.ndarray:
        return np.concatenate([(self.base.a @ self.alpha).ravel(), (self.base.b @ self.beta).ravel()])


def algebra_vec(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return np.concatenate([sm.coords(sm.sl2(alpha)), sm.coords(sm.sl2(beta))])


def split_vec(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return sm.from_coords(x[:3]), sm.from_coords(x[3:])


@dataclass(frozen=True)
class StructureConstants:
    gram_g: np.ndarray
    gram_prod: np.ndarray
    j_mat: np.ndarray
    p_mat: np.ndarray
    q_mat: np.ndarray
    bracket: np.ndarray
    koszul: np.ndarray
    gram_g_inv: np.ndarray


def _cross_table() -> np.ndarray:
    table = np.zeros((3, 3, 3))
    for a, ea in enumerate(sm.BASIS):
        for b, eb in enumerate(sm.BASIS):
            table[a, b] = sm.coords(sm.cross(ea, eb))
    return table


def build_structure() -> StructureConstants:
    mink = sm.gram(sm.BASIS)
    zero = np.zeros((3, 3))
    eye = np.eye(3)
    gram_prod = np.block([[mink, zero], [zero, mink]])
    swap = np.block([[zero, eye], [eye, zero]])
    # g(X,Y) = 2/3 <X,Y> - 1/3 <PX,Y>
    gram_g = (2.0 / 3.0) * gram_prod - (1.0 / 3.0) * gram_prod @ swap
    j_mat = np.block([[eye, -2 * eye], [2 * eye, -eye]]) / SQRT3
    q_mat = np.block([[-eye, zero], [zero, eye]])

    cross = _cross_table()
    bracket = np.zeros((6, 6, 6))
    bracket[:3, :3, :3] = 2 * cross
    bracket[3:, 3:, 3:] = 2 * cross

    cond = np.linalg.cond(gram_g)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularGram(f"gram_g is numerically singular (cond={cond:.3e})")
    ginv = np.linalg.inv(gram_g)
    # 2 g(L(A,B),C) = g([A,B],C) - g([A,C],B) - g([B,C],A)
    rhs = (
        np.einsum("abd,dc->abc", bracket, gram_g)
        - np.einsum("acd,db->abc", bracket, gram_g)
        - np.einsum("bcd,da->abc", bracket, gram_g)
    )
    koszul = 0.5 * np.einsum("abc,cd->abd", rhs, ginv)
    return StructureConstants(gram_g, gram_prod, j_mat, swap, q_mat, bracket, koszul, ginv)


STRUCTURE = build_structure()
S = STRUCTURE


def metric_g(x: np.ndarray, y: np.ndarray) -> float:
    return float(x @ S.gram_g @ y)


def metric_product(x: np.ndarray, y: np.ndarray) -> float:
    return float(x @ S.gram_prod @ y)


def apply_J(x: np.ndarray) -> np.ndarray:
    return S.j_mat @ x


def apply_P(x: np.ndarray) -> np.ndarray:
    return S.p_mat @ x


def apply_Q(x: np.ndarray) -> np.ndarray:
    return S.q_mat @ x


def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("a,b,abc->c", x, y, S.bracket)


def koszul_connection(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Levi-Civita derivative of the left-invariant field ``y`` along ``x``."""
    return np.einsum("a,b,abc->c", x, y, S.koszul)


def koszul_direct(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Koszul formula solved from scratch for one pair (no cached table)."""
    rhs = np.array(
        [
            metric_g(bracket(x, y), e) - metric_g(bracket(x, e), y) - metric_g(bracket(y, e), x)
            for e in np.eye(6)
        ]
    )
    return np.linalg.solve(2 * S.gram_g, rhs)


def tensor_G(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``G(X,Y) = (nabla_X J) Y``."""
    return koszul_connection(x, apply_J(y)) - apply_J(koszul_connection(x, y))


def curvature(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z`` on left-invariant fields."""
    L = koszul_connection
    return L(x, L(y, z)) - L(y, L(x, z)) - L(bracket(x, y), z)


def curvature_closed_form(u: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    g, J, P = metric_g, apply_J, apply_P
    Ju, Jv, Jw = J(u), J(v), J(w)
    Pu, Pv = P(u), P(v)
    JPu, JPv = J(Pu), J(Pv)
    return (
        -5.0 / 6.0 * (g(v, w) * u - g(u, w) * v)
        - 1.0 / 6.0 * (g(Jv, w) * Ju - g(Ju, w) * Jv - 2 * g(Ju, v) * Jw)
        - 2.0 / 3.0 * (g(Pv, w) * Pu - g(Pu, w) * Pv + g(JPv, w) * JPu - g(JPu, w) * JPv)
    )


def sectional_curvature(u: np.ndarray, v: np.ndarray) -> float:
    denom = metric_g(u, u) * metric_g(v, v) - metric_g(u, v) ** 2
    if abs(denom) < TOL.degenerate_plane:
        raise DegeneratePlane(f"plane has degenerate metric (denominator {denom:.3e})")
    return metric_g(curvature(u, v, v), u) / denom


def type_constant_rhs(x, y, z, w, coefficient: float = -2.0 / 3.0) -> float:
    g, J = metric_g, apply_J
    return coefficient * (
        g(x, z) * g(y, w) - g(x, w) * g(y, z) + g(J(x), z) * g(y, J(w)) - g(J(x), w) * g(y, J(z))
    )


def rotated_product_structure(eta: float) -> np.ndarray:
    """Matrix of ``cos(eta) P + sin(eta) J P``."""
    return np.cos(eta) * S.p_mat + np.sin(eta) * S.j_mat @ S.p_mat


def nabla_P_residual(x: np.ndarray, y: np.ndarray, p_mat: np.ndarray | None = None) -> float:
    """Norm of ``(nabla_X P)Y - 1/2 (J G(X,PY) + J P G(X,Y))``."""
    p_mat = S.p_mat if p_mat is None else p_mat
    L, J, G = koszul_connection, apply_J, tensor_G
    lhs = L(x, p_mat @ y) - p_mat @ L(x, y)
    rhs = 0.5 * (J(G(x, p_mat @ y)) + J(p_mat @ G(x, y)))
    return float(np.linalg.norm(lhs - rhs))


verify_nabla_P = nabla_P_residual


def signature(mat: np.ndarray) -> tuple[int, int]:
    ev = np.linalg.eigvalsh(mat)
    return int(np.sum(ev > 0)), int(np.sum(ev < 0))


def random_algebra_vec(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return rng.uniform(-scale, scale, size=6)


def random_point(rng: np.random.Generator) -> Point:
    return Point(sm.random_sl2(rng), sm.random_sl2(rng))


# --- flat R^8 embedding ---------------------------------------------------


def _left_field(point_a, point_b, x):
    alpha, beta = split_vec(x)
    return np.concatenate([(point_a @ alpha).ravel(), (point_b @ beta).ravel()])


def embedding_residuals(point: Point, x: np.ndarray, y: np.ndarray, step: float) -> tuple[float, float]:
    """Residuals of the flat-space Gauss formula at one point.

    ``D_X Y`` of the left-invariant field ``Y`` is taken by a 3-point central
    difference along the curve ``t -> (a e^{t alpha}, b e^{t beta})``.  The
    first residual compares it with the full right-hand side
    ``nabla^E_X Y + 1/2 <X,Y>(a,b) + 1/2 <Y,QX>(-a,b)``; the second compares
    only its tangential part with ``nabla_X Y + 1/2 (JG(X,PY) + JG(Y,PX))``.
    """
    alpha, beta = split_vec(x)
    a, b = point.a, point.b

    def field_at(t):
        return _left_field(a @ sm.exp_sl2(t * alpha), b @ sm.exp_sl2(t * beta), y)

    dxy = (field_at(step) - field_at(-step)) / (2 * step)

    J, G, P = apply_J, tensor_G, apply_P
    nabla_e = koszul_connection(x, y) + 0.5 * (J(G(x, P(y))) + J(G(y, P(x))))
    normal = 0.5 * metric_product(x, y) * point.as_r8() + 0.5 * metric_product(y, apply_Q(x)) * np.concatenate(
        [-a.ravel(), b.ravel()]
    )
    expected = _left_field(a, b, nabla_e) + normal
    full = float(np.max(np.abs(dxy - expected)))

    # tangential part: left-translate and drop the trace
    pa = sm.inv(a) @ dxy[:4].reshape(2, 2)
    pb = sm.inv(b) @ dxy[4:].reshape(2, 2)
    tangential = np.concatenate([sm.coords(pa), sm.coords(pb)])
    tang = float(np.max(np.abs(tangential - nabla_e)))
    return full, tang


def verify_euclidean_embedding(samples: int, step: float, rng: np.random.Generator) -> dict:
    full_max = tang_max = 0.0
    for _ in range(samples):
        point = random_point(rng)
        x, y = random_algebra_vec(rng), random_algebra_vec(rng)
        full, tang = embedding_residuals(point, x, y, step)
        full_max, tang_max = max(full_max, full), max(tang_max, tang)
    return {"samples": samples, "step": step, "connection_r8": full_max, "relation_product_kahler": tang_max}
