"""Isometries of the nearly Kähler SL(2,R) x SL(2,R).

A point ``(p, q)`` is identified with the class of the triple ``(p, q, 1)``
modulo right multiplication by the diagonal.  In that picture every isometry
is "left multiply the triple, then permute its entries", which makes
composition a short explicit formula.  The element ``(a, b, c, k, perm)``
multiplies by ``i^k (a, b, c)`` and then applies ``Psi_perm``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nk_core as nk
from . import split_mat as sm
from .config import TOL
from .errors import CompositionError

TAU_1 = 2 * np.pi / 3
TAU_2 = 4 * np.pi / 3

# (kappa, tau index) -> permutation pi with Psi[x]_i = x[pi[i]] on triples.
# The kappa label follows J o dPsi = (-1)^kappa dPsi o J: the transpositions
# (q,p), (pq^-1,q^-1), (p^-1,qp^-1) reverse J and carry kappa = 1.
PERMS: dict[tuple[int, int], tuple[int, int, int]] = {
    (0, 0): (0, 1, 2),
    (1, 0): (1, 0, 2),
    (0, 1): (2, 0, 1),
    (1, 1): (0, 2, 1),
    (0, 2): (1, 2, 0),
    (1, 2): (2, 1, 0),
}
_PERM_KEY = {v: k for k, v in PERMS.items()}
TAUS = (0.0, TAU_1, TAU_2)


def perm_name(key: tuple[int, int]) -> str:
    kappa, t = key
    return f"Psi_{kappa},{['0', '2pi/3', '4pi/3'][t]}"


@dataclass(frozen=True)
class Isometry:
    a: np.ndarray = field(default_factory=lambda: np.eye(2))
    b: np.ndarray = field(default_factory=lambda: np.eye(2))
    c: np.ndarray = field(default_factory=lambda: np.eye(2))
    k: int = 0
    perm: tuple[int, int] = (0, 0)

    def __post_init__(self):
        for m in (self.a, self.b, self.c):
            if abs(sm.det(m) - 1.0) > TOL.det_one:
                raise ValueError(f"isometry factor has det {sm.det(m)!r}, expected 1")
        if self.k not in (0, 1):
            raise ValueError("k must be 0 or 1")
        if self.perm not in PERMS:
            raise ValueError(f"unknown permutation key {self.perm!r}")

    @property
    def kappa(self) -> int:
        return self.perm[0]

    @property
    def tau(self) -> float:
        return TAUS[self.perm[1]]

    def factors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """The SL±(2,R) triple ``i^k (a, b, c)``."""
        s = sm.SQ_I if self.k else np.eye(2)
        return s @ self.a, s @ self.b, s @ self.c

    @classmethod
    def phi(cls, a, b, c, k: int = 0) -> "Isometry":
        return cls(np.asarray(a, float), np.asarray(b, float), np.asarray(c, float), k, (0, 0))

    @classmethod
    def psi(cls, kappa: int, tau_index: int) -> "Isometry":
        return cls(perm=(kappa, tau_index))


IDENTITY = Isometry()


def _permute(triple, pi):
    return tuple(triple[pi[i]] for i in range(3))


def _to_point(triple) -> nk.Point:
    cinv = sm.inv(triple[2])
    return nk.Point(triple[0] @ cinv, triple[1] @ cinv)


def act(F: Isometry, p: nk.Point) -> nk.Point:
    fa, fb, fc = F.factors()
    moved = (fa @ p.a, fb @ p.b, fc)
    return _to_point(_permute(moved, PERMS[F.perm]))


def _split_sign(m: np.ndarray) -> tuple[np.ndarray, int]:
    if sm.det(m) > 0:
        return m, 0
    return sm.SQ_I @ m, 1


def compose(F: Isometry, G: Isometry, probes: int = 8) -> Isometry:
    """Return the isometry ``F o G`` in canonical ``(a, b, c, k, perm)`` form.

    Uses ``x -> pi1(g1 pi2(g2 x)) = (pi2 o pi1)((pi2^-1 g1) g2 x)`` on
    triples, then checks the result pointwise on ``probes`` fixed points.
    """
    pi1, pi2 = PERMS[F.perm], PERMS[G.perm]
    g1, g2 = F.factors(), G.factors()
    h = [None] * 3
    for i in range(3):
        h[pi2[i]] = g1[i]
    prod = [h[i] @ g2[i] for i in range(3)]
    sigma = tuple(pi2[pi1[i]] for i in range(3))
    parts = [_split_sign(m) for m in prod]
    ks = {k for _, k in parts}
    if len(ks) != 1:
        raise CompositionError("factors of the composite have mixed determinant signs")
    result = Isometry(parts[0][0], parts[1][0], parts[2][0], ks.pop(), _PERM_KEY[sigma])

    rng = np.random.default_rng(20240)
    for _ in range(probes):
        p = nk.random_point(rng)
        lhs, rhs = act(result, p), act(F, act(G, p))
        err = max(np.max(np.abs(lhs.a - rhs.a)), np.max(np.abs(lhs.b - rhs.b)))
        scale = max(1.0, np.max(np.abs(rhs.a)), np.max(np.abs(rhs.b)))
        if err > TOL.compose * scale:
            raise CompositionError(f"composite disagrees with sequential action by {err:.3e}")
    return result


# --- differentials -----------------------------------------------------------


def differential_fd(F: Isometry, p: nk.Point, x: np.ndarray, step: float = 1e-3) -> np.ndarray:
    """Lie-algebra coordinates of ``dF(X)`` at ``F(p)`` by a 5-point central difference."""
    alpha, beta = nk.split_vec(x)

    def image(t):
        q = act(F, nk.Point(p.a @ sm.exp_sl2(t * alpha), p.b @ sm.exp_sl2(t * beta)))
        return np.concatenate([q.a.ravel(), q.b.ravel()])

    d = (-image(2 * step) + 8 * image(step) - 8 * image(-step) + image(-2 * step)) / (12 * step)
    base = act(F, p)
    da = sm.inv(base.a) @ d[:4].reshape(2, 2)
    db = sm.inv(base.b) @ d[4:].reshape(2, 2)
    return np.concatenate([sm.coords(da), sm.coords(db)])


def _psi_algebra(perm, p: nk.Point, alpha, beta):
    a, b = p.a, p.b
    if perm == (0, 0):
        return alpha, beta
    if perm == (1, 0):
        return beta, alpha
    ad_q = lambda m: b @ m @ sm.inv(b)  # noqa: E731
    ad_p = lambda m: a @ m @ sm.inv(a)  # noqa: E731
    if perm == (1, 1):  # (pq^-1, q^-1)
        return ad_q(alpha - beta), -ad_q(beta)
    if perm == (0, 1):  # (q^-1, pq^-1)
        return -ad_q(beta), ad_q(alpha - beta)
    if perm == (0, 2):  # (qp^-1, p^-1)
        return ad_p(beta - alpha), -ad_p(alpha)
    return -ad_p(alpha), ad_p(beta - alpha)  # (p^-1, qp^-1)


def differential_analytic(F: Isometry, p: nk.Point, x: np.ndarray) -> np.ndarray:
    alpha, beta = nk.split_vec(x)
    _, _, fc = F.factors()
    ad_c = lambda m: fc @ m @ sm.inv(fc)  # noqa: E731
    alpha, beta = ad_c(alpha), ad_c(beta)
    fa, fb, _ = F.factors()
    moved = nk.Point(fa @ p.a @ sm.inv(fc), fb @ p.b @ sm.inv(fc))
    alpha, beta = _psi_algebra(F.perm, moved, alpha, beta)
    return np.concatenate([sm.coords(alpha), sm.coords(beta)])


def differential(F: Isometry, X: nk.TangentVec, method: str = "fd", step: float = 1e-3) -> nk.TangentVec:
    if method == "fd":
        vec = differential_fd(F, X.base, X.vec, step)
    elif method == "analytic":
        vec = differential_analytic(F, X.base, X.vec)
    else:
        raise ValueError(f"unknown differential method {method!r}")
    return nk.TangentVec(act(F, X.base), vec)


# --- verification -----------------------------------------------------------


def random_isometry(rng: np.random.Generator, k: int | None = None, perm=None) -> Isometry:
    k = int(rng.integers(2)) if k is None else k
    perm = list(PERMS)[int(rng.integers(6))] if perm is None else perm
    return Isometry(sm.random_sl2(rng), sm.random_sl2(rng), sm.random_sl2(rng), k, perm)


def verify_isometry(F: Isometry, samples: int, rng: np.random.Generator, method: str = "fd") -> dict:
    """Check that ``F`` preserves ``g`` and measure its twist of ``J`` and ``P``.

    ``j_sign`` is whichever of ``dF J = +-J dF`` fits; ``p_tau`` is the angle
    ``tau`` in ``P dF = dF (cos tau P + sin tau JP)`` fitted by least squares.
    """
    metric_res = 0.0
    j_res = {1: 0.0, -1: 0.0}
    rows, rhs = [], []
    for _ in range(samples):
        p = nk.random_point(rng)
        x, y = nk.random_algebra_vec(rng), nk.random_algebra_vec(rng)
        d = (lambda v: differential_fd(F, p, v)) if method == "fd" else (lambda v: differential_analytic(F, p, v))
        dx, dy = d(x), d(y)
        metric_res = max(metric_res, abs(nk.metric_g(dx, dy) - nk.metric_g(x, y)))
        djx = d(nk.apply_J(x))
        for s in (1, -1):
            j_res[s] = max(j_res[s], float(np.max(np.abs(djx - s * nk.apply_J(dx)))))
        px = nk.apply_P(x)
        rows.append(np.stack([d(px), d(nk.apply_J(px))], axis=1))
        rhs.append(nk.apply_P(dx))
    j_sign = 1 if j_res[1] <= j_res[-1] else -1
    coef, *_ = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs), rcond=None)
    p_res = float(np.max(np.abs(np.vstack(rows) @ coef - np.concatenate(rhs))))
    tau = float(np.mod(np.arctan2(coef[1], coef[0]), 2 * np.pi))
    if abs(tau - 2 * np.pi) < 1e-6:
        tau = 0.0
    return {
        "metric_residual": metric_res,
        "j_sign": j_sign,
        "j_residual": j_res[j_sign],
        "p_tau": tau,
        "p_residual": p_res,
        "p_norm": float(np.hypot(*coef)),
    }
