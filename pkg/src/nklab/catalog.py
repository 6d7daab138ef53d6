"""The eight extrinsically homogeneous Lagrangian immersions.

Each immersion maps parameters ``(u, v, w)`` to a point ``(p, q)``.  Rows
whose domain is SL(2,R) use the chart ``(x, y, z) -> e^{x i} e^{y j} e^{z k}``.
The Bianchi rows are ``exp(c1 e1 + c2 e2 + c3 e3)`` applied to ``(Id, Id)``,
where ``e_i`` lie in sl(2,R)^3 and a triple ``(A, B, C)`` acts as
``(p, q) -> (A p C^-1, B q C^-1)``.

All maps accept complex parameters so they can be differentiated with the
complex-step method as well as by finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import nk_core as nk
from . import split_mat as sm
from .config import TOL
from .errors import DegenerateError, DomainError, NotApplicable, UnknownImmersion

I, J, K = sm.SQ_I, sm.SQ_J, sm.SQ_K
SQRT2, SQRT3, SQRT6 = np.sqrt(2.0), np.sqrt(3.0), np.sqrt(6.0)

# below this |argument| the removable-singularity coefficients use their Taylor series
_SERIES_CUTOFF = 1e-4


class Row(Enum):
    DIAG = "diag"
    BERGER_SPACELIKE = "berger_spacelike"
    BERGER_TIMELIKE = "berger_timelike"
    PSL = "psl"
    TORUS = "torus"
    IOTA = "iota"
    F_LAMBDA = "f_lambda"
    JMATH = "jmath"


ROW_NUMBER = {r: n for n, r in enumerate(Row, start=1)}


@dataclass(frozen=True)
class ImmersionId:
    row: Row
    lam: float | None = None

    def __post_init__(self):
        if self.row is Row.F_LAMBDA:
            if self.lam is None or not np.isfinite(self.lam):
                raise ValueError("f_lambda needs a finite lambda")
        elif self.lam is not None:
            raise ValueError(f"{self.row.value} takes no lambda")

    @property
    def name(self) -> str:
        if self.row is Row.F_LAMBDA:
            return f"f_lambda[{self.lam:g}]"
        return self.row.value

    @property
    def number(self) -> int:
        return ROW_NUMBER[self.row]


def parse_id(name: str, lam: float | None = None) -> ImmersionId:
    aliases = {r.value: r for r in Row}
    aliases.update({str(ROW_NUMBER[r]): r for r in Row})
    if name not in aliases:
        raise UnknownImmersion(f"unknown immersion {name!r}; choose from {sorted(a for a in aliases if not a.isdigit())}")
    row = aliases[name]
    if row is Row.F_LAMBDA:
        return ImmersionId(row, 2.0 if lam is None else float(lam))
    return ImmersionId(row)


def all_ids(lambdas=(-1.0, 0.5, 2.0, 3.0)) -> list[ImmersionId]:
    out = []
    for r in Row:
        if r is Row.F_LAMBDA:
            out.extend(ImmersionId(r, float(l)) for l in lambdas)
        else:
            out.append(ImmersionId(r))
    return out


# --- removable singularities --------------------------------------------------


def x_csch_x(x):
    """``x / sinh(x)``, equal to 1 at 0."""
    if abs(x) < _SERIES_CUTOFF:
        x2 = x * x
        return 1 - x2 / 6 + 7 * x2 * x2 / 360
    return x / np.sinh(x)


def x_over_expm1(x):
    """``x / (e^x - 1)``, equal to 1 at 0."""
    if abs(x) < _SERIES_CUTOFF:
        return 1 - x / 2 + x * x / 12 - x**4 / 720
    return x / np.expm1(x) if not np.iscomplexobj(x) else x / (np.exp(x) - 1)


def coef_iota(w):
    return np.exp(w) * x_csch_x(w)


def coef_f_lambda(w):
    return np.exp(-w) * x_csch_x(w)


def coef_jmath_e2(v):
    # 2 e^{2v} v / (e^{2v} - 1); its limit at v = 0 is 1
    return np.exp(2 * v) * x_over_expm1(2 * v)


def coef_jmath_e3(v):
    return x_over_expm1(v)


# --- Lie subalgebras of the Bianchi rows ------------------------------------


def _triple(a, b, c):
    return (sm.from_coords(a), sm.from_coords(b), sm.from_coords(c))


def bianchi_basis(iid: ImmersionId):
    """``e1, e2, e3`` in sl(2,R)^3, each a triple of 2x2 matrices."""
    if iid.row is Row.IOTA:
        e1 = (I, -I, -I)
        e2 = (2.25 * (J - K), 0.5 * (J + K), 0 * I)
        e3 = (2.25 * (K - J), 0 * I, 0.5 * (J + K))
    elif iid.row is Row.F_LAMBDA:
        lam = iid.lam
        e1 = (I, 0 * I, 0 * I)
        e2 = (0.5 * (J + K), 0 * I, 0 * I)
        e3 = (0 * I, -(lam + 7) / 6 * J + (11 - lam) / 6 * K, -(lam + 9) / 6 * J + (9 - lam) / 6 * K)
    elif iid.row is Row.JMATH:
        r23 = np.sqrt(2.0 / 3.0)
        e1 = _triple(
            ((27 + 2 * SQRT6) / 18, -(2 * r23 + 0.75), 8 / 3 * r23 + 0.75),
            (-(1 + 17 / (12 * SQRT6)), (48 - 17 * SQRT6) / 96, -(0.5 + 85 / (48 * SQRT6))),
            (-0.5, (1 - 3 * SQRT6) / 4, (3 * SQRT6 - 1) / 4),
        )
        e2 = _triple((0, 0, 0), (r23, 0.5 * np.sqrt(1.5), 5 / (2 * SQRT6)), (0, 0, 0))
        e3 = _triple(
            (8 / 9 * (2 + 3 * SQRT6), -2 / 3 * (7 + 2 * SQRT6), 2 / 9 * (37 + 6 * SQRT6)),
            (0, 0, 0),
            (0, -6, 6),
        )
    else:
        raise NotApplicable(f"{iid.name} is not a Bianchi row")
    return e1, e2, e3


# expected brackets: [e1,e2], [e1,e3], [e2,e3] as coefficient vectors on (e1,e2,e3)
EXPECTED_BRACKETS = {
    Row.IOTA: ((0, -2, 0), (0, 0, -2), (0, 0, 0)),
    Row.F_LAMBDA: ((0, 2, 0), (0, 0, 0), (0, 0, 0)),
    Row.JMATH: ((0, -2, 0), (0, 0, 1), (0, 0, 0)),
}


@dataclass(frozen=True)
class SubalgebraSpec:
    basis: tuple
    brackets: tuple

    def bracket_residual(self) -> float:
        res = 0.0
        pairs = [(0, 1), (0, 2), (1, 2)]
        for (i, j), coef in zip(pairs, self.brackets):
            lhs = [x @ y - y @ x for x, y in zip(self.basis[i], self.basis[j])]
            rhs = [sum(c * self.basis[k][f] for k, c in enumerate(coef)) for f in range(3)]
            res = max(res, max(float(np.max(np.abs(a - b))) for a, b in zip(lhs, rhs)))
        return res


def subalgebra(iid: ImmersionId) -> SubalgebraSpec:
    return SubalgebraSpec(bianchi_basis(iid), EXPECTED_BRACKETS[iid.row])


def _exp_triple_raw(coeffs, basis):
    mats = [sum(c * e[f] for c, e in zip(coeffs, basis)) for f in range(3)]
    return tuple(sm.exp_sl2(m) for m in mats)


def _exp_triple(coeffs, basis):
    a, b, c = _exp_triple_raw(coeffs, basis)
    cinv = sm.inv(c)
    return a @ cinv, b @ cinv


# --- evaluation ---------------------------------------------------------------


def chart_sl2(x, y, z):
    return sm.exp_sl2(x * I) @ sm.exp_sl2(y * J) @ sm.exp_sl2(z * K)


def evaluate_triple(iid: ImmersionId, params):
    """The point as a triple ``(A, B, C)`` with ``(p, q) = (A C^-1, B C^-1)``."""
    u, v, w = params
    if iid.row in (Row.IOTA, Row.F_LAMBDA, Row.JMATH):
        basis = bianchi_basis(iid)
        if iid.row is Row.IOTA:
            s = coef_iota(w)
            return _exp_triple_raw((w, u * s, v * s), basis)
        if iid.row is Row.F_LAMBDA:
            return _exp_triple_raw((w, u * coef_f_lambda(w), v), basis)
        return _exp_triple_raw((v, u * coef_jmath_e2(v), w * coef_jmath_e3(v)), basis)
    p, q = evaluate_raw(iid, params)
    return p, q, np.eye(2)


def evaluate_raw(iid: ImmersionId, params):
    """``(p, q)`` as bare arrays (real or complex)."""
    u, v, w = params
    row = iid.row
    if row in (Row.DIAG, Row.BERGER_SPACELIKE, Row.BERGER_TIMELIKE, Row.PSL):
        g = chart_sl2(u, v, w)
        if row is Row.DIAG:
            return g, g
        if row is Row.BERGER_SPACELIKE:
            return g, I @ g @ I
        if row is Row.BERGER_TIMELIKE:
            return g, -K @ g @ K
        ginv = sm.inv(g)
        return I @ g @ I @ ginv, J @ g @ J @ ginv
    if row is Row.TORUS:
        ek = sm.exp_sl2(-u * K)
        return sm.exp_sl2(v * I) @ ek, sm.exp_sl2(w * J) @ ek
    basis = bianchi_basis(iid)
    if row is Row.IOTA:
        s = coef_iota(w)
        return _exp_triple((w, u * s, v * s), basis)
    if row is Row.F_LAMBDA:
        return _exp_triple((w, u * coef_f_lambda(w), v), basis)
    return _exp_triple((v, u * coef_jmath_e2(v), w * coef_jmath_e3(v)), basis)


def evaluate(iid: ImmersionId, params) -> nk.Point:
    params = np.asarray(params, dtype=float)
    if params.shape != (3,) or not np.all(np.isfinite(params)):
        raise DomainError(f"parameters must be three finite reals, got {params!r}")
    p, q = evaluate_raw(iid, params)
    return nk.Point(p, q)


def _lie_coords(p, q, dp, dq):
    return np.concatenate([sm.coords(sm.inv(p) @ dp), sm.coords(sm.inv(q) @ dq)])


def _trace_drift(p, q, dp, dq) -> float:
    return max(abs(np.trace(sm.inv(p) @ dp)), abs(np.trace(sm.inv(q) @ dq)))


def pushforward_fd(iid: ImmersionId, params, step: float = 1e-4) -> np.ndarray:
    """Rows are Lie coordinates of ``f_u, f_v, f_w`` (5-point central differences)."""
    params = np.asarray(params, dtype=float)
    p, q = evaluate_raw(iid, params)
    out = np.empty((3, 6))
    for m in range(3):
        for h in (step, step / 2):
            e = np.zeros(3)
            e[m] = h
            vals = [evaluate_raw(iid, params + s * e) for s in (2, 1, -1, -2)]
            dp = (-vals[0][0] + 8 * vals[1][0] - 8 * vals[2][0] + vals[3][0]) / (12 * h)
            dq = (-vals[0][1] + 8 * vals[1][1] - 8 * vals[2][1] + vals[3][1]) / (12 * h)
            if _trace_drift(p, q, dp, dq) < TOL.lagrangian_analytic:
                break
        else:
            raise DegenerateError(f"pushforward of {iid.name} leaves the tangent space (trace drift)")
        out[m] = _lie_coords(p, q, dp, dq)
    return out


def pushforward_cs(iid: ImmersionId, params, step: float = 1e-20, center=None) -> np.ndarray:
    """Same as :func:`pushforward_fd` but by the complex-step method (exact to rounding).

    With ``center`` the immersion is first moved by the isometry that left
    multiplies triples by the inverse of the triple at ``center``.  That
    isometry preserves g, J and P, so every quantity expressed on the
    coordinate fields (Gram, A, B, Christoffel symbols, h) is unchanged,
    while the Lie coordinates near ``center`` stay well conditioned.
    """
    params = np.asarray(params, dtype=float)

    def point(x):
        a, b, c = evaluate_triple(iid, x)
        if center is not None:
            a0, b0, c0 = evaluate_triple(iid, np.asarray(center, dtype=float))
            a, b, c = sm.inv(a0) @ a, sm.inv(b0) @ b, sm.inv(c0) @ c
        cinv = sm.inv(c)
        return a @ cinv, b @ cinv

    p, q = point(params)
    out = np.empty((3, 6))
    for m in range(3):
        z = params.astype(complex)
        z[m] += 1j * step
        pz, qz = point(z)
        out[m] = _lie_coords(p, q, pz.imag / step, qz.imag / step)
    return out


def pushforward(iid: ImmersionId, params, method: str = "fd", step: float = 1e-4) -> list[nk.TangentVec]:
    rows = pushforward_fd(iid, params, step) if method == "fd" else pushforward_cs(iid, params)
    base = evaluate(iid, params)
    gram = np.array([[nk.metric_g(a, b) for b in rows] for a in rows])
    if abs(np.linalg.det(gram)) < TOL.degenerate_gram:
        raise DegenerateError(f"induced metric of {iid.name} is degenerate at {params}")
    return [nk.TangentVec(base, r) for r in rows]


# frames printed alongside the examples, as rows of coefficients on (d_u, d_v, d_w)
def printed_frame(iid: ImmersionId, params) -> np.ndarray:
    u, v, w = params
    if iid.row is Row.TORUS:
        return np.sqrt(1.5) * np.eye(3)
    if iid.row is Row.IOTA:
        s = np.exp(-2 * w)
        return np.array([[-s, -s, 0], [s / 3, -s / 3, 0], [0, 0, np.sqrt(3 / 8)]])
    if iid.row is Row.F_LAMBDA:
        s = np.exp(2 * w)
        return np.array([[s, 0, 0], [(1 - iid.lam) / 3 * s, 1, 0], [0, 0, np.sqrt(1.5)]])
    if iid.row is Row.JMATH:
        s = np.exp(-2 * v)
        return np.array(
            [[-np.sqrt(1.5) * s, 0, 0], [0, -1 / SQRT6, 0], [7 * s / (4 * SQRT6), SQRT6, -0.75 * np.exp(v)]]
        )
    raise NotApplicable(f"no coordinate frame printed for {iid.name}")


# --- expected profiles --------------------------------------------------------


@dataclass(frozen=True)
class ExpectedProfile:
    lag_type: str
    angles: tuple | None
    K: float | None
    tot_geodesic: bool
    h_constants: dict = field(default_factory=dict)
    omega_constants: dict = field(default_factory=dict)
    delta_signature: str = "Delta1"
    constant_curvature: bool = True

    def to_json(self) -> dict:
        return {
            "lag_type": self.lag_type,
            "angles": list(self.angles) if self.angles is not None else None,
            "K": self.K,
            "tot_geodesic": self.tot_geodesic,
            "h_constants": self.h_constants,
            "omega_constants": self.omega_constants,
            "delta_signature": self.delta_signature,
            "constant_curvature": self.constant_curvature,
        }


def expected_profile(iid: ImmersionId) -> ExpectedProfile:
    row = iid.row
    third = np.pi / 3
    if row is Row.DIAG:
        return ExpectedProfile("I", (0.0, 0.0, 0.0), -1.5, True)
    if row is Row.BERGER_SPACELIKE:
        return ExpectedProfile("I", None, None, True, constant_curvature=False)
    if row is Row.BERGER_TIMELIKE:
        return ExpectedProfile("I", None, None, True, constant_curvature=False)
    if row is Row.PSL:
        return ExpectedProfile("I", (0.0, third, 2 * third), -3 / 8, False, {"h12^3": 1 / (2 * SQRT2)})
    if row is Row.TORUS:
        return ExpectedProfile("I", (0.0, third, 2 * third), 0.0, False, {"h12^3": -1 / SQRT2})
    if row is Row.IOTA:
        return ExpectedProfile(
            "II",
            (third, third),
            -1.5,
            False,
            {"h22^3": -SQRT2 / 3},
            {"w12^3": -np.sqrt(1.5), "w21^3": -np.sqrt(1.5), "w31^1": 0.0, "w33^2": 0.0},
            "Delta2",
        )
    if row is Row.F_LAMBDA:
        r = np.sqrt(1.5)
        return ExpectedProfile(
            "II",
            (third, third),
            -1.5,
            False,
            {"h22^3": 2 * SQRT2 / 3},
            {"w12^3": r, "w21^3": r, "w31^1": r, "w33^2": np.sqrt(2 / 3) * (1 - iid.lam)},
            "Delta2",
        )
    return ExpectedProfile(
        "III",
        None,
        None,
        False,
        {
            "h22^2": 2 * SQRT2 / 3,
            "h22^1": -13 / (18 * SQRT2),
            "h22^3": 5 * SQRT2 / 9,
            "h11^1": 0.0,
            "h11^2": 0.0,
            "h11^3": 0.0,
            "h12^3": 0.0,
        },
        {},
        "Delta2",
        constant_curvature=False,
    )


DOMAIN_BOX = (-1.0, 1.0)


def export_json(iid: ImmersionId) -> str:
    obj = {
        "id": iid.name,
        "row": iid.number,
        "lambda": iid.lam,
        "domain_box": [list(DOMAIN_BOX)] * 3,
        "expected_profile": expected_profile(iid).to_json(),
    }
    return json.dumps(obj, sort_keys=True)


def random_params(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return rng.uniform(-scale, scale, size=3)
