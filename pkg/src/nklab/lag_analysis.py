"""Analysis of Lagrangian immersions into the nearly Kähler SL(2,R) x SL(2,R).

The pipeline works in the coordinate frame ``d_1, d_2, d_3`` of the immersion
first, where nothing depends on a choice of frame:

* ``c[m]``: Lie coordinates of ``d_m f``,
* ``D[m, n] = d_m c[n] + L(c[m], c[n])``: the ambient derivative,
* ``D[m, n] = Gamma[m, n, k] c[k] + H[m, n, k] J c[k]``: Christoffel symbols
  and second fundamental form, found from the Gram matrix of ``{c, Jc}``,
* ``P c[k] = A[l, k] c[l] + B[l, k] J c[l]``: the A/JB split of P.

Tangent vectors are column vectors on ``d_1, d_2, d_3``.  A frame is a 3x3
matrix ``F`` whose column ``i`` holds the coordinates of ``E_i``; quantities
with frame indices are obtained from the coordinate ones by ``F``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import catalog as cat
from . import nk_core as nk
from .config import TOL
from .errors import DegenerateGram, DegeneratePlane, GaugeFailure, UnresolvedType

DELTA = {
    "Delta1": np.diag([-1.0, 1.0, 1.0]),
    "Delta2": np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
    "Delta3": np.diag([1.0, -1.0, 1.0]),
}
R23 = np.sqrt(2.0 / 3.0)
# JG(E_i, E_j) = sign * sqrt(2/3) * E_l for the pairs (1,2), (1,3), (2,3)
JG_TABLE = {
    "Delta1": {(0, 1): (2, 1), (0, 2): (1, -1), (1, 2): (0, -1)},
    "Delta2": {(0, 1): (2, 1), (0, 2): (0, -1), (1, 2): (1, 1)},
    "Delta3": {(0, 1): (2, 1), (0, 2): (1, 1), (1, 2): (0, 1)},
}
TYPE_DELTA = {"I": "Delta1", "II": "Delta2", "III": "Delta2", "IV": "Delta3"}

# inner derivative (of the complex-step pushforward) and outer derivative steps
INNER_STEP = 1e-3
OUTER_STEP = 1e-3


def fd5(func, x: np.ndarray, m: int, step: float):
    e = np.zeros_like(x)
    e[m] = step
    return (-func(x + 2 * e) + 8 * func(x + e) - 8 * func(x - e) + func(x - 2 * e)) / (12 * step)


def gram_of(vecs: np.ndarray) -> np.ndarray:
    """Gram matrix in g of the rows of ``vecs``."""
    return vecs @ nk.S.gram_g @ vecs.T


def _j_rows(vecs: np.ndarray) -> np.ndarray:
    return vecs @ nk.S.j_mat.T


def split_tangent_normal(vecs: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Write each row of ``targets`` as ``sum t_k vecs[k] + sum n_k J vecs[k]``.

    Returns ``(t, n)`` with shape ``targets.shape[:-1] + (3,)``.
    """
    basis = np.vstack([vecs, _j_rows(vecs)])
    big = basis @ nk.S.gram_g @ basis.T
    if abs(np.linalg.det(big)) < TOL.degenerate_gram:
        raise DegenerateGram("Gram matrix of {E, JE} is singular")
    flat = targets.reshape(-1, 6)
    coef = np.linalg.solve(big, basis @ nk.S.gram_g @ flat.T).T
    coef = coef.reshape(targets.shape[:-1] + (6,))
    return coef[..., :3], coef[..., 3:]


# --- frames and A/B ---------------------------------------------------------


@dataclass
class FrameTriple:
    """Three tangent vectors (rows of Lie coordinates) at a common base point."""

    vecs: np.ndarray
    base: nk.Point | None = None
    signature_tag: str | None = None

    def __post_init__(self):
        self.vecs = np.asarray(self.vecs, dtype=float).reshape(3, 6)
        if abs(np.linalg.det(self.gram)) < TOL.degenerate_gram:
            raise DegenerateGram("frame spans a degenerate 3-plane")

    @property
    def gram(self) -> np.ndarray:
        return gram_of(self.vecs)


@dataclass(frozen=True)
class ABPair:
    A: np.ndarray
    B: np.ndarray
    residual: float = 0.0

    def invariant_residuals(self, gram: np.ndarray) -> dict:
        A, B = self.A, self.B
        return {
            "A_symmetric": float(np.max(np.abs(gram @ A - (gram @ A).T))),
            "B_symmetric": float(np.max(np.abs(gram @ B - (gram @ B).T))),
            "commute": float(np.max(np.abs(A @ B - B @ A))),
            "A2_plus_B2": float(np.max(np.abs(A @ A + B @ B - np.eye(3)))),
        }


def check_lagrangian(frame: FrameTriple) -> float:
    v = frame.vecs
    return float(np.max(np.abs(_j_rows(v) @ nk.S.gram_g @ v.T)))


def extract_AB(frame: FrameTriple) -> ABPair:
    """Matrices (columns = images of the frame vectors) with ``P = A + JB`` on the frame."""
    v = frame.vecs
    pv = v @ nk.S.p_mat.T
    t, n = split_tangent_normal(v, pv)
    recon = t @ v + n @ _j_rows(v)
    return ABPair(t.T, n.T, float(np.max(np.abs(recon - pv))))


# --- classification ---------------------------------------------------------


@dataclass(frozen=True)
class TypeClass:
    lag_type: str
    angles: tuple
    psi: float | None = None
    b_sign: int | None = None
    eigen_gap: float = 0.0


def _pseudo_orthonormal_basis(gram: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(gram)
    return v / np.sqrt(np.abs(w))


def _clusters(z: np.ndarray, band: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i in np.argsort(np.angle(z)):
        for g in groups:
            if abs(z[i] - np.mean(z[g])) < band:
                g.append(int(i))
                break
        else:
            groups.append([int(i)])
    return groups


def _numeric_rank(mat: np.ndarray) -> int:
    sv = np.linalg.svd(mat, compute_uv=False)
    gray = [s for s in sv if TOL.nilpotent_zero <= s <= TOL.nilpotent_nonzero]
    if gray:
        raise UnresolvedType(f"singular value {gray[0]:.3e} falls in the Jordan-detection gray zone")
    return int(np.sum(sv > TOL.nilpotent_nonzero))


def _angle(z: complex) -> float:
    th = 0.5 * np.angle(z)
    th = float(np.mod(th, np.pi))
    return 0.0 if th < 1e-12 or abs(th - np.pi) < 1e-12 else th


def classify_type(ab: ABPair, gram: np.ndarray) -> TypeClass:
    """Type I-IV of the pair (A, B) on a tangent space with induced Gram ``gram``.

    Works with ``C = A + iB`` in a pseudo-orthonormal basis. Eigenvalues on
    the unit circle are ``exp(2i theta)``; off the circle means type IV.
    Eigenvalues within ``TOL.cluster`` are grouped and the rank of
    ``C - z Id`` decides between diagonalizable and Jordan structure.
    """
    s = _pseudo_orthonormal_basis(gram)
    sinv = np.linalg.inv(s)
    c = sinv @ (ab.A + 1j * ab.B) @ s
    z = np.linalg.eigvals(c)
    groups = _clusters(z, TOL.cluster)
    means = [complex(np.mean(z[g])) for g in groups]
    off_circle = max(abs(abs(m) - 1.0) for m in means)
    if off_circle > TOL.nilpotent_nonzero:
        # complex pair off the unit circle: cosh(psi) e^{2i theta1} +- i sinh(psi) ...
        pair = [m for m in means if abs(abs(m) - 1.0) > TOL.nilpotent_nonzero]
        single = [m for m in means if abs(abs(m) - 1.0) <= TOL.nilpotent_nonzero]
        th2 = _angle(single[0]) if single else float("nan")
        psi = float(abs(np.log(abs(pair[0]))))
        th1 = _angle(pair[0] / abs(pair[0]) if len(pair) == 1 else np.sqrt(pair[0] * pair[1]))
        return TypeClass("IV", (th1, th2), psi=psi, eigen_gap=off_circle)
    if off_circle > TOL.nilpotent_zero:
        raise UnresolvedType(f"eigenvalue modulus off the unit circle by {off_circle:.3e}")

    gaps = [abs(z[i] - z[j]) for i in range(3) for j in range(i + 1, 3)]
    gap = float(min(gaps))
    jordan = []
    for g, m in zip(groups, means):
        if len(g) == 1:
            continue
        rank = _numeric_rank(c - m * np.eye(3))
        geo = 3 - rank
        if geo < len(g):
            jordan.append((g, m, len(g) - geo + 1))
    if not jordan:
        _, angs, order, _ = _type1_legs(ab, gram)
        return TypeClass("I", tuple(angs[i] for i in order), eigen_gap=gap)
    g, m, block = jordan[0]
    if block == 3:
        # single eigenvalue with a 3-chain: B(1,1) in the normal form is +-sqrt(3)/2
        return TypeClass("III", (_angle(m),), b_sign=1 if m.imag > 0 else -1, eigen_gap=gap)
    others = [mm for gg, mm in zip(groups, means) for _ in gg if mm is not m]
    th1 = _angle(m)
    if len(g) == 3:
        th2 = th1
    else:
        th2 = _angle(others[0])
    return TypeClass("II", (th1, th2), eigen_gap=gap)


# --- normal frames ------------------------------------------------------------


def _g(gram, x, y) -> float:
    return float(x @ gram @ y)


def _eigenspace(ab: ABPair, z: complex, dim: int) -> np.ndarray:
    stack = np.vstack([ab.A - z.real * np.eye(3), ab.B - z.imag * np.eye(3)])
    _, _, vt = np.linalg.svd(stack)
    return vt[-dim:].T


def _orthonormalize(basis: np.ndarray, gram: np.ndarray) -> np.ndarray:
    sub = basis.T @ gram @ basis
    w, v = np.linalg.eigh(sub)
    return basis @ v / np.sqrt(np.abs(w))


def jg_coefficients(frame_rows: np.ndarray) -> np.ndarray:
    """``out[i, j]`` are the frame coefficients of ``J G(E_i, E_j)`` (normal part discarded)."""
    out = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            jg = nk.apply_J(nk.tensor_G(frame_rows[i], frame_rows[j]))
            t, _ = split_tangent_normal(frame_rows, jg[None, :])
            out[i, j] = t[0]
    return out


def _table_sign(c_rows: np.ndarray, F: np.ndarray, tag: str) -> float:
    """Coefficient of ``E_3`` in ``JG(E_1, E_2)`` divided by sqrt(2/3)."""
    rows = F.T @ c_rows
    jg = nk.apply_J(nk.tensor_G(rows[0], rows[1]))
    t, _ = split_tangent_normal(rows, jg[None, :])
    l, _ = JG_TABLE[tag][(0, 1)]
    return float(t[0][l] / R23)


def _align(vec: np.ndarray, ref: np.ndarray | None) -> np.ndarray:
    if ref is not None:
        return vec if vec @ ref >= 0 else -vec
    k = int(np.argmax(np.abs(vec)))
    return vec if vec[k] >= 0 else -vec


@dataclass
class PointData:
    """Coordinate-frame quantities of an immersion at one parameter point."""

    params: np.ndarray
    c: np.ndarray
    gram: np.ndarray
    Gamma: np.ndarray
    H: np.ndarray
    ab: ABPair
    split_residual: float = 0.0

    def h_frame(self, F: np.ndarray) -> np.ndarray:
        return np.einsum("mi,nj,mnk,lk->ijl", F, F, self.H, np.linalg.inv(F))

    def hh(self, x, y, z) -> float:
        """Totally symmetric ``g(h(X,Y), JZ)`` for coordinate column vectors."""
        hk = np.einsum("m,n,mnk->k", x, y, self.H)
        # g(J c_k, J c_l) = g(c_k, c_l)
        return float(hk @ self.gram @ z)


def _type1_legs(ab: ABPair, gram: np.ndarray):
    """Eigen-legs of a diagonalizable pair, ordered timelike first then by angle.

    Returns ``(cols, angles, order, unique)``; ``unique`` is False when some
    eigenspace has dimension > 1, so the legs inside it are not canonical.
    """
    s = _pseudo_orthonormal_basis(gram)
    c = np.linalg.inv(s) @ (ab.A + 1j * ab.B) @ s
    z = np.linalg.eigvals(c)
    cols, angs = [], []
    groups = _clusters(z, TOL.cluster)
    for g in groups:
        m = complex(np.mean(z[g]))
        vecs = _orthonormalize(_eigenspace(ab, m, len(g)), gram)
        for k in range(vecs.shape[1]):
            cols.append(vecs[:, k])
            angs.append(_angle(m))
    norms = [_g(gram, v, v) for v in cols]
    time = [i for i, n in enumerate(norms) if n < 0]
    if len(time) != 1:
        raise UnresolvedType("type I frame does not have exactly one timelike leg")
    rest = sorted((i for i in range(3) if i != time[0]), key=lambda i: (angs[i], i))
    order = [time[0]] + rest
    return cols, angs, order, all(len(g) == 1 for g in groups)


def _top_direction(form: np.ndarray) -> np.ndarray:
    """Unit vector maximizing the (rank one) symmetric form, sign fixed by its largest entry."""
    w, vecs = np.linalg.eigh(0.5 * (form + form.T))
    v = vecs[:, int(np.argmax(np.abs(w)))]
    return v if v[np.argmax(np.abs(v))] > 0 else -v


def normal_frame(pd: PointData, tc: TypeClass, reference: np.ndarray | None = None) -> np.ndarray:
    """Frame matrix ``F`` (columns = coordinates of E_i) in the normal form of ``tc``.

    Sign freedoms left by the normal form are fixed by ``reference`` (a
    previous frame matrix) when given, else by making the largest entry
    positive; ``E_3`` (types I, II) and the chain scale (type III) are
    oriented by the ``JG`` table.
    """
    gram, ab = pd.gram, pd.ab
    ref = (lambda i: None) if reference is None else (lambda i: reference[:, i])
    if tc.lag_type == "I":
        cols, angs, order, _ = _type1_legs(ab, gram)
        F = np.stack([_align(cols[i], ref(n)) for n, i in enumerate(order)], axis=1)
        if _table_sign(pd.c, F, "Delta1") < 0:
            F[:, 2] *= -1
        return F
    if tc.lag_type == "II":
        th1, th2 = tc.angles
        if abs(th1 - th2) > 1e-6:
            raise UnresolvedType(f"type II with distinct angles ({th1:.6f}, {th2:.6f}) is not handled")
        cval = float(np.cos(2 * th1))
        N = ab.A - cval * np.eye(3)
        v = _top_direction(gram @ N)
        s1 = _g(gram, v, N @ v)
        if s1 <= 0:
            raise UnresolvedType("nilpotent part has the opposite sign to the type II normal form")
        e2 = v / np.sqrt(s1)
        e1 = N @ e2
        _, _, vt = np.linalg.svd(N)
        kernel = vt[-2:].T
        # pick the kernel direction least aligned with e1
        cand = kernel[:, int(np.argmin([abs(_g(gram, kernel[:, i], e2)) for i in range(2)]))]
        w = cand - (cand @ gram @ e1) * 0  # e1 is orthogonal to ker N already
        e3 = w - _g(gram, w, e2) * e1
        n3 = _g(gram, e3, e3)
        if n3 <= 0:
            raise UnresolvedType("type II kernel complement is not spacelike")
        e3 = e3 / np.sqrt(n3)
        e2 = e2 - _g(gram, e2, e3) * e3
        e2 = e2 - 0.5 * _g(gram, e2, e2) * e1
        F = np.stack([e1, e2, e3], axis=1)
        if _table_sign(pd.c, F, "Delta2") < 0:
            F[:, 2] *= -1
        F = _type2_gauge(pd, F)
        eps_ref = ref(1)
        e2_al = _align(F[:, 1], eps_ref)
        if not np.array_equal(e2_al, F[:, 1]):
            F[:, 0] *= -1
            F[:, 1] *= -1
        return F
    if tc.lag_type == "III":
        th = tc.angles[0]
        N = ab.A - np.cos(2 * th) * np.eye(3)
        N2 = N @ N
        v = _top_direction(gram @ N2)
        s0, s1, s2 = (_g(gram, v, np.linalg.matrix_power(N, k) @ v) for k in range(3))
        if s2 <= 0:
            raise UnresolvedType("type III chain has the wrong causal character")
        a = 1.0 / np.sqrt(s2)
        b = -a * s1 / (2 * s2)
        c = -(a * a * s0 + 2 * a * b * s1 + b * b * s2) / (2 * a * s2)
        e2 = a * v + b * (N @ v) + c * (N2 @ v)
        F = np.stack([N2 @ e2, e2, N @ e2], axis=1)
        if _table_sign(pd.c, F, "Delta2") < 0:
            F = -F
        return F
    raise UnresolvedType("type IV frames are not constructed (no catalog row is of type IV)")


def _gauge_frame(F: np.ndarray, t: float) -> np.ndarray:
    e1, e2, e3 = F.T
    return np.stack([e1, e2 + t * e3 - 0.5 * t * t * e1, e3 - t * e1], axis=1)


def _type2_gauge(pd: PointData, F: np.ndarray) -> np.ndarray:
    """Move along ``E2 -> E2 + t E3 - t^2/2 E1, E3 -> E3 - t E1`` until ``h22^1 = 0``."""

    def h221(t):
        e2 = _gauge_frame(F, t)[:, 1]
        return pd.hh(e2, e2, e2)

    def h223(t):
        G = _gauge_frame(F, t)
        return pd.hh(G[:, 1], G[:, 1], G[:, 2])

    d = h223(0.0)
    if abs(d) < 1e-8:
        raise GaugeFailure("h22^3 vanishes; the h22^1 = 0 gauge is undefined")
    t = -h221(0.0) / (3 * d)
    for _ in range(50):
        step = h221(t) / (3 * h223(t))
        t -= step
        if abs(step) < 1e-15:
            break
    if abs(h221(t)) > 1e-9:
        raise GaugeFailure(f"gauge iteration did not converge (h22^1 = {h221(t):.3e})")
    return _gauge_frame(F, t)


# --- the pointwise pipeline ---------------------------------------------------


def _c_fun(iid, center=None):
    return lambda x: cat.pushforward_cs(iid, x, center=center)


def point_data(iid: cat.ImmersionId, params, step: float = INNER_STEP, recenter: bool = True) -> PointData:
    """Pointwise data on the coordinate fields at ``params``.

    ``recenter`` evaluates the immersion moved by the isometry that sends the
    point to the identity (see :func:`catalog.pushforward_cs`); coordinate
    components do not change, only the conditioning does.  The Lie
    coordinates in ``c`` then refer to the moved immersion.
    """
    x = np.asarray(params, dtype=float)
    cfun = _c_fun(iid, x if recenter else None)
    c = cfun(x)
    dc = np.stack([fd5(cfun, x, m, step) for m in range(3)])  # dc[m, n] = d_m c_n
    D = dc + np.einsum("ma,nb,abk->mnk", c, c, nk.S.koszul)
    Gamma, H = split_tangent_normal(c, D)
    frame = FrameTriple(c)
    ab = extract_AB(frame)
    return PointData(x, c, frame.gram, Gamma, H, ab, ab.residual)


@dataclass
class SffTable:
    h: np.ndarray
    omega: np.ndarray
    mean_curvature: np.ndarray
    frame: np.ndarray
    type_class: TypeClass
    tag: str
    extras: dict = field(default_factory=dict)


def analyze(
    iid: cat.ImmersionId,
    params,
    reference: np.ndarray | None = None,
    step: float = INNER_STEP,
    outer_step: float = OUTER_STEP,
) -> SffTable:
    """Classify, build the normal frame, and compute ``h`` and ``omega`` in it."""
    pd = point_data(iid, params, step)
    tc = classify_type(pd.ab, pd.gram)
    F = normal_frame(pd, tc, reference)
    tag = TYPE_DELTA[tc.lag_type]

    def frame_at(y):
        pdy = point_data(iid, y, step)
        return normal_frame(pdy, classify_type(pdy.ab, pdy.gram), F)

    x = pd.params
    canonical = tc.lag_type != "I" or _type1_legs(pd.ab, pd.gram)[3]
    if canonical:
        dF = np.stack([fd5(frame_at, x, m, outer_step) for m in range(3)])  # dF[m] = d_m F
        Finv = np.linalg.inv(F)
        omega = np.einsum("mi,mnj,ln->ijl", F, dF, Finv) + np.einsum("mi,nj,mnk,lk->ijl", F, F, pd.Gamma, Finv)
    else:
        # repeated angles leave a rotation freedom inside an eigenspace, so omega is gauge dependent
        omega = np.full((3, 3, 3), np.nan)
    h = pd.h_frame(F)
    return SffTable(h, omega, mean_curvature(pd), F, tc, tag, {"point": pd, "omega_defined": canonical})


def mean_curvature(pd: PointData) -> np.ndarray:
    """Lie coordinates of the trace of h."""
    ginv = np.linalg.inv(pd.gram)
    hk = np.einsum("mn,mnk->k", ginv, pd.H)
    return hk @ _j_rows(pd.c)


# --- Gauss and Codazzi --------------------------------------------------------


def shape_operator(pd: PointData, xi: np.ndarray) -> np.ndarray:
    """``S_xi`` as a 3x3 matrix from ``g(S_xi X, Y) = g(h(X,Y), xi)``."""
    jc = _j_rows(pd.c)
    hx = np.einsum("nrk,k->nr", pd.H, jc @ nk.S.gram_g @ xi)  # g(h(d_n, d_r), xi)
    return np.linalg.solve(pd.gram, hx.T)


def gauss_rhs(pd: PointData, x, y, z, shape_sign: float = 1.0) -> np.ndarray:
    """Right side of the Gauss equation as coordinate column vector.

    ``shape_sign=+1`` uses ``S`` from its definition; ``-1`` replaces it by
    ``S_{JX}Y = J h(X,Y)``, which differs by a sign.
    """
    g = pd.gram
    A, B = pd.ab.A, pd.ab.B
    gg = lambda a, b: float(a @ g @ b)  # noqa: E731
    out = -5.0 / 6.0 * (gg(y, z) * x - gg(x, z) * y)
    out = out - 2.0 / 3.0 * (
        gg(A @ y, z) * (A @ x) - gg(A @ x, z) * (A @ y) + gg(B @ y, z) * (B @ x) - gg(B @ x, z) * (B @ y)
    )
    jc = _j_rows(pd.c)
    hxz = np.einsum("m,n,mnk->k", x, z, pd.H) @ jc
    hyz = np.einsum("m,n,mnk->k", y, z, pd.H) @ jc
    out = out + shape_sign * (-shape_operator(pd, hxz) @ y + shape_operator(pd, hyz) @ x)
    return out


def intrinsic_curvature(iid: cat.ImmersionId, params, step: float = INNER_STEP, outer_step: float = OUTER_STEP):
    """``R[l, k, m, n]`` with ``R(d_m, d_n) d_k = R[l, k, m, n] d_l`` from the Christoffel symbols."""
    x = np.asarray(params, dtype=float)
    pd = point_data(iid, x, step)
    gam = lambda y: point_data(iid, y, step).Gamma  # noqa: E731
    dG = np.stack([fd5(gam, x, m, outer_step) for m in range(3)])  # dG[m, n, k, l] = d_m Gamma[n,k,l]
    G = pd.Gamma
    R = (
        np.einsum("mnkl->lkmn", dG)
        - np.einsum("nmkl->lkmn", dG)
        + np.einsum("mpl,nkp->lkmn", G, G)
        - np.einsum("npl,mkp->lkmn", G, G)
    )
    return R, pd


def codazzi_lhs_rhs(iid: cat.ImmersionId, params, step: float = INNER_STEP, outer_step: float = OUTER_STEP):
    """Both sides of the Codazzi equation for all coordinate triples, as 6-vectors."""
    x = np.asarray(params, dtype=float)
    pd = point_data(iid, x, step)
    Hfun = lambda y: point_data(iid, y, step).H  # noqa: E731
    dH = np.stack([fd5(Hfun, x, m, outer_step) for m in range(3)])  # dH[m, n, k, l] = d_m H[n,k,l]
    c, jc, G, H = pd.c, _j_rows(pd.c), pd.Gamma, pd.H
    A, B, g = pd.ab.A, pd.ab.B, pd.gram

    def nabla_h(m, n, k):
        # normal part of the derivative of h(d_n, d_k) = H[n,k,l] J c_l along d_m
        out = dH[m, n, k] @ jc
        for l in range(3):
            out = out + H[n, k, l] * (nk.tensor_G(c[m], c[l]) + G[m, l] @ jc)
        out = out - np.einsum("p,pl->l", G[m, n], H[:, k, :]) @ jc
        out = out - np.einsum("p,pl->l", G[m, k], H[n, :, :]) @ jc
        return out

    lhs, rhs = [], []
    e = np.eye(3)
    for m in range(3):
        for n in range(3):
            for k in range(3):
                lhs.append(nabla_h(m, n, k) - nabla_h(n, m, k))
                X, Y, Z = e[m], e[n], e[k]
                gg = lambda a, b: float(a @ g @ b)  # noqa: E731
                val = -2.0 / 3.0 * (
                    gg(A @ Y, Z) * ((B @ X) @ jc)
                    - gg(A @ X, Z) * ((B @ Y) @ jc)
                    - gg(B @ Y, Z) * ((A @ X) @ jc)
                    + gg(B @ X, Z) * ((A @ Y) @ jc)
                )
                rhs.append(val)
    return np.array(lhs), np.array(rhs), pd


def codazzi_gauss_residual(iid: cat.ImmersionId, params, shape_sign: float = 1.0) -> dict:
    R, pd = intrinsic_curvature(iid, params)
    e = np.eye(3)
    gauss = 0.0
    for m in range(3):
        for n in range(3):
            for k in range(3):
                lhs = R[:, k, m, n]
                rhs = gauss_rhs(pd, e[m], e[n], e[k], shape_sign)
                gauss = max(gauss, float(np.max(np.abs(lhs - rhs))))
    lhs, rhs, _ = codazzi_lhs_rhs(iid, params)
    return {"gauss": gauss, "codazzi": float(np.max(np.abs(lhs - rhs)))}


# --- curvature ----------------------------------------------------------------


def plane_curvature(pd: PointData, u: np.ndarray, v: np.ndarray) -> float:
    """Sectional curvature from the algebraic Gauss right side."""
    g = pd.gram
    denom = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    if abs(denom) < TOL.degenerate_plane:
        raise DegeneratePlane(f"plane is degenerate (denominator {denom:.3e})")
    return float(gauss_rhs(pd, u, v, v) @ g @ u / denom)


def sectional_curvature(iid: cat.ImmersionId, params, plane=(0, 1), frame: np.ndarray | None = None) -> float:
    """Curvature of the plane spanned by two frame legs (coordinate legs when ``frame`` is None)."""
    pd = point_data(iid, params)
    F = np.eye(3) if frame is None else frame
    return plane_curvature(pd, F[:, plane[0]], F[:, plane[1]])


def intrinsic_plane_curvature(R: np.ndarray, pd: PointData, u, v) -> float:
    g = pd.gram
    denom = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    if abs(denom) < TOL.degenerate_plane:
        raise DegeneratePlane(f"plane is degenerate (denominator {denom:.3e})")
    ruvv = np.einsum("lkmn,m,n,k->l", R, u, v, v)
    return float(ruvv @ g @ u / denom)


# --- type-specific relations --------------------------------------------------


def levi_civita_symbol(i, j, k) -> int:
    return int(np.sign((j - i) * (k - i) * (k - j)))


def verify_type_constraints(table: SffTable) -> dict:
    """Residuals of the relations that the detected type forces on ``h`` and ``omega``."""
    h, w = table.h, table.omega
    t = table.type_class.lag_type
    out = {}
    if t == "I":
        # all h_ij^k vanish except those with i, j, k distinct; E_i(theta_j) = 0 is
        # equivalent to h_jj^i = 0 for constant angles
        mask = np.ones((3, 3, 3), bool)
        for i, j, k in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]:
            mask[i, j, k] = False
        out["h_offpattern"] = float(np.max(np.abs(h[mask])))
        delta = np.diag(DELTA["Delta1"])
        out["h_total_symmetry"] = max(
            abs(h[i, j, k] - delta[j] * delta[k] * h[i, k, j]) for i in range(3) for j in range(3) for k in range(3)
        )
    elif t == "II":
        out["h11"] = float(np.max(np.abs(h[0, 0])))
        out["h33^1+2h22^2"] = float(abs(h[2, 2, 0] + 2 * h[1, 1, 1]))
    elif t == "III":
        out["h11"] = float(np.max(np.abs(h[0, 0])))
        # omega_12^3 = (sqrt2 + (-1)^(k+1) 3 h_22^2) / (2 sqrt3) for one branch bit k
        res = [abs(w[0, 1, 2] - (np.sqrt(2) + (-1) ** (k + 1) * 3 * h[1, 1, 1]) / (2 * np.sqrt(3))) for k in (0, 1)]
        out["omega12^3_relation"] = float(min(res))
        out["branch_k"] = int(np.argmin(res))
    return out


def jg_table_residual(table: SffTable) -> float:
    """Max deviation of ``JG(E_i, E_j)`` from the signed table of the frame's Delta pattern."""
    pd = table.extras["point"]
    rows = table.frame.T @ pd.c
    jg = jg_coefficients(rows)
    worst = 0.0
    for (i, j), (l, sign) in JG_TABLE[table.tag].items():
        want = np.zeros(3)
        want[l] = sign * R23
        worst = max(worst, float(np.max(np.abs(jg[i, j] - want))))
    return worst


def second_fundamental_form(iid: cat.ImmersionId, params, frame: np.ndarray | None = None) -> SffTable:
    """``h`` and ``omega`` in the normal frame, or in ``frame`` (columns on d_1, d_2, d_3) when given.

    With an explicit frame ``omega`` is only the pointwise part and is left as NaN.
    """
    if frame is None:
        return analyze(iid, params)
    pd = point_data(iid, params)
    tc = classify_type(pd.ab, pd.gram)
    F = np.asarray(frame, dtype=float)
    return SffTable(pd.h_frame(F), np.full((3, 3, 3), np.nan), mean_curvature(pd), F, tc, TYPE_DELTA[tc.lag_type],
                    {"point": pd, "omega_defined": False})


def random_plane_curvatures(pd: PointData, rng: np.random.Generator, planes: int = 20) -> np.ndarray:
    """Sectional curvatures of random non-degenerate tangent planes."""
    out = []
    while len(out) < planes:
        u, v = rng.normal(size=3), rng.normal(size=3)
        g = pd.gram
        denom = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
        if abs(denom) < 1e-3 * (u @ u) * (v @ v):
            continue  # too close to a degenerate plane
        out.append(plane_curvature(pd, u, v))
    return np.array(out)


def twisted_ab(ab: ABPair, kappa: int, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """A and B of the image of a Lagrangian under an isometry with twist ``(kappa, tau)``.

    From ``P dF = dF (cos tau P + sin tau JP)`` and ``dF J = (-1)^kappa J dF``.
    """
    ct, st = np.cos(tau), np.sin(tau)
    sign = (-1) ** kappa
    return ct * ab.A - st * ab.B, sign * (st * ab.A + ct * ab.B)


def ab_under_isometry(iid: cat.ImmersionId, params, F) -> dict:
    """Compare A, B of ``F o f`` (computed from scratch) with the twist prediction."""
    from . import isometry as iso

    pd = point_data(iid, params, recenter=False)
    base = cat.evaluate(iid, params)
    image = np.stack([iso.differential_analytic(F, base, c) for c in pd.c])
    ab_img = extract_AB(FrameTriple(image))
    A_pred, B_pred = twisted_ab(pd.ab, F.kappa, F.tau)
    tc0 = classify_type(pd.ab, pd.gram)
    tc1 = classify_type(ab_img, gram_of(image))
    return {
        "A_residual": float(np.max(np.abs(ab_img.A - A_pred))),
        "B_residual": float(np.max(np.abs(ab_img.B - B_pred))),
        "type_before": tc0.lag_type,
        "type_after": tc1.lag_type,
    }


def lemma_normal_form(tc: TypeClass) -> tuple[np.ndarray, np.ndarray]:
    """The printed normal form of (A, B) for a classified type."""
    if tc.lag_type == "I":
        th = np.array(tc.angles)
        return np.diag(np.cos(2 * th)), np.diag(np.sin(2 * th))
    if tc.lag_type == "II":
        t1, t2 = tc.angles
        c1, s1 = np.cos(2 * t1), np.sin(2 * t1)
        A = np.array([[c1, 1.0, 0.0], [0.0, c1, 0.0], [0.0, 0.0, np.cos(2 * t2)]])
        B = np.array([[s1, -c1 / s1, 0.0], [0.0, s1, 0.0], [0.0, 0.0, np.sin(2 * t2)]])
        return A, B
    if tc.lag_type == "III":
        r3 = np.sqrt(3.0)
        A = np.array([[-0.5, 0.0, 1.0], [0.0, -0.5, 0.0], [0.0, 1.0, -0.5]])
        B = np.array([[r3 / 2, -4 / (3 * r3), 1 / r3], [0.0, r3 / 2, 0.0], [0.0, 1 / r3, r3 / 2]])
        return A, tc.b_sign * B
    raise UnresolvedType("no catalog normal form for type IV")


def normal_form_residual(table: SffTable) -> float:
    """Max deviation of (A, B) in the normal frame from the printed normal form, plus the Gram check."""
    pd = table.extras["point"]
    F = table.frame
    Finv = np.linalg.inv(F)
    A_want, B_want = lemma_normal_form(table.type_class)
    gram_res = np.max(np.abs(F.T @ pd.gram @ F - DELTA[table.tag]))
    a_res = np.max(np.abs(Finv @ pd.ab.A @ F - A_want))
    b_res = np.max(np.abs(Finv @ pd.ab.B @ F - B_want))
    return float(max(gram_res, a_res, b_res))
