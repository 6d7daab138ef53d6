"""Verification suites, check records and the ``nklab`` command line.

Every suite returns a list of :class:`CheckRecord` in a fixed order.  Each
check draws from its own generator, seeded from ``(seed, suite, check)``, so
adding or removing a check never changes the samples another one sees.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from . import catalog as cat
from . import isometry as iso
from . import lag_analysis as lg
from . import nk_core as nk
from .config import TOL
from .errors import NotApplicable

CSV_HEADER = ["suite", "check", "samples", "max_residual", "tolerance", "expected", "observed", "pass"]
DEFAULT_LAMBDAS = (-1.0, 0.5, 2.0, 3.0)


@dataclass
class RunConfig:
    seed: int = 42
    samples: int = 1000
    tol_exact: float = 1e-10
    tol_fd: float = 1e-5
    fd_step: float = 1e-4
    lambda_grid: tuple = DEFAULT_LAMBDAS
    out_path: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.tol_exact <= 0 or self.tol_fd <= 0 or self.fd_step <= 0:
            raise ValueError("tolerances and fd_step must be positive")
        if self.format not in ("json", "csv"):
            raise ValueError(f"unknown format {self.format!r}")
        self.lambda_grid = tuple(float(l) for l in self.lambda_grid)


@dataclass
class CheckRecord:
    suite: str
    check: str
    samples: int
    max_residual: float
    tolerance: float
    expected: float | None = None
    observed: float | None = None
    passed: bool = field(init=False)

    def __post_init__(self):
        self.max_residual = float(self.max_residual)
        ok = math.isfinite(self.max_residual) and self.max_residual <= self.tolerance
        if self.expected is not None:
            ok = ok and self.observed is not None and abs(self.observed - self.expected) <= self.tolerance
        self.passed = bool(ok)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def compare(suite, check, samples, expected, observed, tolerance, spread: float = 0.0) -> CheckRecord:
    """Record for an expected constant; the residual also covers the spread of ``observed`` over samples."""
    expected, observed = float(expected), float(observed)
    return CheckRecord(suite, check, samples, max(abs(observed - expected), spread), tolerance, expected, observed)


def check_rng(cfg: RunConfig, suite: str, check: str) -> np.random.Generator:
    key = [cfg.seed, zlib.crc32(suite.encode()), zlib.crc32(check.encode())]
    return np.random.default_rng(np.random.SeedSequence(key))


def _max_over(fn, rng, n) -> float:
    return max(float(fn(rng)) for _ in range(n))


# --- structure ----------------------------------------------------------------


def _structure_checks():
    g, J, P, G, L = nk.metric_g, nk.apply_J, nk.apply_P, nk.tensor_G, nk.koszul_connection
    prod = nk.metric_product

    def vecs(rng, n):
        return [nk.random_algebra_vec(rng) for _ in range(n)]

    def j_squared(rng):
        (x,) = vecs(rng, 1)
        return np.max(np.abs(J(J(x)) + x))

    def g_compatible_J(rng):
        x, y = vecs(rng, 2)
        return abs(g(x, y) - 0.25 * (prod(x, y) + prod(J(x), J(y))))

    def g_J_invariant(rng):
        x, y = vecs(rng, 2)
        return abs(g(J(x), J(y)) - g(x, y))

    def p_squared(rng):
        (x,) = vecs(rng, 1)
        return np.max(np.abs(P(P(x)) - x))

    def p_isometry(rng):
        x, y = vecs(rng, 2)
        return abs(g(P(x), P(y)) - g(x, y))

    def p_anticommutes_J(rng):
        (x,) = vecs(rng, 1)
        return np.max(np.abs(P(J(x)) + J(P(x))))

    def p_symmetric(rng):
        x, y = vecs(rng, 2)
        return abs(g(P(x), y) - g(x, P(y)))

    def p_G(rng):
        x, y = vecs(rng, 2)
        return np.max(np.abs(P(G(x, y)) + G(P(x), P(y))))

    def g_skew(rng):
        x, y, z = vecs(rng, 3)
        return abs(g(G(x, y), z) + g(G(x, z), y))

    def g_j_linear(rng):
        x, y = vecs(rng, 2)
        return np.max(np.abs(G(x, J(y)) + J(G(x, y))))

    def gnormal(rng):
        x, y, z = vecs(rng, 3)
        return abs(g(G(x, y), J(z)) + g(G(x, z), J(y)))

    def nabla_P(rng):
        x, y = vecs(rng, 2)
        return nk.nabla_P_residual(x, y)

    def nabla_P_rotated(rng):
        x, y = vecs(rng, 2)
        return max(nk.nabla_P_residual(x, y, nk.rotated_product_structure(e)) for e in (iso.TAU_1, iso.TAU_2))

    def constant_type(rng):
        x, y, z, w = vecs(rng, 4)
        return abs(g(G(x, y), G(z, w)) - nk.type_constant_rhs(x, y, z, w))

    def torsion_free(rng):
        x, y = vecs(rng, 2)
        return np.max(np.abs(L(x, y) - L(y, x) - nk.bracket(x, y)))

    def metric_compatible(rng):
        x, y, z = vecs(rng, 3)
        return abs(g(L(x, y), z) + g(y, L(x, z)))

    def curvature_closed_form(rng):
        u, v, w = vecs(rng, 3)
        return np.max(np.abs(nk.curvature(u, v, w) - nk.curvature_closed_form(u, v, w)))

    def bianchi(rng):
        u, v, w = vecs(rng, 3)
        R = nk.curvature
        return np.max(np.abs(R(u, v, w) + R(v, w, u) + R(w, u, v)))

    def product_metric(rng):
        x, y = vecs(rng, 2)
        return abs(prod(x, y) - 2 * g(x, y) - g(x, P(y)))

    def product_Q(rng):
        (x,) = vecs(rng, 1)
        return np.max(np.abs(nk.apply_Q(x) + (2 * P(J(x)) - J(x)) / np.sqrt(3.0)))

    return [
        ("J_squared", j_squared),
        ("g_compatible_J", g_compatible_J),
        ("g_J_invariant", g_J_invariant),
        ("P_squared", p_squared),
        ("P_isometry", p_isometry),
        ("P_anticommutes_J", p_anticommutes_J),
        ("P_symmetric", p_symmetric),
        ("PG_identity", p_G),
        ("G_skew", g_skew),
        ("G_J_antilinear", g_j_linear),
        ("gnormal", gnormal),
        ("nabla_P", nabla_P),
        ("nabla_P_rotated", nabla_P_rotated),
        ("constant_type", constant_type),
        ("connection_torsion_free", torsion_free),
        ("connection_metric", metric_compatible),
        ("curvature_closed_form", curvature_closed_form),
        ("bianchi_first", bianchi),
        ("product_metric", product_metric),
        ("product_Q", product_Q),
    ]


def cmd_verify_structure(cfg: RunConfig) -> list[CheckRecord]:
    suite = "structure"
    n = cfg.samples
    records = []
    for name, fn in _structure_checks():
        records.append(CheckRecord(suite, name, n, _max_over(fn, check_rng(cfg, suite, name), n), cfg.tol_exact))

    pos, neg = nk.signature(nk.S.gram_g)
    records.append(compare(suite, "signature_negative_count", 1, 2, neg, 0.0))

    emb = nk.verify_euclidean_embedding(n, cfg.fd_step, check_rng(cfg, suite, "embedding"))
    records.append(CheckRecord(suite, "embedding_connection_r8", n, emb["connection_r8"], cfg.tol_fd))
    records.append(CheckRecord(suite, "embedding_relation_product_kahler", n, emb["relation_product_kahler"], cfg.tol_fd))

    # second-order stencil: halving the step divides the error by ~4
    m = min(n, 50)
    coarse = nk.verify_euclidean_embedding(m, cfg.fd_step, check_rng(cfg, suite, "embedding_ratio"))
    fine = nk.verify_euclidean_embedding(m, cfg.fd_step / 2, check_rng(cfg, suite, "embedding_ratio"))
    ratio = coarse["connection_r8"] / fine["connection_r8"]
    records.append(compare(suite, "embedding_step_ratio", m, 4.0, ratio, 0.5))
    return records


# --- isometries ---------------------------------------------------------------


def cmd_verify_isometries(cfg: RunConfig) -> list[CheckRecord]:
    suite = "isometries"
    n = min(cfg.samples, 500)
    records = []
    for key in iso.PERMS:
        name = iso.perm_name(key)
        F = iso.Isometry.psi(*key)
        r = iso.verify_isometry(F, n, check_rng(cfg, suite, name))
        records.append(CheckRecord(suite, f"{name}.metric", n, r["metric_residual"], TOL.isometry))
        records.append(compare(suite, f"{name}.j_sign", n, (-1) ** key[0], r["j_sign"], 0.0))
        records.append(CheckRecord(suite, f"{name}.j_residual", n, r["j_residual"], TOL.isometry))
        records.append(compare(suite, f"{name}.p_tau", n, F.tau, r["p_tau"], TOL.isometry, r["p_residual"]))

    for k in (0, 1):
        name = f"phi_k{k}"
        rng = check_rng(cfg, suite, name)
        metric = j_res = tau_err = 0.0
        signs = set()
        for _ in range(5):
            F = iso.random_isometry(rng, k=k, perm=(0, 0))
            r = iso.verify_isometry(F, max(1, n // 5), rng)
            metric = max(metric, r["metric_residual"])
            j_res = max(j_res, r["j_residual"], r["p_residual"])
            signs.add(r["j_sign"])
            tau_err = max(tau_err, min(r["p_tau"], 2 * np.pi - r["p_tau"]))
        records.append(CheckRecord(suite, f"{name}.metric", n, metric, TOL.isometry))
        records.append(compare(suite, f"{name}.j_sign", n, 1, min(signs), 0.0))
        records.append(CheckRecord(suite, f"{name}.twist_residual", n, j_res, TOL.isometry))
        records.append(compare(suite, f"{name}.p_tau", n, 0.0, tau_err, TOL.isometry))

    rng = check_rng(cfg, suite, "random_elements")
    metric = 0.0
    for _ in range(5):
        r = iso.verify_isometry(iso.random_isometry(rng), max(1, n // 5), rng)
        metric = max(metric, r["metric_residual"])
    records.append(CheckRecord(suite, "random_elements.metric", n, metric, TOL.isometry))

    records.append(_s3_closure(cfg, suite))
    records.append(_compose_random(cfg, suite, n))
    records.append(_differential_agreement(cfg, suite, n))
    return records


def _pointwise(F, G, rng, probes=8) -> float:
    """Max gap between ``compose(F, G)`` and the sequential action on random points."""
    H = iso.compose(F, G)
    worst = 0.0
    for _ in range(probes):
        p = nk.random_point(rng)
        a, b = iso.act(H, p), iso.act(F, iso.act(G, p))
        worst = max(worst, float(np.max(np.abs(a.a - b.a))), float(np.max(np.abs(a.b - b.b))))
    return worst


def _s3_closure(cfg, suite) -> CheckRecord:
    rng = check_rng(cfg, suite, "s3_closure")
    worst = 0.0
    for k1 in iso.PERMS:
        for k2 in iso.PERMS:
            H = iso.compose(iso.Isometry.psi(*k1), iso.Isometry.psi(*k2))
            if H.perm not in iso.PERMS or H.k != 0:
                worst = max(worst, 1.0)
            worst = max(worst, _pointwise(iso.Isometry.psi(*k1), iso.Isometry.psi(*k2), rng))
    square = iso.compose(iso.Isometry.psi(0, 1), iso.Isometry.psi(0, 1))
    if square.perm != (0, 2):
        worst = max(worst, 1.0)
    return CheckRecord(suite, "s3_closure", 36, worst, TOL.compose)


def _compose_random(cfg, suite, n) -> CheckRecord:
    rng = check_rng(cfg, suite, "compose_random")
    m = max(1, n // 25)
    worst = 0.0
    for _ in range(m):
        F, G = iso.random_isometry(rng), iso.random_isometry(rng)
        worst = max(worst, _pointwise(F, G, rng))
    return CheckRecord(suite, "compose_random", m, worst, TOL.compose)


def _differential_agreement(cfg, suite, n) -> CheckRecord:
    rng = check_rng(cfg, suite, "differential_fd_vs_analytic")
    m = max(1, n // 10)
    worst = 0.0
    for _ in range(m):
        F, p, x = iso.random_isometry(rng), nk.random_point(rng), nk.random_algebra_vec(rng)
        worst = max(worst, float(np.max(np.abs(iso.differential_fd(F, p, x) - iso.differential_analytic(F, p, x)))))
    return CheckRecord(suite, "differential_fd_vs_analytic", m, worst, TOL.isometry)


# --- catalog ------------------------------------------------------------------

H_INDEX = {"h12^3": (0, 1, 2), "h22^3": (1, 1, 2), "h22^2": (1, 1, 1), "h22^1": (1, 1, 0),
           "h11^1": (0, 0, 0), "h11^2": (0, 0, 1), "h11^3": (0, 0, 2)}
W_INDEX = {"w12^3": (0, 1, 2), "w21^3": (1, 0, 2), "w31^1": (2, 0, 0), "w33^2": (2, 2, 1), "w22^3": (1, 1, 2)}
GRID = np.linspace(-0.8, 0.8, 3)


def select_ids(cfg: RunConfig, names=None) -> list[cat.ImmersionId]:
    """Catalog entries selected by name or row number; f_lambda expands over the lambda grid."""
    if not names:
        return cat.all_ids(cfg.lambda_grid)
    out = []
    for name in names:
        first = cat.parse_id(name)
        if first.row is cat.Row.F_LAMBDA:
            out.extend(cat.parse_id(name, lam) for lam in cfg.lambda_grid)
        else:
            out.append(first)
    return out


def _spread(values) -> float:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0 or np.all(np.isnan(arr)):
        return 0.0
    return float(np.nanmax(np.nanmax(arr, axis=0) - np.nanmin(arr, axis=0)))


def catalog_records(iid: cat.ImmersionId, cfg: RunConfig) -> list[CheckRecord]:
    suite = f"catalog.{iid.name}"
    prof = cat.expected_profile(iid)
    records = []
    n_pts = min(cfg.samples, 50)
    n_gc = min(cfg.samples, 20)

    try:
        spec = cat.subalgebra(iid)
        records.append(CheckRecord(suite, "bianchi_brackets", 1, spec.bracket_residual(), 1e-12))
    except (NotApplicable, KeyError):
        pass

    rng = check_rng(cfg, suite, "points")
    lag = mean = ab_inv = 0.0
    types = []
    for _ in range(n_pts):
        pd = lg.point_data(iid, cat.random_params(rng))
        lag = max(lag, lg.check_lagrangian(lg.FrameTriple(pd.c)))
        mean = max(mean, float(np.max(np.abs(lg.mean_curvature(pd)))))
        ab_inv = max(ab_inv, pd.ab.residual, *pd.ab.invariant_residuals(pd.gram).values())
        types.append(lg.classify_type(pd.ab, pd.gram).lag_type)
    records.append(CheckRecord(suite, "lagrangian", n_pts, lag, TOL.lagrangian_analytic))
    records.append(CheckRecord(suite, "minimal", n_pts, mean, 1e-6))
    records.append(CheckRecord(suite, "ab_invariants", n_pts, ab_inv, 1e-8))
    records.append(CheckRecord(suite, f"type_is_{prof.lag_type}", n_pts, sum(t != prof.lag_type for t in types), 0))
    records.append(CheckRecord(suite, "never_type_IV", n_pts, sum(t == "IV" for t in types), 0))

    # constant tables across a parameter grid
    tables = [lg.analyze(iid, np.array([u, v, w])) for u in GRID for v in GRID for w in GRID]
    n_grid = len(tables)
    t0 = tables[0]
    angles = np.array([t.type_class.angles for t in tables])
    hs = np.array([t.h for t in tables])
    ws = np.array([t.omega for t in tables])
    records.append(CheckRecord(suite, "angles_constant", n_grid, _spread(angles), 1e-6))
    records.append(CheckRecord(suite, "h_constant", n_grid, _spread(hs.reshape(n_grid, -1)), 1e-6))
    if t0.extras["omega_defined"]:
        records.append(CheckRecord(suite, "omega_constant", n_grid, _spread(ws.reshape(n_grid, -1)), 1e-6))
    if prof.angles is not None:
        for i, want in enumerate(prof.angles):
            records.append(compare(suite, f"theta{i + 1}", n_grid, want, angles[0, i], 1e-6, _spread(angles[:, i])))
    records.append(CheckRecord(suite, "normal_form", n_grid, max(lg.normal_form_residual(t) for t in tables), 1e-6))
    records.append(CheckRecord(suite, "jg_table", n_grid, max(lg.jg_table_residual(t) for t in tables), 1e-6))
    if prof.tot_geodesic:
        records.append(CheckRecord(suite, "totally_geodesic", n_grid, float(np.max(np.abs(hs))), 1e-6))
    for key, want in prof.h_constants.items():
        i, j, k = H_INDEX[key]
        records.append(compare(suite, key, n_grid, want, hs[0, i, j, k], cfg.tol_fd, _spread(hs[:, i, j, k])))
    for key, want in prof.omega_constants.items():
        i, j, k = W_INDEX[key]
        records.append(compare(suite, key, n_grid, want, ws[0, i, j, k], cfg.tol_fd, _spread(ws[:, i, j, k])))
    if iid.row is cat.Row.F_LAMBDA:
        # the lambda relation as it appears in the frame-uniqueness argument
        i, j, k = W_INDEX["w22^3"]
        want = np.sqrt(2 / 3) * (1 - iid.lam)
        records.append(compare(suite, "w22^3", n_grid, want, ws[0, i, j, k], cfg.tol_fd, _spread(ws[:, i, j, k])))
    constraints = {}
    for t in tables:
        for key, val in lg.verify_type_constraints(t).items():
            if key != "branch_k":
                constraints[key] = max(constraints.get(key, 0.0), val)
    for key, val in constraints.items():
        records.append(CheckRecord(suite, f"constraint.{key}", n_grid, val, cfg.tol_fd))

    # sectional curvature over random planes
    rng = check_rng(cfg, suite, "planes")
    pd = lg.point_data(iid, cat.random_params(rng))
    ks = lg.random_plane_curvatures(pd, rng, 20)
    if prof.constant_curvature:
        records.append(compare(suite, "K", 20, prof.K, ks[0], cfg.tol_fd, float(np.ptp(ks))))

    rng = check_rng(cfg, suite, "gauss_codazzi")
    gauss = codazzi = 0.0
    for _ in range(n_gc):
        r = lg.codazzi_gauss_residual(iid, cat.random_params(rng))
        gauss, codazzi = max(gauss, r["gauss"]), max(codazzi, r["codazzi"])
    records.append(CheckRecord(suite, "gauss", n_gc, gauss, 1e-4))
    records.append(CheckRecord(suite, "codazzi", n_gc, codazzi, 1e-4))
    return records


def cmd_catalog(cfg: RunConfig, ids=None) -> list[CheckRecord]:
    records = []
    for iid in select_ids(cfg, ids):
        records.extend(catalog_records(iid, cfg))
    return records


# --- reports ------------------------------------------------------------------


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def summary(records) -> dict:
    passed = sum(r.passed for r in records)
    return {"total": len(records), "passed": passed, "failed": len(records) - passed}


def render(records, cfg: RunConfig) -> str:
    if not records:
        raise ValueError("no records to report")
    if cfg.format == "json":
        conf = asdict(cfg)
        conf["lambda_grid"] = list(cfg.lambda_grid)
        obj = {
            "config": conf,
            "records": [{k: _clean(v) for k, v in r.as_dict().items()} for r in records],
            "summary": summary(records),
        }
        return json.dumps(obj, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    num = lambda x: "" if x is None else format(x, ".17g")  # noqa: E731
    for r in records:
        w.writerow([r.suite, r.check, r.samples, num(r.max_residual), num(r.tolerance), num(r.expected),
                    num(r.observed), "true" if r.passed else "false"])
    return buf.getvalue()


def cmd_report(records, cfg: RunConfig) -> str:
    """Write the report to ``cfg.out_path`` (or standard output) and return the text."""
    text = render(records, cfg)
    if cfg.out_path:
        with open(cfg.out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


# --- command line -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base seed (default 42, or NKLAB_SEED)")
    common.add_argument("--samples", type=int, default=1000)
    common.add_argument("--tol-exact", type=float, default=1e-10)
    common.add_argument("--tol-fd", type=float, default=1e-5)
    common.add_argument("--fd-step", type=float, default=1e-4)
    common.add_argument("--lambda", dest="lambdas", type=float, action="append", help="repeatable; row 7 parameter")
    common.add_argument("--out", default=None, help="report path (default: standard output)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="nklab", description="Numerical checks for the nearly Kähler SL(2,R)xSL(2,R).")
    sub = parser.add_subparsers(dest="command", required=True)
    verify = sub.add_parser("verify", parents=[common], help="structure or isometry suites")
    verify.add_argument("suite", choices=("structure", "isometries"))
    catp = sub.add_parser("catalog", parents=[common], help="Lagrangian catalog checks")
    catp.add_argument("--id", dest="ids", action="append", help="row name or number; repeatable")
    return parser


def config_from_args(args) -> RunConfig:
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("NKLAB_SEED", 42))
    return RunConfig(
        seed=seed,
        samples=args.samples,
        tol_exact=args.tol_exact,
        tol_fd=args.tol_fd,
        fd_step=args.fd_step,
        lambda_grid=tuple(args.lambdas) if args.lambdas else DEFAULT_LAMBDAS,
        out_path=args.out,
        format=args.format,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    if args.command == "verify":
        records = cmd_verify_structure(cfg) if args.suite == "structure" else cmd_verify_isometries(cfg)
    else:
        records = cmd_catalog(cfg, args.ids)
    cmd_report(records, cfg)
    failed = [r for r in records if not r.passed]
    for r in failed:
        print(f"FAIL {r.suite}/{r.check}: residual {r.max_residual:.3e} > {r.tolerance:.1e}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
