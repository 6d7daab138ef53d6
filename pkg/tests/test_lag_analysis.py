import numpy as np
import pytest

from nklab import catalog as cat
from nklab import lag_analysis as la
from nklab.errors import DegenerateGram, DegeneratePlane, UnresolvedType

R3 = np.sqrt(3.0)
THIRD = np.pi / 3
X0 = np.array([0.3, -0.4, 0.2])


@pytest.fixture(scope="module")
def tables():
    return {name: la.analyze(cat.parse_id(name), X0) for name in ("psl", "torus", "iota", "f_lambda", "jmath")}


def test_torus_A_B_at_origin():
    frame = la.FrameTriple(cat.pushforward_cs(cat.parse_id("torus"), np.zeros(3)))
    ab = la.extract_AB(frame)
    assert ab.residual < 1e-12
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(ab.A).real), [-0.5, -0.5, 1.0], atol=1e-12)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(ab.B).real), [-R3 / 2, 0.0, R3 / 2], atol=1e-12)
    for v in ab.invariant_residuals(frame.gram).values():
        assert v < 1e-12


@pytest.mark.parametrize("name,want", [("torus", "I"), ("diag", "I"), ("iota", "II"), ("jmath", "III")])
def test_classification(name, want):
    pd = la.point_data(cat.parse_id(name), X0)
    assert la.classify_type(pd.ab, pd.gram).lag_type == want


def test_torus_angles():
    pd = la.point_data(cat.parse_id("torus"), X0)
    tc = la.classify_type(pd.ab, pd.gram)
    np.testing.assert_allclose(tc.angles, [0, THIRD, 2 * THIRD], atol=1e-9)


def test_rotated_frame_is_not_lagrangian():
    c = cat.pushforward_cs(cat.parse_id("torus"), X0)
    assert la.check_lagrangian(la.FrameTriple(c)) < 1e-12
    t = 0.4
    bad = c.copy()
    bad[0] = np.cos(t) * c[0] + np.sin(t) * (c[1] @ la.nk.S.j_mat.T)
    assert la.check_lagrangian(la.FrameTriple(bad)) > 0.1


def test_degenerate_gram():
    c = cat.pushforward_cs(cat.parse_id("torus"), X0)
    with pytest.raises(DegenerateGram):
        la.FrameTriple(np.stack([c[0], c[1], c[0] + c[1]]))


def test_split_tangent_normal_roundtrip():
    c = cat.pushforward_cs(cat.parse_id("psl"), X0)
    rng = np.random.default_rng(0)
    t, n = rng.normal(size=(2, 3)), rng.normal(size=(2, 3))
    vecs = t @ c + n @ (c @ la.nk.S.j_mat.T)
    t2, n2 = la.split_tangent_normal(c, vecs)
    np.testing.assert_allclose(t2, t, atol=1e-10)
    np.testing.assert_allclose(n2, n, atol=1e-10)


def test_synthetic_type_iv_and_gray_zone():
    gram = np.diag([-1.0, 1.0, 1.0])
    z = np.array([1.2 * np.exp(0.5j), np.exp(-0.5j) / 1.2, np.exp(1j)])
    tc = la.classify_type(la.ABPair(np.diag(z.real), np.diag(z.imag)), gram)
    assert tc.lag_type == "IV" and tc.psi == pytest.approx(np.log(1.2))
    z = np.array([(1 + 1e-4) * np.exp(0.5j), np.exp(0.2j), np.exp(1j)])
    with pytest.raises(UnresolvedType):
        la.classify_type(la.ABPair(np.diag(z.real), np.diag(z.imag)), gram)


def test_normal_frame_grams_and_jg(tables):
    for name, t in tables.items():
        pd = t.extras["point"]
        F = t.frame
        np.testing.assert_allclose(F.T @ pd.gram @ F, la.DELTA[t.tag], atol=1e-9)
        assert la.jg_table_residual(t) < 1e-9, name
    jg = la.jg_coefficients(tables["psl"].frame.T @ tables["psl"].extras["point"].c)
    np.testing.assert_allclose(jg[0, 1], [0, 0, np.sqrt(2 / 3)], atol=1e-9)


def test_normal_forms(tables):
    for t in tables.values():
        assert la.normal_form_residual(t) < 1e-6


def test_lemma_normal_form_type_ii():
    A, B = la.lemma_normal_form(la.TypeClass("II", (THIRD, THIRD)))
    assert B[0, 1] == pytest.approx(-1 / np.tan(2 * THIRD))
    C = A + 1j * B
    # single Jordan block of size two on the first two legs
    z = np.exp(2j * THIRD)
    assert np.linalg.matrix_rank(C - z * np.eye(3), tol=1e-9) == 1


def test_psl_constants(tables):
    t = tables["psl"]
    assert t.h[0, 1, 2] == pytest.approx(1 / (2 * np.sqrt(2)), abs=1e-6)
    assert np.max(np.abs(t.mean_curvature)) < 1e-6
    ks = la.random_plane_curvatures(t.extras["point"], np.random.default_rng(1), 10)
    np.testing.assert_allclose(ks, -3 / 8, atol=1e-6)
    assert la.sectional_curvature(cat.parse_id("psl"), X0, frame=t.frame) == pytest.approx(-3 / 8, abs=1e-6)


def test_torus_flat(tables):
    assert tables["torus"].h[0, 1, 2] == pytest.approx(-1 / np.sqrt(2), abs=1e-6)
    ks = la.random_plane_curvatures(tables["torus"].extras["point"], np.random.default_rng(2), 10)
    assert np.max(np.abs(ks)) < 1e-6


def test_degenerate_plane():
    pd = la.point_data(cat.parse_id("iota"), X0)
    t = la.analyze(cat.parse_id("iota"), X0)
    e1 = t.frame[:, 0]  # null leg of a Delta2 frame
    with pytest.raises(DegeneratePlane):
        la.plane_curvature(pd, e1, 2 * e1)


def test_type_ii_constants(tables):
    t = tables["iota"]
    assert t.h[1, 1, 2] == pytest.approx(-np.sqrt(2) / 3, abs=1e-5)
    assert t.omega[0, 1, 2] == pytest.approx(-np.sqrt(1.5), abs=1e-5)
    t = tables["f_lambda"]
    assert t.h[1, 1, 2] == pytest.approx(2 * np.sqrt(2) / 3, abs=1e-5)
    assert t.omega[0, 1, 2] == pytest.approx(np.sqrt(1.5), abs=1e-5)
    # the lambda dependence sits in omega_22^3; omega_33^2 vanishes identically
    assert t.omega[1, 1, 2] == pytest.approx(np.sqrt(2 / 3) * (1 - 2.0), abs=1e-5)
    assert abs(t.omega[2, 2, 1]) < 1e-8


def test_type_constraints(tables):
    for name, t in tables.items():
        res = la.verify_type_constraints(t)
        assert res
        for key, v in res.items():
            if key != "branch_k":
                assert v < 1e-5, (name, key)
    assert la.verify_type_constraints(tables["jmath"])["branch_k"] == 1


def test_type_iii_constants(tables):
    h = tables["jmath"].h
    assert h[1, 1, 1] == pytest.approx(2 * np.sqrt(2) / 3, abs=1e-5)
    assert h[1, 1, 0] == pytest.approx(-13 / (18 * np.sqrt(2)), abs=1e-5)
    assert h[1, 1, 2] == pytest.approx(5 * np.sqrt(2) / 9, abs=1e-5)
    assert np.max(np.abs(h[0, 0])) < 1e-5


def test_gauss_codazzi_and_shape_sign():
    iid = cat.parse_id("psl")
    good = la.codazzi_gauss_residual(iid, X0)
    assert good["gauss"] < 1e-5 and good["codazzi"] < 1e-5
    # flipping the shape operator sign breaks the Gauss equation
    bad = la.codazzi_gauss_residual(iid, X0, shape_sign=-1.0)
    assert bad["gauss"] > 0.1


def test_second_fundamental_form_explicit_frame(tables):
    t = tables["torus"]
    again = la.second_fundamental_form(cat.parse_id("torus"), X0, frame=t.frame)
    np.testing.assert_allclose(again.h, t.h, atol=1e-12)
    assert np.all(np.isnan(again.omega))


def test_levi_civita_symbol():
    assert la.levi_civita_symbol(0, 1, 2) == 1
    assert la.levi_civita_symbol(1, 0, 2) == -1
    assert la.levi_civita_symbol(0, 0, 2) == 0


@pytest.mark.parametrize("key", [(0, 1), (1, 0), (1, 2)])
def test_ab_under_isometry(key):
    from nklab import isometry as iso

    F = iso.compose(iso.Isometry.psi(*key), iso.random_isometry(np.random.default_rng(4), perm=(0, 0)))
    r = la.ab_under_isometry(cat.parse_id("psl"), X0, F)
    assert r["A_residual"] < 1e-8 and r["B_residual"] < 1e-8
    assert r["type_before"] == r["type_after"] == "I"
