import numpy as np
import pytest

from nklab import isometry as iso
from nklab import nk_core as nk
from nklab import split_mat as sm
from nklab.errors import CompositionError

I, J, K = sm.SQ_I, sm.SQ_J, sm.SQ_K


def same_point(p, q, tol=1e-9):
    return np.allclose(p.a, q.a, atol=tol) and np.allclose(p.b, q.b, atol=tol)


@pytest.fixture
def rng():
    return np.random.default_rng(123)


def test_identity_and_phi_action(rng):
    p = nk.random_point(rng)
    assert same_point(iso.act(iso.IDENTITY, p), p)
    a, b, c = (sm.random_sl2(rng) for _ in range(3))
    q = iso.act(iso.Isometry.phi(a, b, c), p)
    np.testing.assert_allclose(q.a, a @ p.a @ sm.inv(c), atol=1e-12)
    np.testing.assert_allclose(q.b, b @ p.b @ sm.inv(c), atol=1e-12)


def test_psi_formulas(rng):
    p = nk.random_point(rng)
    P, Q = p.a, p.b
    Pi, Qi = sm.inv(P), sm.inv(Q)
    expected = {
        (0, 0): (P, Q),
        (1, 0): (Q, P),
        (0, 1): (Qi, P @ Qi),
        (1, 1): (P @ Qi, Qi),
        (0, 2): (Q @ Pi, Pi),
        (1, 2): (Pi, Q @ Pi),
    }
    for key, (ea, eb) in expected.items():
        out = iso.act(iso.Isometry.psi(*key), p)
        np.testing.assert_allclose(out.a, ea, atol=1e-10)
        np.testing.assert_allclose(out.b, eb, atol=1e-10)


def test_k1_factor():
    F = iso.Isometry(k=1)
    out = iso.act(F, nk.Point.identity())
    # i (Id) i^-1 = Id on both factors
    np.testing.assert_allclose(out.a, np.eye(2), atol=1e-14)


def test_rejects_bad_elements():
    with pytest.raises(ValueError):
        iso.Isometry(a=2 * np.eye(2))
    with pytest.raises(ValueError):
        iso.Isometry(k=2)
    with pytest.raises(ValueError):
        iso.Isometry(perm=(2, 0))


def test_differential_examples(rng):
    x = nk.random_algebra_vec(rng)
    alpha, beta = nk.split_vec(x)
    c = sm.random_sl2(rng)
    out = iso.differential_fd(iso.Isometry.phi(np.eye(2), np.eye(2), c), nk.Point.identity(), x)
    want = nk.algebra_vec(c @ alpha @ sm.inv(c), c @ beta @ sm.inv(c))
    np.testing.assert_allclose(out, want, atol=1e-8)
    swap = iso.differential_fd(iso.Isometry.psi(1, 0), nk.Point.identity(), x)
    np.testing.assert_allclose(swap, nk.apply_P(x), atol=1e-9)
    np.testing.assert_allclose(iso.differential_fd(iso.IDENTITY, nk.random_point(rng), x), x, atol=1e-9)


def test_differential_fd_matches_analytic(rng):
    for _ in range(30):
        F, p, x = iso.random_isometry(rng), nk.random_point(rng), nk.random_algebra_vec(rng)
        np.testing.assert_allclose(iso.differential_fd(F, p, x), iso.differential_analytic(F, p, x), atol=1e-7)
    X = nk.TangentVec(nk.Point.identity(), x)
    assert iso.differential(iso.IDENTITY, X, "analytic").vec == pytest.approx(x)
    with pytest.raises(ValueError):
        iso.differential(iso.IDENTITY, X, "bogus")


@pytest.mark.parametrize("key", list(iso.PERMS))
def test_psi_twists(key):
    F = iso.Isometry.psi(*key)
    r = iso.verify_isometry(F, 100, np.random.default_rng(7))
    assert r["metric_residual"] < 1e-6
    assert r["j_sign"] == (-1) ** key[0]
    assert r["j_residual"] < 1e-6
    assert r["p_tau"] == pytest.approx(F.tau, abs=1e-6)
    assert r["p_residual"] < 1e-6


@pytest.mark.parametrize("k", [0, 1])
def test_phi_preserves_J_and_P(k, rng):
    F = iso.random_isometry(rng, k=k, perm=(0, 0))
    r = iso.verify_isometry(F, 50, rng)
    assert r["metric_residual"] < 1e-6
    assert r["j_sign"] == 1
    assert min(r["p_tau"], 2 * np.pi - r["p_tau"]) < 1e-6


def test_analytic_verification_path(rng):
    r = iso.verify_isometry(iso.Isometry.psi(1, 2), 50, rng, method="analytic")
    assert r["j_sign"] == -1 and r["p_tau"] == pytest.approx(4 * np.pi / 3)


def test_compose_examples(rng):
    F = iso.random_isometry(rng)
    H = iso.compose(F, iso.IDENTITY)
    assert H.perm == F.perm and H.k == F.k
    for m, n in zip(H.factors(), F.factors()):
        np.testing.assert_allclose(m, n, atol=1e-12)
    sq = iso.compose(iso.Isometry.psi(0, 1), iso.Isometry.psi(0, 1))
    assert sq.perm == (0, 2)
    for _ in range(100):
        p = nk.random_point(rng)
        assert same_point(iso.act(sq, p), iso.act(iso.Isometry.psi(0, 2), p))


def test_s3_table():
    keys = list(iso.PERMS)
    for k1 in keys:
        for k2 in keys:
            H = iso.compose(iso.Isometry.psi(*k1), iso.Isometry.psi(*k2))
            assert H.perm in iso.PERMS
            # kappa is additive mod 2
            assert H.kappa == (k1[0] + k2[0]) % 2
    # kappa = 0 elements form Z3 with additive tau
    for t1 in range(3):
        for t2 in range(3):
            H = iso.compose(iso.Isometry.psi(0, t1), iso.Isometry.psi(0, t2))
            assert H.perm == (0, (t1 + t2) % 3)


def test_compose_associative(rng):
    for _ in range(10):
        F, G, H = (iso.random_isometry(rng) for _ in range(3))
        left = iso.compose(iso.compose(F, G), H)
        right = iso.compose(F, iso.compose(G, H))
        for _ in range(5):
            p = nk.random_point(rng)
            assert same_point(iso.act(left, p), iso.act(right, p), 1e-9 * 1e3)


def test_compose_matches_sequential_action(rng):
    for _ in range(20):
        F, G = iso.random_isometry(rng), iso.random_isometry(rng)
        H = iso.compose(F, G)
        p = nk.random_point(rng)
        lhs, rhs = iso.act(H, p), iso.act(F, iso.act(G, p))
        scale = max(1.0, np.abs(rhs.a).max(), np.abs(rhs.b).max())
        assert same_point(lhs, rhs, 1e-9 * scale)


def test_composition_error_surface():
    assert issubclass(CompositionError, Exception)
