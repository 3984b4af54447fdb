"""Tests for Gaussian optimal transport maps and distances."""

import json

import numpy as np
import pytest

from coopkal.errors import ContractError, SingularSourceError
from coopkal.graphs import Graph, eigendecompose, laplacian, random_sensor_graph
from coopkal.transport import (
    TransportMap,
    apply_map,
    moments_of,
    ot_map_general,
    ot_map_spectral,
    wasserstein2,
)
from coopkal.signals import GaussianMoments


def _gm(mean, cov):
    return GaussianMoments(mean=np.asarray(mean, float), cov=np.asarray(cov, float))


def _line_es(n):
    w = np.zeros((n, n))
    for i in range(n - 1):
        w[i, i + 1] = w[i + 1, i] = 1.0
    return eigendecompose(laplacian(Graph(weights=w)))


def test_w2_identical_is_zero():
    g = _gm([1.0, -2.0], [[2.0, 0.3], [0.3, 1.0]])
    assert wasserstein2(g, g) == pytest.approx(0.0, abs=1e-12)


def test_w2_commuting_diagonal_oracle():
    # diagonal covariances commute, so W2^2 = sum (sqrt(a_i) - sqrt(b_i))^2
    g1 = _gm([0.0, 0.0], np.diag([1.0, 4.0]))
    g2 = _gm([0.0, 0.0], np.diag([4.0, 1.0]))
    assert wasserstein2(g1, g2) == pytest.approx(2.0, rel=1e-12)


def test_w2_pure_mean_shift():
    cov = np.diag([0.5, 2.0])
    g1 = _gm([0.0, 0.0], cov)
    g2 = _gm([0.6, 0.8], cov)
    assert wasserstein2(g1, g2) == pytest.approx(1.0, rel=1e-12)


def test_w2_symmetry():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((4, 4))
    b = rng.standard_normal((4, 4))
    g1 = _gm(rng.standard_normal(4), a @ a.T + 0.1 * np.eye(4))
    g2 = _gm(rng.standard_normal(4), b @ b.T + 0.1 * np.eye(4))
    assert wasserstein2(g1, g2) == pytest.approx(wasserstein2(g2, g1), rel=1e-10)


def test_general_map_identity_when_equal():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((5, 5))
    g = _gm(rng.standard_normal(5), a @ a.T + 0.5 * np.eye(5))
    tm = ot_map_general(g, g)
    np.testing.assert_allclose(tm.Q, np.eye(5), atol=1e-9)
    x = rng.standard_normal(5)
    np.testing.assert_allclose(tm(x), x, atol=1e-8)


def test_general_map_diagonal_oracle():
    # independent coordinates rescale by sqrt of the variance ratio
    g1 = _gm([0.0, 0.0], np.diag([1.0, 4.0]))
    g2 = _gm([0.0, 0.0], np.diag([4.0, 1.0]))
    tm = ot_map_general(g1, g2)
    np.testing.assert_allclose(tm.Q, np.diag([2.0, 0.5]), atol=1e-10)


def test_general_map_pushforward():
    # the map must carry (mean1, cov1) onto (mean2, cov2) exactly
    rng = np.random.default_rng(11)
    n = 6
    a = rng.standard_normal((n, n))
    b = rng.standard_normal((n, n))
    g1 = _gm(rng.standard_normal(n), a @ a.T + 0.2 * np.eye(n))
    g2 = _gm(rng.standard_normal(n), b @ b.T + 0.2 * np.eye(n))
    tm = ot_map_general(g1, g2)
    np.testing.assert_allclose(tm(g1.mean), g2.mean, atol=1e-10)
    np.testing.assert_allclose(tm.Q @ g1.cov @ tm.Q.T, g2.cov, atol=1e-8)


def test_general_map_rejects_zero_source():
    g1 = _gm([0.0, 0.0], np.zeros((2, 2)))
    g2 = _gm([0.0, 0.0], np.eye(2))
    with pytest.raises(SingularSourceError):
        ot_map_general(g1, g2)


def test_spectral_map_identity_when_psd_equal():
    es = _line_es(4)
    p = np.array([1.0, 2.0, 0.5, 3.0])
    mu = np.square(np.arange(4.0))
    for mode in ("sqrt", "linear"):
        tm = ot_map_spectral(es, p, p, mu, mu, mode=mode)
        np.testing.assert_allclose(tm.Q, np.eye(4), atol=1e-10)
        x = np.array([0.3, -1.0, 2.0, 0.0])
        np.testing.assert_allclose(tm(x), x, atol=1e-10)


def test_spectral_map_two_node_oracle():
    # psd ratios (4/1, 1/4) give map eigenvalues (2, 1/2)
    es = _line_es(2)
    p1 = np.array([1.0, 4.0])
    p2 = np.array([4.0, 1.0])
    z = np.zeros(2)
    tm = ot_map_spectral(es, p1, p2, z, z, mode="sqrt")
    got = np.sort(np.linalg.eigvalsh(tm.Q))
    np.testing.assert_allclose(got, [0.5, 2.0], atol=1e-12)


def test_spectral_sqrt_matches_general_map():
    # with covariances diagonalized by one eigenbasis the closed form
    # collapses to the spectral rescale, so both constructions must agree
    rng = np.random.default_rng(5)
    g = random_sensor_graph(12, 3, rng)
    es = eigendecompose(laplacian(g))
    for trial in range(50):
        p1 = rng.uniform(0.1, 3.0, size=12)
        p2 = rng.uniform(0.1, 3.0, size=12)
        mu1 = rng.standard_normal(12)
        mu2 = rng.standard_normal(12)
        spec = ot_map_spectral(es, p1, p2, mu1, mu2, mode="sqrt")
        gen = ot_map_general(moments_of(es, p1, mu1), moments_of(es, p2, mu2))
        np.testing.assert_allclose(spec.Q, gen.Q, atol=1e-8)
        x = rng.standard_normal(12)
        np.testing.assert_allclose(spec(x), gen(x), atol=1e-7)


def test_spectral_linear_mode_breaks_pushforward():
    # the plain-ratio variant is not a transport map: pushing the source
    # covariance through it overshoots the target wherever p1 != p2
    es = _line_es(3)
    p1 = np.array([1.0, 1.0, 4.0])
    p2 = np.array([1.0, 1.0, 16.0])
    z = np.zeros(3)
    tm = ot_map_spectral(es, p1, p2, z, z, mode="linear")
    pushed = tm.Q @ moments_of(es, p1, z).cov @ tm.Q.T
    target = moments_of(es, p2, z).cov
    assert np.abs(pushed - target).max() > 1.0
    sq = ot_map_spectral(es, p1, p2, z, z, mode="sqrt")
    pushed_sq = sq.Q @ moments_of(es, p1, z).cov @ sq.Q.T
    np.testing.assert_allclose(pushed_sq, target, atol=1e-10)


def test_spectral_rejects_all_zero_source():
    es = _line_es(3)
    with pytest.raises(SingularSourceError):
        ot_map_spectral(es, np.zeros(3), np.ones(3), np.zeros(3), np.zeros(3))


def test_spectral_rejects_unknown_mode():
    es = _line_es(3)
    with pytest.raises(ContractError):
        ot_map_spectral(es, np.ones(3), np.ones(3), np.zeros(3), np.zeros(3),
                        mode="cubic")


def test_spectral_floors_small_source_entries():
    es = _line_es(3)
    p1 = np.array([1.0, 1.0, 0.0])
    p2 = np.ones(3)
    tm = ot_map_spectral(es, p1, p2, np.zeros(3), np.zeros(3))
    assert np.isfinite(tm.Q).all()


def test_apply_map_matches_affine_form():
    rng = np.random.default_rng(9)
    q = rng.standard_normal((4, 4))
    q = 0.5 * (q + q.T)
    mu1 = rng.standard_normal(4)
    mu2 = rng.standard_normal(4)
    tm = TransportMap(mu_from=mu1, mu_to=mu2, Q=q)
    x = rng.standard_normal(4)
    np.testing.assert_allclose(apply_map(tm, x), mu2 + q @ (x - mu1), atol=1e-12)
    np.testing.assert_allclose(tm(x), mu2 + q @ (x - mu1), atol=1e-12)


def test_apply_map_rejects_wrong_length():
    tm = TransportMap(mu_from=np.zeros(2), mu_to=np.zeros(2), Q=np.eye(2))
    with pytest.raises(ContractError):
        apply_map(tm, np.zeros(3))


def test_transport_map_rejects_bad_shapes():
    with pytest.raises(ContractError):
        TransportMap(mu_from=np.zeros(2), mu_to=np.zeros(2), Q=np.ones((2, 3)))
    with pytest.raises(ContractError):
        TransportMap(mu_from=np.zeros(2), mu_to=np.zeros(3), Q=np.eye(2))


def test_transport_map_json_round_trip():
    tm = TransportMap(mu_from=np.array([0.5, -2.0]),
                      mu_to=np.array([1.0, 0.0]),
                      Q=np.array([[1.0, 0.25], [0.25, 3.0]]))
    back = json.loads(json.dumps(tm.to_json_dict()))
    np.testing.assert_allclose(np.asarray(back["Q"]), tm.Q)
    np.testing.assert_allclose(np.asarray(back["mu_from"]), tm.mu_from)
    np.testing.assert_allclose(np.asarray(back["mu_to"]), tm.mu_to)
