import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from cidnet.graph import MISSING, DyadSet, NetworkDomainError, apply_mask, density, dyad_universe, from_adjacency
from cidnet.models import (
    ERParams,
    LinkKind,
    LSMParams,
    SBMParams,
    SRParams,
    edge_probability,
    log_likelihood,
    params_from_dict,
    params_from_json,
    params_to_json,
    probability_matrix,
    sample_network,
)

finite = st.floats(-20, 20, allow_nan=False)


# -------------------------------------------------------------------- links


@pytest.mark.parametrize("link", list(LinkKind))
def test_link_symmetry(link):
    x = np.linspace(-8, 8, 101)
    assert link(0.0) == 0.5
    np.testing.assert_allclose(link(-x), 1 - link(x), atol=1e-15)
    assert np.all(np.diff(link(x)) > 0)


def test_probit_matches_erfc_form():
    x = np.linspace(-6, 6, 61)
    ref = np.array([0.5 * math.erfc(-v / math.sqrt(2)) for v in x])
    np.testing.assert_allclose(LinkKind.PROBIT(x), ref, atol=1e-12)


# --------------------------------------------------------- edge probability


def test_edge_probability_examples():
    sbm = SBMParams(2, np.array([0, 1]), np.array([[0.9, 0.1], [0.1, 0.9]]))
    assert edge_probability(sbm, 0, 1) == 0.1
    sr = SRParams(0.0, np.zeros(3), np.zeros(3), LinkKind.PROBIT)
    assert edge_probability(sr, 0, 2) == 0.5
    sr = SRParams(1.0, np.zeros(3), np.zeros(3), LinkKind.LOGISTIC)
    assert edge_probability(sr, 1, 2) == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-4)
    assert edge_probability(sr, 1, 2) == pytest.approx(0.73106, abs=1e-4)
    lsm = LSMParams(0.0, np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]]), LinkKind.PROBIT)
    assert edge_probability(lsm, 0, 1) == 0.5
    assert edge_probability(ERParams(0.3, 4), 2, 3) == 0.3


def test_edge_probability_self_pair_rejected():
    with pytest.raises(NetworkDomainError):
        edge_probability(ERParams(0.3, 4), 1, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.data())
def test_probabilities_in_unit_interval(n, data):
    link = data.draw(st.sampled_from(list(LinkKind)))
    vec = st.lists(finite, min_size=n, max_size=n)
    sr = SRParams(data.draw(finite), np.array(data.draw(vec)), np.array(data.draw(vec)), link)
    pos = np.array(data.draw(st.lists(finite, min_size=2 * n, max_size=2 * n))).reshape(n, 2)
    lsm = LSMParams(data.draw(finite), pos, link)
    for params in (sr, lsm):
        P = probability_matrix(params)
        off = P[~np.eye(n, dtype=bool)]
        assert np.all((off >= 0) & (off <= 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 10), st.integers(0, 2**32 - 1))
def test_lsm_rigid_motion_invariance(n, seed):
    rng = np.random.default_rng(seed)
    pos = rng.normal(size=(n, 3))
    base = LSMParams(0.7, pos, LinkKind.LOGISTIC)
    Q = special_ortho_group.rvs(3, random_state=seed)
    reflect = np.diag([1.0, -1.0, 1.0])
    moved = LSMParams(0.7, pos @ Q @ reflect + rng.normal(size=3), LinkKind.LOGISTIC)
    np.testing.assert_allclose(probability_matrix(moved), probability_matrix(base), atol=1e-12)


# ------------------------------------------------------------ log-likelihood


def test_loglik_three_dyads():
    A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    net = from_adjacency(A, directed=False)
    assert log_likelihood(ERParams(0.5, 3), net) == pytest.approx(3 * math.log(0.5), abs=1e-6)
    masked = apply_mask(net, DyadSet.from_pairs(net, [(0, 2)]))
    assert log_likelihood(ERParams(0.5, 3), masked) == pytest.approx(2 * math.log(0.5), abs=1e-12)


def test_loglik_conflict_is_minus_infinity():
    net = from_adjacency(np.zeros((3, 3)), directed=False)
    assert log_likelihood(ERParams(1.0, 3), net) == -math.inf


def test_loglik_fully_masked_is_zero():
    net = from_adjacency(np.ones((4, 4)), directed=True)
    masked = apply_mask(net, DyadSet.from_pairs(net, dyad_universe(net)))
    sr = SRParams(0.3, np.ones(4), -np.ones(4), LinkKind.PROBIT)
    assert log_likelihood(sr, masked) == 0.0
    assert log_likelihood(ERParams(0.2, 4), masked) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 9), st.booleans(), st.integers(0, 2**32 - 1))
def test_er_loglik_maximised_at_edge_fraction(n, directed, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 2, (n, n))
    net = from_adjacency(A, directed)
    values = net.dyad_values()
    frac = values.mean()
    grid = np.linspace(0.001, 0.999, 999)
    lls = [log_likelihood(ERParams(p, n), net) for p in grid]
    best = grid[int(np.argmax(lls))]
    assert abs(best - frac) <= 0.001 + 1e-9


def test_sbm_loglik_matches_brute_force():
    rng = np.random.default_rng(5)
    A = rng.integers(0, 2, (6, 6))
    A[0, 3] = MISSING
    net = from_adjacency(A, directed=True)
    params = SBMParams(2, np.array([0, 0, 1, 1, 0, 1]), np.array([[0.7, 0.2], [0.4, 0.6]]))
    ref = 0.0
    for i in range(6):
        for j in range(6):
            if i == j or net.adjacency[i, j] == MISSING:
                continue
            p = params.M[params.z[i], params.z[j]]
            ref += math.log(p) if net.adjacency[i, j] == 1 else math.log(1 - p)
    assert log_likelihood(params, net) == pytest.approx(ref, abs=1e-12)


# ----------------------------------------------------------------- sampling


def test_sample_er_extremes():
    rng = np.random.default_rng(0)
    assert sample_network(ERParams(0.0, 10), False, rng).edge_count() == 0
    full = sample_network(ERParams(1.0, 10), True, rng)
    assert full.edge_count() == 90
    assert np.all(np.diag(full.adjacency) == MISSING)


def test_sample_er_mean_edge_count():
    counts = [sample_network(ERParams(0.3, 100), False, np.random.default_rng(s)).edge_count() for s in range(1000)]
    sd = math.sqrt(4950 * 0.3 * 0.7)
    assert abs(np.mean(counts) - 1485) <= 3 * sd / math.sqrt(1000)
    assert abs(np.std(counts) - sd) <= 0.1 * sd


def test_sample_deterministic_given_seed():
    params = SRParams(-1.0, np.linspace(-1, 1, 12), np.zeros(12), LinkKind.LOGISTIC)
    a = sample_network(params, True, np.random.default_rng(9))
    b = sample_network(params, True, np.random.default_rng(9))
    assert a == b


def test_sample_density_matches_mean_probability():
    rng = np.random.default_rng(11)
    n = 200
    pos = rng.normal(size=(n, 2))
    params = LSMParams(0.5, pos, LinkKind.PROBIT)
    P = probability_matrix(params)
    iu = np.triu_indices(n, 1)
    mean_p = P[iu].mean()
    sd = math.sqrt((P[iu] * (1 - P[iu])).sum()) / iu[0].size
    net = sample_network(params, False, rng)
    assert abs(density(net) - mean_p) <= 3 * sd


def test_undirected_sbm_sample_is_symmetric():
    params = SBMParams(2, np.array([0, 1, 0, 1, 1]), np.array([[0.5, 0.5], [0.5, 0.5]]))
    net = sample_network(params, False, np.random.default_rng(1))
    assert np.array_equal(net.adjacency, net.adjacency.T)


# ------------------------------------------------------------ serialisation


@pytest.mark.parametrize(
    "params",
    [
        ERParams(0.25, 7),
        SBMParams(2, np.array([0, 1, 1]), np.array([[0.5, 0.1], [0.1, 0.7]])),
        SRParams(-0.5, np.array([0.1, -0.1]), np.array([0.2, -0.2]), LinkKind.LOGISTIC),
        LSMParams(1.5, np.array([[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]]), LinkKind.PROBIT),
    ],
)
def test_params_json_round_trip(params):
    again = params_from_json(params_to_json(params, directed=True))
    np.testing.assert_allclose(probability_matrix(again), probability_matrix(params))
    assert type(again) is type(params)


def test_params_schema_errors():
    with pytest.raises(ValueError):
        params_from_dict({"model": "er"})
    with pytest.raises(ValueError):
        params_from_dict({"model": "cid", "p": 0.1})
    with pytest.raises(ValueError):
        params_from_dict({"model": "er", "p": 2.0, "n": 3})
