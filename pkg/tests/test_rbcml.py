import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_features
from plxrank import (
    DimensionError,
    FeatureTensor,
    LWayOrder,
    ParameterError,
    Profile,
    TopLOrder,
    WeightingFunction,
    break_profile,
    composite_ll,
    fit_beta,
    fit_rbcml,
    pairwise_prob,
    sample_lway_profile,
    sample_profile,
)
from plxrank.rbcml import CompositeDesign, expected_kappa_full


def lway_profile(rng, f, n, p=0.5, beta=None):
    beta = rng.normal(size=f.d) if beta is None else beta
    return sample_lway_profile(f, beta, p, rng, agents=rng.integers(0, f.n, size=n))


# ---------------------------------------------------------------- breaking


def test_two_ranking_kappa_fixture():
    # a2 > a1 > a3 and a1 > a2 > a3, 0-based
    prof = Profile.from_orders([LWayOrder(0, (1, 0, 2)), LWayOrder(0, (0, 1, 2))], 3)
    K = break_profile(prof, WeightingFunction("uniform")).kappa
    assert np.array_equal(K, [[0, 1, 2], [1, 0, 2], [0, 0, 0]])


def test_empty_profile_gives_zero_graph():
    prof = Profile([], np.zeros((0, 4)), [], 4, "l-way")
    assert np.array_equal(break_profile(prof).kappa, np.zeros((4, 4)))


def test_constant_weight_doubles(rng):
    f = random_features(rng, 5, 5, 2)
    prof = lway_profile(rng, f, 30)
    a = break_profile(prof, WeightingFunction("uniform")).kappa
    b = break_profile(prof, WeightingFunction("custom", {l: 2.0 for l in range(2, 6)})).kappa
    assert np.array_equal(b, 2 * a)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["uniform", "harmonic"]))
def test_breaking_is_linear(seed, kind):
    rng = np.random.default_rng(seed)
    f = random_features(rng, 4, 5, 2)
    a, b = lway_profile(rng, f, 7), lway_profile(rng, f, 5)
    w = WeightingFunction(kind)
    assert np.allclose(break_profile(a.concat(b), w).kappa, break_profile(a, w).kappa + break_profile(b, w).kappa)


@given(st.integers(0, 2**32 - 1))
def test_graph_invariants(seed):
    rng = np.random.default_rng(seed)
    f = random_features(rng, 4, 6, 2)
    prof = lway_profile(rng, f, 9)
    w = WeightingFunction("harmonic")
    K = break_profile(prof, w).kappa
    assert np.all(np.diag(K) == 0) and np.all(K >= 0)
    assert K.sum() == pytest.approx(sum(w(l) * l * (l - 1) / 2 for l in prof.lengths), rel=1e-12)


def test_complete_top_l_is_broken_like_full_ranking(rng):
    f = random_features(rng, 3, 4, 2)
    top = sample_profile(f, rng.normal(size=2), [0, 0, 1], rng)
    assert np.array_equal(break_profile(top).kappa, break_profile(top.as_lway()).kappa)
    partial = Profile.from_orders([TopLOrder(0, (1,))], 4)
    with pytest.raises(DimensionError):
        break_profile(partial)


def test_empirical_kappa_converges():
    rng = np.random.default_rng(17)
    f = FeatureTensor(np.array([[[0.3], [-0.4], [1.1]]]))
    beta = np.array([0.9])
    n = 100_000
    prof = sample_profile(f, beta, [0, 1], rng, agents=np.zeros(n, dtype=int))
    K = break_profile(prof).kappa / n
    assert np.max(np.abs(K - expected_kappa_full(f.values[0] @ beta))) <= 0.01


# ---------------------------------------------------------------- weighting


def test_weighting_functions(tmp_path):
    assert WeightingFunction("uniform")(5) == 1.0
    assert WeightingFunction("harmonic")(5) == 0.25
    table = tmp_path / "w.txt"
    table.write_text("2 1.5\n3 0.5\n")
    w = WeightingFunction.parse(f"custom:{table}")
    assert w(2) == 1.5 and w(3) == 0.5
    with pytest.raises(ParameterError):
        w(4)
    with pytest.raises(ParameterError):
        WeightingFunction.parse("cubic")
    with pytest.raises(ParameterError):
        WeightingFunction("custom", {2: 0.0})
    with pytest.raises(ParameterError):
        WeightingFunction("uniform")(1)


# ---------------------------------------------------------------- composite likelihood


def test_cll_at_zero(rng):
    f = random_features(rng, 5, 6, 3)
    prof = lway_profile(rng, f, 20)
    w = WeightingFunction("harmonic")
    count = sum(w(l) * l * (l - 1) / 2 for l in prof.lengths)
    for fam in ("logistic", "probit"):
        assert composite_ll(prof, f, np.zeros(3), fam, w) == pytest.approx(np.log(0.5) * count, rel=1e-13)


def test_cll_single_pair(rng):
    f = random_features(rng, 2, 4, 2)
    prof = Profile.from_orders([LWayOrder(1, (3, 0))], 4)
    beta = rng.normal(size=2)
    for fam in ("logistic", "probit"):
        want = np.log(pairwise_prob(f, 1, 3, 0, beta, fam))
        assert composite_ll(prof, f, beta, fam) == pytest.approx(want, rel=1e-13)


def test_cll_aggregates_when_agents_share_features(rng):
    row = rng.uniform(-1, 1, size=(5, 3))
    f = FeatureTensor(np.broadcast_to(row, (6, 5, 3)).copy())
    prof = lway_profile(rng, f, 40)
    beta = rng.normal(size=3)
    w = WeightingFunction("harmonic")
    K = break_profile(prof, w).kappa
    agg = sum(K[a, b] * np.log(pairwise_prob(f, 0, a, b, beta)) for a in range(5) for b in range(5) if K[a, b] > 0)
    assert composite_ll(prof, f, beta, "logistic", w) == pytest.approx(agg, rel=1e-12)


def test_cll_gradient_and_concavity(rng):
    f = random_features(rng, 6, 5, 3)
    prof = lway_profile(rng, f, 25)
    design = CompositeDesign(prof, f, WeightingFunction("harmonic"), "logistic")
    beta = rng.normal(size=3)
    h = 1e-5
    fd_g = np.array([(design.value_and_grad(beta + h * e)[0] - design.value_and_grad(beta - h * e)[0]) / (2 * h) for e in np.eye(3)])
    assert np.allclose(design.value_and_grad(beta)[1], fd_g, rtol=1e-6, atol=1e-8)
    fd_h = np.column_stack([(design.value_and_grad(beta + h * e)[1] - design.value_and_grad(beta - h * e)[1]) / (2 * h) for e in np.eye(3)])
    assert np.allclose(design.hessian(beta), fd_h, rtol=1e-5, atol=1e-7)
    assert np.linalg.eigvalsh(-0.5 * (fd_h + fd_h.T))[0] >= -1e-8


def test_probit_gradient(rng):
    f = random_features(rng, 6, 5, 3)
    prof = lway_profile(rng, f, 25)
    design = CompositeDesign(prof, f, WeightingFunction("uniform"), "probit")
    beta = rng.normal(size=3)
    h = 1e-5
    fd_g = np.array([(design.value_and_grad(beta + h * e)[0] - design.value_and_grad(beta - h * e)[0]) / (2 * h) for e in np.eye(3)])
    assert np.allclose(design.value_and_grad(beta)[1], fd_g, rtol=1e-6, atol=1e-8)


# ---------------------------------------------------------------- fitting


def test_two_alternatives_match_mle(rng):
    f = random_features(rng, 300, 2, 2)
    prof = sample_profile(f, np.array([1.0, -0.5]), [1.0], rng)
    a = fit_rbcml(prof, f, "logistic", WeightingFunction("uniform")).beta_hat
    b = fit_beta(prof, f).beta_hat
    assert np.allclose(a, b, atol=1e-6)


def test_weight_scaling_keeps_argmax(rng):
    f = random_features(rng, 200, 6, 3)
    prof = lway_profile(rng, f, 200)
    w = WeightingFunction("harmonic")
    a = fit_rbcml(prof, f, "logistic", w).beta_hat
    b = fit_rbcml(prof, f, "logistic", w.scaled(2.0)).beta_hat
    assert np.allclose(a, b, atol=1e-6)
    beta = rng.normal(size=3)
    assert composite_ll(prof, f, beta, "logistic", w.scaled(2.0)) == pytest.approx(2 * composite_ll(prof, f, beta, "logistic", w))


def test_probit_on_logistic_data_points_the_right_way():
    rng = np.random.default_rng(5)
    f = random_features(rng, 2000, 10, 6, 0.0, 1.0)
    beta0 = rng.uniform(0, 1, size=6)
    prof = sample_lway_profile(f, beta0, 0.5, rng)
    rep = fit_rbcml(prof, f, "probit", WeightingFunction("harmonic"))
    b = rep.beta_hat
    assert np.all(np.isfinite(b)) and rep.converged
    assert b @ beta0 / (np.linalg.norm(b) * np.linalg.norm(beta0)) > 0


def test_fit_report_fields(rng):
    f = random_features(rng, 300, 6, 3)
    prof = lway_profile(rng, f, 300)
    rep = fit_rbcml(prof, f)
    assert rep.converged and rep.full_row_rank and rep.assumption1_ok
    assert rep.lambda1_at_estimate > 0 and np.isnan(rep.log_likelihood)


def test_fit_rejects_unknown_family(rng):
    f = random_features(rng, 5, 4, 2)
    with pytest.raises(ParameterError):
        fit_rbcml(lway_profile(rng, f, 5), f, "cauchy")
