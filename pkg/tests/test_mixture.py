import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_features, random_profile
from plxrank import (
    EmOptions,
    MixtureParams,
    align_components,
    direct_mle,
    e_step,
    em_fit,
    fit_beta,
    m_step_alpha,
    mixture_log_likelihood,
    prob_top_l,
    sample_profile,
)
from plxrank.synth import ExperimentConfig, gen_synthetic


def planted(seed, n, k=2, m=6, d=4, spread=2.0):
    cfg = ExperimentConfig(m=m, d=d, n=n, k=k, beta_bounds=(-spread, spread))
    return gen_synthetic(cfg, np.random.default_rng(seed))


# ---------------------------------------------------------------- E and M steps


def test_e_step_single_component(rng):
    f = random_features(rng, 4, 4, 2)
    prof = random_profile(rng, f, 10)
    w = e_step(prof, f, MixtureParams.single(rng.normal(size=2)))
    assert np.array_equal(w, np.ones((10, 1)))


def test_e_step_identical_components(rng):
    f = random_features(rng, 4, 4, 2)
    prof = random_profile(rng, f, 10)
    b = rng.normal(size=2)
    w = e_step(prof, f, MixtureParams(np.array([0.3, 0.7]), np.stack([b, b])))
    assert np.allclose(w, [[0.3, 0.7]] * 10, atol=1e-15)


def test_e_step_bayes_rule(rng):
    f = random_features(rng, 4, 5, 3)
    prof = random_profile(rng, f, 12)
    params = MixtureParams(np.array([0.2, 0.5, 0.3]), rng.normal(scale=2, size=(3, 3)))
    w = e_step(prof, f, params)
    for j, o in enumerate(prof):
        joint = np.array([a * prob_top_l(f, o, b) for a, b in zip(params.alpha, params.betas)])
        assert np.allclose(w[j], joint / joint.sum(), atol=1e-12)
    assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)


def test_e_step_extreme_likelihoods_stay_finite(rng):
    f = random_features(rng, 3, 8, 2)
    prof = random_profile(rng, f, 10)
    params = MixtureParams(np.array([0.5, 0.5]), np.array([[400.0, -400.0], [-400.0, 400.0]]))
    w = e_step(prof, f, params)
    assert np.all(np.isfinite(w)) and np.allclose(w.sum(axis=1), 1.0)


def test_m_step_alpha_cases():
    assert np.allclose(m_step_alpha(np.full((6, 3), 1 / 3)), [1 / 3] * 3)
    one_hot = np.eye(3)[[0, 0, 1, 2, 2, 2]]
    assert np.allclose(m_step_alpha(one_hot), [2 / 6, 1 / 6, 3 / 6])


@given(st.integers(1, 30), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_m_step_alpha_on_simplex(n, k, seed):
    raw = np.random.default_rng(seed).random((n, k)) + 1e-9
    a = m_step_alpha(raw / raw.sum(axis=1, keepdims=True))
    assert a.sum() == pytest.approx(1.0, abs=1e-12) and np.all(a >= 0)


# ---------------------------------------------------------------- EM


def test_em_single_component_is_mle(rng):
    f = random_features(rng, 200, 5, 3)
    prof = sample_profile(f, rng.normal(size=3), np.full(4, 0.25), rng)
    rep = em_fit(prof, f, EmOptions(k=1, iterations=5, seed=0))
    assert np.allclose(rep.params.betas[0], fit_beta(prof, f).beta_hat, atol=1e-6)


def test_em_log_likelihood_nondecreasing():
    f, truth, prof = planted(0, 400)
    rep = em_fit(prof, f, EmOptions(k=2, iterations=30, seed=1))
    diffs = np.diff(rep.trace)
    assert np.all(diffs >= -1e-8)
    assert np.allclose(rep.responsibilities.sum(axis=1), 1.0, atol=1e-10)
    assert rep.params.alpha.sum() == pytest.approx(1.0, abs=1e-12)


def test_em_alpha_is_mean_responsibility():
    f, truth, prof = planted(5, 200)
    rep = em_fit(prof, f, EmOptions(k=2, iterations=3, seed=2, stop_gain=None))
    # the reported responsibilities are those used in the final alpha update
    assert np.allclose(rep.params.alpha, rep.responsibilities.mean(axis=0), atol=1e-12)


def test_em_recovers_well_separated_clusters():
    rng = np.random.default_rng(7)
    m, d, n = 8, 3, 600
    f = random_features(rng, n, m, d)
    betas = np.array([[4.0, 0.0, -4.0], [-4.0, 0.0, 4.0]])
    z = rng.integers(0, 2, size=n)
    profs = [sample_profile(f, betas[r], np.eye(m - 1)[-1], rng, agents=np.flatnonzero(z == r)) for r in range(2)]
    order = np.argsort(np.concatenate([np.flatnonzero(z == r) for r in range(2)]), kind="stable")
    prof = profs[0].concat(profs[1]).select(order)
    rep = em_fit(prof, f, EmOptions(k=2, iterations=30, seed=3))
    labels = rep.responsibilities.argmax(axis=1)
    agree = max(np.mean(labels == z), np.mean(labels != z))
    assert agree >= 0.95


def test_em_label_switching_symmetry():
    f, truth, prof = planted(11, 150, k=3)
    init = MixtureParams(np.array([0.2, 0.3, 0.5]), np.random.default_rng(4).uniform(-1, 1, size=(3, 4)))
    a = em_fit(prof, f, EmOptions(k=3, iterations=1, init=init, stop_gain=None))
    perm = [2, 0, 1]
    b = em_fit(prof, f, EmOptions(k=3, iterations=1, init=init.permuted(perm), stop_gain=None))
    assert np.allclose(b.params.alpha, a.params.alpha[perm], atol=1e-12)
    assert np.allclose(b.params.betas, a.params.betas[perm], atol=1e-8)


def test_em_flags_collapsed_component():
    f, truth, prof = planted(2, 100)
    init = MixtureParams(np.array([1.0, 0.0]), np.zeros((2, 4)))
    rep = em_fit(prof, f, EmOptions(k=2, iterations=3, init=init))
    assert rep.collapsed == [1]
    assert np.array_equal(rep.params.betas[1], np.zeros(4))


def test_em_restarts_keep_best():
    f, truth, prof = planted(3, 150)
    # the first restart draws the same start as a single run with the same seed
    single = em_fit(prof, f, EmOptions(k=2, iterations=10, seed=0)).log_likelihood
    best = em_fit(prof, f, EmOptions(k=2, iterations=10, restarts=3, seed=0)).log_likelihood
    assert best >= single


def test_em_early_stop_is_reported():
    f, truth, prof = planted(4, 200)
    rep = em_fit(prof, f, EmOptions(k=2, iterations=200, seed=0))
    assert rep.stopped_early and rep.iterations < 200


# ---------------------------------------------------------------- direct ascent


def test_direct_single_component_is_mle(rng):
    f = random_features(rng, 200, 5, 3)
    prof = sample_profile(f, rng.normal(size=3), np.full(4, 0.25), rng)
    rep = direct_mle(prof, f, 1, rng=0)
    assert np.allclose(rep.params.betas[0], fit_beta(prof, f).beta_hat, atol=1e-6)
    assert rep.params.alpha[0] == 1.0


def test_direct_versus_em_likelihood():
    f, truth, prof = planted(8, 500)
    em = em_fit(prof, f, EmOptions(k=2, iterations=50, seed=0))
    dm = direct_mle(prof, f, 2, init=MixtureParams(np.full(2, 0.5), np.random.default_rng(0).uniform(-1, 1, (2, 4))))
    assert (not dm.converged) or dm.log_likelihood >= em.log_likelihood - 1e-4
    assert np.all(dm.params.alpha > 0) and dm.params.alpha.sum() == pytest.approx(1.0, abs=1e-12)


def test_direct_heldout_close_to_em():
    cfg = ExperimentConfig(m=10, d=10, n=700, k=2)
    f, truth, prof = gen_synthetic(cfg, np.random.default_rng(21))
    train, test = prof.select(np.arange(500)), prof.select(np.arange(500, 700))
    init = MixtureParams(np.full(2, 0.5), np.random.default_rng(1).uniform(-1, 1, (2, 10)))
    em = em_fit(train, f, EmOptions(k=2, init=init))
    dm = direct_mle(train, f, 2, init=init)
    a = mixture_log_likelihood(test, f, em.params, include_phi=False)
    b = mixture_log_likelihood(test, f, dm.params, include_phi=False)
    assert abs(a - b) <= 0.02 * abs(a)


# ---------------------------------------------------------------- alignment


def test_align_identity_and_swap(rng):
    t = MixtureParams(np.array([0.4, 0.6]), rng.normal(size=(2, 3)))
    same, mse = align_components(t, t)
    assert np.array_equal(same.betas, t.betas) and np.all(mse == 0)
    swapped, _ = align_components(t.permuted([1, 0]), t)
    assert np.array_equal(swapped.betas, t.betas)
    one = MixtureParams.single(rng.normal(size=3))
    assert np.array_equal(align_components(one, one)[0].betas, one.betas)


def test_align_matches_exhaustive_search(rng):
    t = MixtureParams(np.full(3, 1 / 3), rng.normal(size=(3, 4)))
    e = MixtureParams(np.array([0.2, 0.5, 0.3]), rng.normal(size=(3, 4)))
    best = min(
        itertools.permutations(range(3)),
        key=lambda p: sum(np.mean((e.betas[p[r]] - t.betas[r]) ** 2) for r in range(3)),
    )
    aligned, mse = align_components(e, t)
    assert np.array_equal(aligned.betas, e.betas[list(best)])
    assert np.allclose(mse, [np.mean((e.betas[best[r]] - t.betas[r]) ** 2) for r in range(3)])
