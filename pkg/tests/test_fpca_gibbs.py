import time
from contextlib import nullcontext

import numpy as np
import pytest

from eval_checker.custom_exception import (
    DimensionError,
    MissingBlockError,
    PreconditionError,
    SplineOrderWarning,
)
from model_handler.constant import SOC_PUBLISHED_SUMMARY
from model_handler.fpca_gibbs import (
    FpcaState,
    build_basis,
    fpca_beta_moments,
    fpca_sweep,
    gibbs_fpca,
    latent_covariance_summary,
    marginal_latent_scale,
    psi_update_moments,
    score_contribution,
    score_update_moments,
)
from model_handler.mmp_table import load_soc_table, rho_from_beta
from model_handler.posterior import PosteriorChain, summarize
from model_handler.probit_gibbs import (
    LatentState,
    PenaltyState,
    SamplerConfig,
    beta_update_moments,
    initial_beta,
    probit_sweep,
)
from model_handler.stochastics import RngStream


def _latent_table(make_table, n, beta, covariance, seed):
    generator = np.random.default_rng(seed)
    z = generator.multivariate_normal(beta, covariance, size=n)
    return make_table((z >= 0).astype(np.int8))


def test_basis_is_a_partition_of_unity():
    basis = build_basis(5)
    assert basis.Omega.shape == (10, 10)
    assert basis.order == 4
    np.testing.assert_allclose(basis.Omega.sum(axis=1), 1.0, atol=1e-12)
    assert (basis.Omega >= -1e-12).all()
    assert np.linalg.matrix_rank(basis.Omega) == 10


def test_xi_one_gives_the_identity_penalty():
    np.testing.assert_array_equal(build_basis(3, xi=1.0).P, np.eye(6))


def test_second_difference_penalty_for_two_sets():
    basis = build_basis(2, xi=0.01)
    D2 = np.array([[1.0, -2.0, 1.0, 0.0], [0.0, 1.0, -2.0, 1.0]])
    np.testing.assert_allclose(basis.P, 0.01 * np.eye(4) + 0.99 * D2.T @ D2)
    np.testing.assert_allclose(basis.P, basis.P.T)
    assert np.linalg.eigvalsh(basis.P).min() > 0


def test_single_set_falls_back_to_a_lower_order():
    with pytest.warns(SplineOrderWarning):
        basis = build_basis(1)
    assert basis.order == 2
    np.testing.assert_allclose(basis.Omega, np.eye(2))


@pytest.mark.parametrize("xi", [0.0, -0.1, 1.5])
def test_xi_outside_the_unit_interval_is_rejected(xi):
    with pytest.raises(PreconditionError):
        build_basis(2, xi)


def test_score_contribution_matches_the_kronecker_form():
    generator = np.random.default_rng(4)
    basis = build_basis(2)
    Psi = generator.normal(size=(4, 2))
    C = generator.normal(size=(6, 2))
    stacked = np.kron(C, basis.Omega) @ Psi.reshape(-1, order="F")
    for i in range(6):
        np.testing.assert_allclose(score_contribution(Psi, basis.Omega, C[i]), stacked[4 * i : 4 * i + 4], atol=1e-12)
    with pytest.raises(DimensionError):
        score_contribution(Psi, basis.Omega, np.ones(3))
    np.testing.assert_array_equal(score_contribution(Psi, basis.Omega, np.zeros(2)), np.zeros(4))


@pytest.mark.parametrize("K", [1, 2, 3])
def test_psi_conditional_matches_the_dense_system(K):
    generator = np.random.default_rng(K)
    with pytest.warns(SplineOrderWarning) if K == 1 else nullcontext():
        basis = build_basis(K)
    n, L = 9, 2
    C = generator.normal(size=(n, L))
    resid = generator.normal(size=(n, basis.D))
    lambda_ell = np.array([0.7, 1.9])
    sigma_eps2 = 1.3
    X = np.kron(C, basis.Omega)
    precision = X.T @ X / sigma_eps2 + np.kron(np.diag(1.0 / lambda_ell), basis.P)
    dense_cov = np.linalg.inv(precision)
    dense_mean = dense_cov @ X.T @ resid.ravel() / sigma_eps2

    mean, covariance = psi_update_moments(resid, C, basis, lambda_ell, sigma_eps2)
    assert np.abs(covariance - dense_cov).max() <= 1e-8 * np.abs(dense_cov).max()
    assert np.abs(mean - dense_mean).max() <= 1e-8 * np.abs(dense_mean).max()


def test_score_conditional_matches_the_dense_update():
    generator = np.random.default_rng(5)
    loadings = generator.normal(size=(4, 2))
    resid = generator.normal(size=(3, 4))
    mean, covariance = score_update_moments(resid, loadings, 0.5)
    dense = np.linalg.inv(loadings.T @ loadings / 0.5 + np.eye(2))
    np.testing.assert_allclose(covariance, dense, rtol=1e-10)
    np.testing.assert_allclose(mean[1], dense @ loadings.T @ resid[1] / 0.5, rtol=1e-10)


def test_zero_loadings_reduce_the_beta_update_to_the_penalized_one():
    generator = np.random.default_rng(6)
    Z = generator.normal(size=(8, 4))
    basis = build_basis(2)
    state = FpcaState(Psi=np.zeros((4, 2)), C=generator.normal(size=(8, 2)))
    for a, b in zip(fpca_beta_moments(Z, state, basis, 0.4), beta_update_moments(Z, 0.4)):
        np.testing.assert_array_equal(a, b)


def test_zero_loadings_reduce_the_sweep_to_the_penalized_sweep(make_table):
    table = _latent_table(make_table, 30, np.zeros(4), np.eye(4), seed=7)
    upper = table.x.astype(bool)
    basis = build_basis(2)
    penalized = LatentState(Z=np.zeros(table.x.shape), beta=initial_beta(table))
    fpca = LatentState(Z=np.zeros(table.x.shape), beta=initial_beta(table))
    penalty_a, penalty_b = PenaltyState(lam=0.7, mu=1.3), PenaltyState(lam=0.7, mu=1.3)
    state = FpcaState(Psi=np.zeros((4, 2)), C=np.zeros((30, 2)), sigma_eps2=1.0)

    probit_sweep(penalized, upper, RngStream(9), penalty_a)
    fpca_sweep(fpca, penalty_b, state, upper, basis, RngStream(9))

    np.testing.assert_array_equal(penalized.Z, fpca.Z)
    np.testing.assert_array_equal(penalized.beta, fpca.beta)
    assert (penalty_a.lam, penalty_a.mu) == (penalty_b.lam, penalty_b.mu)


def test_fpca_state_validates_its_shapes():
    with pytest.raises(DimensionError):
        FpcaState(Psi=np.zeros((4, 2)), C=np.zeros((5, 3)))
    with pytest.raises(PreconditionError):
        FpcaState(Psi=np.zeros((4, 2)), C=np.zeros((5, 2)), sigma_eps2=0.0)


def test_latent_covariance_with_zero_loadings_is_the_noise_variance():
    draws = 50
    chain = PosteriorChain(
        model="mvp",
        set_labels=("a", "b"),
        rho=np.zeros((1, draws, 2)),
        beta=np.zeros((1, draws, 4)),
        blocks={
            "loadings": np.zeros((1, draws, 4, 2)),
            "sigma_eps2": np.linspace(0.5, 1.5, draws)[None, :],
        },
    )
    np.testing.assert_allclose(latent_covariance_summary(chain), np.eye(4))


def test_latent_covariance_is_symmetric():
    generator = np.random.default_rng(8)
    chain = PosteriorChain(
        model="mvp",
        set_labels=("a", "b", "c"),
        rho=np.zeros((2, 30, 3)),
        beta=np.zeros((2, 30, 6)),
        blocks={"loadings": generator.normal(size=(2, 30, 6, 2)), "sigma_eps2": np.ones((2, 30))},
    )
    summary = latent_covariance_summary(chain)
    np.testing.assert_array_equal(summary, summary.T)
    assert np.linalg.eigvalsh(summary).min() >= 1.0 - 1e-10


def test_latent_covariance_needs_fpca_blocks():
    chain = PosteriorChain(model="naive", set_labels=("a",), rho=np.zeros((1, 5, 1)), beta=np.zeros((1, 5, 2)))
    with pytest.raises(MissingBlockError):
        latent_covariance_summary(chain)


def test_fpca_chain_blocks_stay_positive(make_table, rng):
    table = _latent_table(make_table, 60, [0.2, -0.3, 0.1, 0.0], np.eye(4), seed=9)
    chain = gibbs_fpca(table, SamplerConfig(total_iterations=600, burn_in=300), rng, keep_blocks=True)
    assert chain.model == "mvp"
    assert (chain.block("sigma_eps2") > 0).all()
    assert (chain.block("lambda_ell") > 0).all()
    assert (chain.block("lambda") > 0).all()
    assert chain.block("psi").shape == (1, 300, 4, 2)
    assert chain.block("scores").shape == (1, 300, 60, 2)
    assert np.all(np.abs(chain.rho) <= 1.0)
    assert chain.config["spline_order"] == 4


def test_marginal_scale_integrates_out_the_scores():
    generator = np.random.default_rng(14)
    beta = np.array([0.4, -0.8, 0.1, 1.2])
    loadings = generator.normal(scale=1.2, size=(4, 2))
    np.testing.assert_array_equal(marginal_latent_scale(np.zeros((4, 2))), np.ones(4))

    n = 200000
    z = beta + generator.standard_normal((n, 2)) @ loadings.T + generator.standard_normal((n, 4))
    expected = rho_from_beta(beta / marginal_latent_scale(loadings)).theta
    np.testing.assert_allclose((z >= 0).mean(axis=0), expected, atol=0.005)


def test_mvp_rho_is_the_marginal_difference(make_table, rng):
    table = _latent_table(make_table, 40, [0.5, -0.2, 0.0, -0.6], np.eye(4), seed=15)
    chain = gibbs_fpca(table, SamplerConfig(total_iterations=200, burn_in=100), rng)
    scale = marginal_latent_scale(chain.block("loadings"))
    assert (scale >= 1.0).all()
    np.testing.assert_allclose(chain.rho, rho_from_beta(chain.beta / scale).rho, rtol=0, atol=1e-12)
    assert not np.allclose(chain.rho, rho_from_beta(chain.beta).rho)


def test_scores_are_dropped_unless_requested(make_table, rng):
    table = _latent_table(make_table, 20, np.zeros(4), np.eye(4), seed=10)
    chain = gibbs_fpca(table, SamplerConfig(total_iterations=40, burn_in=20), rng)
    assert not chain.has_block("scores")


def test_exchangeable_latents_raise_the_fitted_correlation(make_table):
    beta = [0.0, 0.3, -0.2, 0.1]
    exchangeable = 0.5 * np.eye(4) + 0.5
    config = SamplerConfig(total_iterations=2000, burn_in=1000)
    correlated = latent_covariance_summary(
        gibbs_fpca(_latent_table(make_table, 500, beta, exchangeable, seed=11), config, RngStream(1))
    )
    independent = latent_covariance_summary(
        gibbs_fpca(_latent_table(make_table, 500, beta, np.eye(4), seed=12), config, RngStream(1))
    )
    off_diagonal = ~np.eye(4, dtype=bool)
    assert correlated[off_diagonal].mean() > 0
    assert correlated[off_diagonal].mean() > independent[off_diagonal].mean()


@pytest.mark.slow
def test_soc_reanalysis_matches_the_published_summary():
    chain = gibbs_fpca(load_soc_table(), SamplerConfig(), RngStream(20240517))
    for row in summarize(chain):
        median, lower, upper, prob_positive, _, _ = SOC_PUBLISHED_SUMMARY[row.label]
        assert row.median == pytest.approx(median, abs=0.02)
        assert row.lower == pytest.approx(lower, abs=0.03)
        assert row.upper == pytest.approx(upper, abs=0.03)
        assert row.prob_positive == pytest.approx(prob_positive, abs=0.03)
        assert row.rhat <= 1.02


@pytest.mark.slow
def test_full_schedule_runtime(make_table):
    table = _latent_table(make_table, 75, np.zeros(10), np.eye(10), seed=13)
    started = time.perf_counter()
    gibbs_fpca(table, SamplerConfig(), RngStream(2))
    assert time.perf_counter() - started <= 350
