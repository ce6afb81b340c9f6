import numpy as np
import pytest

from eval_checker.custom_exception import ConvergenceInputError, EmptyChainError, MissingBlockError
from model_handler.posterior import (
    PosteriorChain,
    chain_from_frame,
    chain_to_frame,
    gelman_rubin,
    summarize,
)


def _chain(rho, model="naive", **blocks):
    rho = np.asarray(rho, dtype=np.float64)
    return PosteriorChain(
        model=model,
        set_labels=tuple(f"s{k + 1}" for k in range(rho.shape[2])),
        rho=rho,
        beta=np.zeros(rho.shape[:2] + (2 * rho.shape[2],)),
        blocks=blocks,
    )


def test_constant_chain_summary():
    row = summarize(_chain(np.full((1, 100, 1), 0.2)))[0]
    assert (row.median, row.lower, row.upper) == pytest.approx((0.2, 0.2, 0.2))
    assert row.prob_positive == 1.0
    assert row.rhat == 1.0


def test_symmetric_draws_center_on_zero():
    draws = np.linspace(-1.0, 1.0, 401)[None, :, None]
    row = summarize(_chain(draws))[0]
    assert row.median == pytest.approx(0.0, abs=1e-12)
    assert row.lower == pytest.approx(-row.upper)
    assert row.prob_positive == pytest.approx(200 / 401)


def test_summary_row_keys():
    row = summarize(_chain(np.zeros((1, 40, 1))))[0].as_dict()
    assert list(row) == ["component", "rho", "lower_2.5", "upper_97.5", "P(rho>0)", "R_hat", "R_hat_upper_95"]


def test_summary_does_not_depend_on_chain_order():
    generator = np.random.default_rng(1)
    rho = generator.normal(size=(3, 200, 2))
    a = summarize(_chain(rho))
    b = summarize(_chain(rho[::-1]))
    for row_a, row_b in zip(a, b):
        assert row_a.median == row_b.median
        assert row_a.lower == row_b.lower
        assert row_a.rhat == pytest.approx(row_b.rhat, rel=1e-12)


def test_identical_chains_have_rhat_exactly_one():
    x = np.random.default_rng(2).normal(size=1000)
    assert gelman_rubin(np.vstack([x, x])) == (1.0, 1.0)


def test_separated_chains_are_flagged():
    generator = np.random.default_rng(3)
    rhat, _ = gelman_rubin(np.vstack([generator.normal(0, 1, 500), generator.normal(10, 1, 500)]))
    assert rhat > 1.1


def test_single_stationary_chain_is_split():
    rhat, upper = gelman_rubin(np.random.default_rng(4).normal(size=2001))
    assert rhat == pytest.approx(1.0, abs=0.02)
    assert upper < 1.1


def test_short_chains_cannot_be_diagnosed():
    with pytest.raises(ConvergenceInputError):
        gelman_rubin(np.zeros(19))
    with pytest.raises(ConvergenceInputError):
        gelman_rubin(np.zeros((3, 9)))
    row = summarize(_chain(np.random.default_rng(5).normal(size=(1, 15, 1))))[0]
    assert np.isnan(row.rhat)


def test_empty_chain():
    with pytest.raises(EmptyChainError):
        summarize(_chain(np.zeros((1, 0, 1))))


def test_blocks_are_looked_up_by_name():
    chain = _chain(np.zeros((2, 5, 1)), **{"lambda": np.ones((2, 5))})
    assert chain.pooled("lambda").shape == (10,)
    with pytest.raises(MissingBlockError):
        chain.block("psi")


def test_trace_table_restores_rho_and_beta():
    generator = np.random.default_rng(6)
    chain = PosteriorChain(
        model="penalized",
        set_labels=("DD", "ED"),
        rho=generator.normal(size=(2, 30, 2)),
        beta=generator.normal(size=(2, 30, 4)),
        blocks={"lambda": generator.random((2, 30))},
    )
    frame = chain_to_frame(chain)
    assert list(frame.columns[:4]) == ["chain", "draw", "rho_DD", "rho_ED"]
    assert "lambda" in frame.columns
    restored = chain_from_frame(frame, model="penalized")
    assert restored.set_labels == ("DD", "ED")
    np.testing.assert_array_equal(restored.rho, chain.rho)
    np.testing.assert_array_equal(restored.beta, chain.beta)


@pytest.mark.parametrize("value", [0.2, -3.7, 1e4])
def test_constant_chains_report_exactly_one(value):
    assert gelman_rubin(np.full(100, value)) == (1.0, 1.0)
    assert gelman_rubin(np.full((3, 50), value)) == (1.0, 1.0)


def test_constant_chains_at_different_values_diverge():
    rhat, upper = gelman_rubin(np.vstack([np.full(50, 0.2), np.full(50, 0.3)]))
    assert rhat == np.inf
    assert upper == np.inf
