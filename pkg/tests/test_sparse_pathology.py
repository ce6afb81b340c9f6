import numpy as np
import pytest

from model_handler.handler_map import handler_map
from model_handler.probit_gibbs import SamplerConfig
from model_handler.stochastics import RngStream


@pytest.fixture
def empty_specialty_column(make_table):
    generator = np.random.default_rng(21)
    x = (generator.random((40, 4)) < [0.3, 0.4, 0.0, 0.35]).astype(int)
    x[0, 0] = 1
    return make_table(x)


def _report(name, table, **kwargs):
    return handler_map[name](name, **kwargs).inference(table, RngStream(8))


def test_gee_flags_the_empty_column(empty_specialty_column):
    report = _report("gee", empty_specialty_column)
    assert report.result.degenerate.tolist() == [True, False]
    assert report.rows[0]["degenerate"] is True


def test_bootstrap_interval_is_bounded_at_zero(empty_specialty_column):
    report = _report("bootstrap", empty_specialty_column, resamples=1000)
    assert report.interval_low[0] >= 0


@pytest.mark.parametrize("name", ["naive", "penalized", "mvp"])
def test_bayesian_intervals_stay_finite_and_open(empty_specialty_column, name):
    report = _report(name, empty_specialty_column, sampler_config=SamplerConfig(total_iterations=1000, burn_in=500))
    assert np.isfinite(report.interval_low).all()
    assert np.isfinite(report.interval_high).all()
    assert (report.interval_high > report.interval_low).all()
    assert (report.interval_low >= -1).all() and (report.interval_high <= 1).all()
