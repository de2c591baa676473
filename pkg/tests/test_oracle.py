import math

import pytest

from pld.distortion import Strategy
from pld.optimizer import Scenario
from pld.oracle import (
    GridSpec,
    alpha_line_search,
    alpha_oracle,
    bob_min_blocklengths_scan,
    q_function_reference,
    within_sigma,
)


def test_grid_spec_validation():
    GridSpec(1, 1, 2)
    with pytest.raises(ValueError):
        GridSpec(0, 5)
    with pytest.raises(ValueError):
        GridSpec(5, 4)
    with pytest.raises(ValueError):
        GridSpec(alpha_points=1)


def test_q_reference_values():
    assert q_function_reference(0.0) == pytest.approx(0.5, abs=1e-15)
    assert q_function_reference(3.0) == pytest.approx(0.00135, abs=1e-5)
    assert q_function_reference(1.7) + q_function_reference(-1.7) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        q_function_reference(11.0)


def test_line_search_tie_and_slope():
    assert alpha_line_search(lambda a: 3.0, 11) == (0.0, 3.0)
    a, v = alpha_line_search(lambda a: a, 101)
    assert a == 1.0 and v == 1.0
    assert alpha_line_search(lambda a: a, 11, constraint=lambda a: a <= 0.5) == (0.5, 0.5)
    assert alpha_line_search(lambda a: a, 11, constraint=lambda a: False) == (None, -math.inf)
    with pytest.raises(ValueError):
        alpha_line_search(lambda a: a, 1)


def test_alpha_oracle_respects_bob():
    s = Scenario.reference()
    a, _ = alpha_oracle(Strategy.PERCEPTION, Strategy.PERCEPTION, (1e-3, 1e-3), (0.3, 0.6), s)
    # largest grid alpha below (0.01 - 0.001) / (0.999 * 0.001 * 10)
    assert a == pytest.approx(0.9009, abs=2e-4)
    assert a <= (0.01 - 0.001) / (0.999 * 0.001 * 10)


def test_scan_reports_empty():
    s = Scenario.reference()
    assert bob_min_blocklengths_scan(Strategy.DROPPING, 0.5, s) is None


def test_within_sigma():
    assert within_sigma(1.0, 1.0, 0.0)
    assert not within_sigma(1.0, 1.1, 0.0)
    assert within_sigma(1.0, 1.03, 0.01)
    assert not within_sigma(1.0, 1.05, 0.01)
