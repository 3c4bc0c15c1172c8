from __future__ import annotations

import io
import math

import pytest

from chainbalance.sampling import RngStream
from chainbalance.simulate import (
    ExploitationQuery,
    exploitation_probability,
    exploitation_probability_mc,
    sweep,
    sweep_to_csv,
)


def test_closed_form_balanced_is_one():
    for c in (1, 5, 10):
        q = ExploitationQuery(minority=50, majority=50, chains=c)
        assert exploitation_probability(q) == 1.0
    # Strictly below one whenever a majority surplus exists (up to float
    # resolution; extreme ratios can round to 1.0).
    assert exploitation_probability(ExploitationQuery(25, 50, 10)) < 1.0
    assert exploitation_probability(ExploitationQuery(1, 10_000, 1)) > 0.0


def test_closed_form_values():
    q = ExploitationQuery(minority=100, majority=900, chains=10)
    assert exploitation_probability(q) == pytest.approx(0.6920, abs=5e-4)
    q = ExploitationQuery(minority=62, majority=938, chains=10)
    assert exploitation_probability(q) == pytest.approx(0.4954, abs=5e-4)
    assert exploitation_probability(q) < 0.5
    q = ExploitationQuery(minority=400, majority=600, chains=10)
    assert exploitation_probability(q) == pytest.approx(1.0 - (1 / 3) ** 10)


def test_mc_balanced_exact():
    q = ExploitationQuery(minority=50, majority=50, chains=3, runs=500)
    assert exploitation_probability_mc(q, RngStream(0)) == 1.0


def test_mc_single_chain_matches_inclusion_probability():
    q = ExploitationQuery(minority=30, majority=100, chains=1, runs=20_000)
    estimate = exploitation_probability_mc(q, RngStream(1))
    p = 30 / 100
    bound = 3 * math.sqrt(p * (1 - p) / q.runs)
    assert abs(estimate - p) <= bound


def test_mc_agrees_with_closed_form():
    q = ExploitationQuery(minority=100, majority=900, chains=10, runs=10_000)
    estimate = exploitation_probability_mc(q, RngStream(2))
    assert abs(estimate - exploitation_probability(q)) <= 0.015


def test_mc_deterministic():
    q = ExploitationQuery(minority=40, majority=200, chains=5, runs=2_000)
    assert exploitation_probability_mc(q, RngStream(7, (3,))) == exploitation_probability_mc(
        q, RngStream(7, (3,))
    )


def test_query_validation():
    with pytest.raises(ValueError):
        ExploitationQuery(minority=0, majority=10)
    with pytest.raises(ValueError):
        ExploitationQuery(minority=11, majority=10)
    with pytest.raises(ValueError):
        ExploitationQuery(minority=5, majority=10, chains=0)
    with pytest.raises(ValueError):
        ExploitationQuery(minority=5, majority=10, runs=0)


def test_monotonicity_in_minority_and_chains():
    values_m = [
        exploitation_probability(ExploitationQuery(minority=m, majority=500, chains=10))
        for m in range(10, 500, 10)
    ]
    assert all(a <= b for a, b in zip(values_m, values_m[1:]))
    values_c = [
        exploitation_probability(ExploitationQuery(minority=50, majority=500, chains=c))
        for c in range(1, 30)
    ]
    assert all(a <= b for a, b in zip(values_c, values_c[1:]))


def test_sweep_default_grid():
    rows = sweep(range(20, 401, 20), n=1000, c=10, runs=2_000, rng=RngStream(3))
    assert len(rows) == 20
    assert rows[0].minority == 20 and rows[-1].minority == 400
    closed = [r.p_closed for r in rows]
    assert all(a < b for a, b in zip(closed, closed[1:]))
    for row in rows:
        assert row.majority == 1000 - row.minority
        assert row.imbalance_ratio == pytest.approx(row.majority / row.minority)
        # Four binomial standard errors.
        se = math.sqrt(row.p_closed * (1 - row.p_closed) / 2_000)
        assert abs(row.p_mc - row.p_closed) <= max(4 * se, 1e-9)


def test_sweep_rejects_majority_below_minority():
    with pytest.raises(ValueError):
        sweep([600], n=1000, c=10, runs=10, rng=RngStream(0))


def test_sweep_csv():
    rows = sweep(range(20, 61, 20), n=1000, c=10, runs=100, rng=RngStream(4))
    buffer = io.StringIO()
    sweep_to_csv(rows, buffer)
    lines = buffer.getvalue().strip().splitlines()
    assert lines[0] == "minority,majority,imbalance_ratio,p_closed,p_mc"
    assert len(lines) == 4
    assert lines[1].startswith("20,980,")
