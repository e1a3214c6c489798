import math
from pathlib import Path

import pytest

import daycare_market as dm

TOY = Path(__file__).resolve().parents[1] / "data" / "toy"


def test_toy_market_matches_stably():
    market = dm.read_market(TOY)
    assert market.num_families == 40
    assert market.violations() == []
    policy = dm.PolicyScenario.before_reform()
    result = dm.run_mechanism(market, policy)
    assert len(result["placements"]) == market.num_children
    assert dm.blocking_coalitions(market, result["placements"], policy) == 0


def test_missing_market_raises():
    with pytest.raises(dm.DaycareError):
        dm.read_market(TOY.parent / "missing")


def test_generate_estimate_simulate():
    market, theta, observed = dm.generate_market(150, 3)
    assert sum(market.status_counts().values()) == 150
    fit = dm.estimate(market, observed, dm.PolicyScenario.after_reform())
    assert fit["converged"]
    assert fit["parameters"]["kappa"][0] > 0

    grid = dm.simulate_grid(market, theta, 0, 400, 200, threads=2)
    assert [(r["x"], r["y"]) for r in grid][:3] == [(0, 0), (0, 200), (0, 400)]
    assert len(grid) == 9


def test_statistics_helpers():
    assert dm.inequality_sd([0.721, 0.931, 0.676]) == pytest.approx(0.111, abs=1e-3)
    theta = dm.Theta.reference()
    assert dm.km_equivalent(theta.gamma0, theta) == pytest.approx(4.820, abs=5e-3)
    assert dm.Theta.from_text(theta.to_text()).kappa == theta.kappa

    welfare = [1.0 + 0.01 * i for i in range(40)]
    fit = dm.frontier_slope(welfare, [0.1 + 0.5 * w + (i % 3) * 0.01 for i, w in enumerate(welfare)])
    assert math.isclose(fit["slope"], 0.5, abs_tol=1e-9)

    y = [float(i % 7) for i in range(20)]
    x = [i % 2 == 1 for i in range(20)]
    q = dm.quantile_regression(y, x, 0.5, bootstrap_reps=20)
    assert q["n"] == 20 and q["se_slope"] is not None
