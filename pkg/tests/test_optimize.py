import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from xfl.ladder import LadderSpec, SweepGrid, default_layout
from xfl.mbvd import ResonatorSpec
from xfl.optimize import (PENALTY, Bounds, DesignVariables, Objective, apply_variables,
                          evaluate_design, optimize, variables_of)

GRID = SweepGrid(40.0, 60.0, 2001)
IL_ONLY = Objective(il_weight=1.0, fbw_weight=0.0, ripple_weight=0.0)


@pytest.fixture(scope="module")
def template(reference_cfg):
    return reference_cfg.ladder


def test_variables_of_template(template):
    v = variables_of(template)
    assert v.c0 == {"series": 37.0, "shunt": 80.0}
    assert v.delta_f == pytest.approx(1.9)
    back = apply_variables(template, v)
    assert back.resonators["series"].fs == pytest.approx(49.6)


def test_template_cost_is_finite(template):
    c = evaluate_design(variables_of(template), template, GRID, Objective())
    assert c < 10.0


def test_no_passband_penalty(template):
    # a sweep above the passband only sees the falling skirt
    v = variables_of(template)
    assert evaluate_design(v, template, SweepGrid(55.0, 60.0, 2001), Objective()) == PENALTY


def test_lossless_il_goes_to_zero(template):
    ll = template.with_resonators({k: r.replace(q=math.inf, spurs=())
                                   for k, r in template.resonators.items()})
    assert evaluate_design(variables_of(ll), ll, GRID, IL_ONLY) < 0.01


def test_evaluate_is_pure(template):
    v = DesignVariables({"series": 40.0, "shunt": 70.0}, 2.1)
    assert evaluate_design(v, template, GRID, Objective()) == evaluate_design(v, template, GRID, Objective())


def test_collapsed_bounds(template):
    v = variables_of(template)
    b = Bounds({n: (x, x) for n, x in v.c0.items()}, (v.delta_f, v.delta_f))
    r = optimize(template, b, seed=0, n_starts=3, grid=GRID)
    assert r.best.to_dict() == v.to_dict()
    assert r.cost == r.initial_cost
    assert not r.improved


def test_improves_on_template(template):
    r = optimize(template, Bounds.around(template, 0.3), IL_ONLY, seed=0, n_starts=2, grid=GRID,
                 max_iter=60)
    assert r.metrics.il_db <= evaluate_design(variables_of(template), template, GRID, IL_ONLY)
    assert np.all(np.diff(r.trace) <= 0)
    assert Bounds.around(template, 0.3).contains(r.best)


def test_seed_determinism(template):
    kw = dict(bounds=Bounds.around(template, 0.3), seed=7, n_starts=3, grid=GRID, max_iter=40)
    a = optimize(template, **kw)
    b = optimize(template, **kw)
    assert a.to_dict() == b.to_dict()


def test_start_order_invariance(template):
    # the winner is chosen by (cost, index), so it does not depend on completion order
    kw = dict(bounds=Bounds.around(template, 0.3), seed=3, n_starts=4, grid=GRID, max_iter=30)
    import os
    old = os.environ.get("XFL_THREADS")
    try:
        os.environ["XFL_THREADS"] = "1"
        serial = optimize(template, **kw)
        os.environ["XFL_THREADS"] = "4"
        parallel = optimize(template, **kw)
    finally:
        if old is None:
            os.environ.pop("XFL_THREADS", None)
        else:
            os.environ["XFL_THREADS"] = old
    assert serial.to_dict() == parallel.to_dict()


def test_bad_inputs():
    with pytest.raises(ValueError):
        DesignVariables({"a": 1.0}, 0.0)
    with pytest.raises(ValueError):
        Bounds({"a": (2.0, 1.0)}, (1.0, 2.0))
    with pytest.raises(ValueError):
        Objective(il_weight=0.0, fbw_weight=0.0, ripple_weight=0.0)


@given(st.floats(0.05, 0.9))
def test_bounds_around_contains_template(rel):
    t = LadderSpec({"series": ResonatorSpec(49.6, 0.048, 80, 37), "shunt": ResonatorSpec(47.7, 0.075, 80, 80)},
                   default_layout())
    b = Bounds.around(t, rel)
    assert b.contains(variables_of(t))
    assert np.all(b.lower() < b.upper())
