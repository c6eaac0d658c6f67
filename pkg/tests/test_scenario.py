import copy
import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from nablowup.errors import NonzeroRemainder, ScenarioError
from nablowup.scenario import (LINEAR_EXAMPLE, WORKED_EXAMPLE, build_pipeline, load_scenario,
                               scenario_from_dict)

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.mark.parametrize("name, builtin", [("worked_example", WORKED_EXAMPLE), ("linear", LINEAR_EXAMPLE)])
def test_files_match_builtins(name, builtin):
    path = SCENARIOS / f"{name}.json"
    assert json.loads(path.read_text()) == builtin
    scn = load_scenario(path)
    assert scn.name == name and scn.path == path


def test_worked_pipeline():
    pl = build_pipeline(scenario_from_dict(WORKED_EXAMPLE))
    assert pl.rhs.kappa == 1 and pl.centred.v_shift == Fraction(1)
    assert np.array_equal(pl.rhs.A, np.diag([-1.0, 3.0]))
    assert pl.rhs.M == pytest.approx(1.65)
    assert pl.cfg.delta == 0.0078125
    assert [e.v_star for e in pl.equilibria] == [Fraction(0), Fraction(1)]
    hv = pl.head_vectors()
    assert len(hv) == 4 and np.allclose(pl.split.P_s @ hv[0], hv[0])
    assert np.linalg.norm(hv[0]) == pytest.approx(0.99 * pl.cfg.r)


def test_overrides():
    scn = scenario_from_dict(WORKED_EXAMPLE)
    pl = build_pipeline(scn, {"delta": 0.004, "sigma0": 2.0, "beta": 0.3, "kappa": None})
    assert pl.cfg.delta == 0.004 and pl.cfg.sigma0 == 2.0 and pl.cfg.beta == 0.3
    assert pl.sigma == 2.0
    with pytest.raises(NonzeroRemainder):
        build_pipeline(scn, {"kappa": 2}, with_cfg=False)
    pl2 = build_pipeline(scenario_from_dict(LINEAR_EXAMPLE), {"kappa": 2}, with_cfg=False)
    assert pl2.rhs.kappa == 2 and pl2.cfg is None


def mutate(**kw):
    d = copy.deepcopy(WORKED_EXAMPLE)
    for k, v in kw.items():
        if v is None:
            d.pop(k)
        else:
            d[k] = v
    return d


@pytest.mark.parametrize("bad", [
    mutate(name=None),
    mutate(extra=1),
    mutate(field={"F": ["x"]}),
    mutate(field={"F": ["x^2 +", "y"]}),
    mutate(field={"F": ["x^(1/2)", "y"]}),
    mutate(forcing={"family": "gaussian"}),
    mutate(forcing={"family": "exponential", "params": {"a": 1.0}}),
    mutate(chart={"sign": 0}),
    mutate(lp={"sigma0": 2.0, "sigma": 1.0}),
    dict(LINEAR_EXAMPLE, kappa=None),
])
def test_invalid(bad):
    bad = {k: v for k, v in bad.items() if v is not None}
    with pytest.raises(ScenarioError):
        build_pipeline(scenario_from_dict(bad))


def test_load_errors(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.json")
    p = tmp_path / "broken.json"
    p.write_text("{")
    with pytest.raises(ScenarioError):
        load_scenario(p)
