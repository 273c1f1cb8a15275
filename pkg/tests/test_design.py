import json

import numpy as np
import pytest

from ncsched import data
from ncsched.certificates import DesignGrid
from ncsched.cycles import Cycle, is_T_contractive
from ncsched.design import DesignResult, design_cycle
from ncsched.errors import InfeasibleDesignError, PolicyFormatError

CFG = data.five_plant_config()
W5 = Cycle.from_sets(5, data.FIVE_CYCLE)


@pytest.fixture(scope="module")
def result():
    return design_cycle(CFG, W5, DesignGrid(1e-3, 0.1), 100)


def test_design_is_contractive(result):
    assert np.all(result.xi < 0)
    assert is_T_contractive(W5, result.T, result.certificates).ok
    for p, c in zip(CFG.plants, result.certificates):
        rs, ru = c.lmi_residuals(p.A_s, p.A_u)
        assert rs <= 1e-9 and ru <= 1e-9
        assert c.plant == p.index


def test_design_json_round_trip(result):
    text = result.dumps()
    back = DesignResult.from_json(json.loads(text))
    assert back.T == result.T and back.dumps() == text
    assert np.allclose(back.certificates[2].P_s, result.certificates[2].P_s)


def test_design_json_errors(result):
    obj = result.to_json()
    del obj["T"]
    with pytest.raises(PolicyFormatError):
        DesignResult.from_json(obj)
    obj = result.to_json()
    obj["T"] = [1, 2]
    with pytest.raises(PolicyFormatError):
        DesignResult.from_json(obj)


def test_coarse_grid_reports_no_grid_point():
    with pytest.raises(InfeasibleDesignError) as exc:
        design_cycle(CFG, W5, DesignGrid(0.9, 0.9), 100)
    assert exc.value.kind == InfeasibleDesignError.NO_GRID_POINT
    assert "does not conclude" in str(exc.value)


def test_unbalanced_cycle_reports_no_T_factors():
    cfg = data.three_plant_config(1)
    W = Cycle.from_sets(3, [(1,), (2,), (3,)])
    with pytest.raises(InfeasibleDesignError) as exc:
        design_cycle(cfg, W, DesignGrid(0.05, 0.1), 10)
    assert exc.value.kind == InfeasibleDesignError.NO_T_FACTORS


def test_non_covering_cycle_is_rejected():
    W = Cycle.from_sets(5, [(1, 2), (2, 3)])
    with pytest.raises(InfeasibleDesignError) as exc:
        design_cycle(CFG, W, DesignGrid(0.01, 0.1), 10)
    assert exc.value.kind == InfeasibleDesignError.NO_T_FACTORS


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        design_cycle(CFG, Cycle.from_sets(4, [(1, 2), (3, 4)]), DesignGrid(0.01, 0.1), 10)


def test_two_slot_three_plant_design():
    cfg = data.three_plant_config(2)
    res = design_cycle(cfg, Cycle.from_sets(3, [(1, 2), (2, 3)]), DesignGrid(1e-2, 1e-2), 100)
    assert np.all(res.xi < 0)
