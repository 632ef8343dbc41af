import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clonal_recur import (
    BASE_PARAMS,
    FIG1_PARAMS,
    ModelParams,
    ParameterError,
    SensitiveMode,
    TrajectoryOutcome,
    load_params,
    mutation_intensity,
    validate,
)


def test_fig1_params_validate():
    p = validate(FIG1_PARAMS)
    assert p.lambda0 == pytest.approx(-0.2)
    assert p.lambda1 == pytest.approx(0.2)
    assert p.sensitive_mode is SensitiveMode.STOCHASTIC


@pytest.mark.parametrize("change, constraint", [
    ({"d0": 0.9}, "lambda0<0"),
    ({"r0": 1.2}, "lambda0<0"),
    ({"d1": 1.0}, "lambda1>0"),
    ({"alpha": 1.0}, "alpha in (0,1)"),
    ({"alpha": 0.0}, "alpha in (0,1)"),
    ({"mu": 0.0}, "mu>0"),
    ({"mu": -1.0}, "mu>0"),
    ({"n": 0}, "n>=1"),
    ({"a": 0.0}, "a>0"),
    ({"r1": 0.0}, "r1>0"),
    ({"d1": -0.1}, "d1>=0"),
    ({"mu": math.nan}, "mu finite"),
])
def test_each_violation_names_its_constraint(change, constraint):
    with pytest.raises(ParameterError) as info:
        validate(FIG1_PARAMS.replace(**change))
    assert info.value.constraint == constraint


def test_from_dict_rejects_unknown_and_missing_keys():
    d = FIG1_PARAMS.to_dict()
    assert ModelParams.from_dict(d) == FIG1_PARAMS
    with pytest.raises(ValueError, match="unknown"):
        ModelParams.from_dict({**d, "lambda1": 0.3})
    del d["mu"]
    with pytest.raises(ValueError, match="mu"):
        ModelParams.from_dict(d)


def test_load_params_from_json_file(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps(BASE_PARAMS.to_dict()))
    assert load_params(path) == BASE_PARAMS
    assert load_params(BASE_PARAMS.to_dict()) == BASE_PARAMS


def test_mutation_intensity_values():
    p = BASE_PARAMS
    assert mutation_intensity(p, 0.0) == pytest.approx(0.5 * 1000 ** 0.4, rel=1e-12)
    assert mutation_intensity(p, 0.0) == pytest.approx(7.9245, abs=1e-4)
    assert mutation_intensity(p, 5.0) == pytest.approx(7.9245 * math.exp(-1), abs=1e-4)
    assert mutation_intensity(FIG1_PARAMS, 3.0, z0=200) == pytest.approx(200 * 0.5 * 1000 ** -0.6)
    with pytest.raises(ValueError):
        mutation_intensity(FIG1_PARAMS, 3.0)


def test_outcome_derived_fields():
    out = TrajectoryOutcome(
        recurrence_time=3.0, stop_time=3.0, birth_times=np.array([0.5, 1.0]),
        sizes=np.array([4, 0]), z0_final=10.0, seed=(1, 2), censored=False, extinct=False,
        counters={},
    )
    assert out.z1_final == 4
    assert out.num_clones == 2
    assert [c.size for c in out.clone_records] == [4, 0]


rates = st.floats(0.01, 3.0)


@given(r0=rates, gap0=st.floats(0.01, 2.0), d1=st.floats(0.0, 2.0), gap1=st.floats(0.01, 2.0),
       mu=st.floats(1e-3, 5.0), alpha=st.floats(0.01, 0.99), n=st.integers(1, 10**7))
@settings(max_examples=100, deadline=None)
def test_valid_params_round_trip(r0, gap0, d1, gap1, mu, alpha, n):
    p = validate(ModelParams(r0, r0 + gap0, d1 + gap1, d1, mu, alpha, n))
    assert p.lambda0 < 0 < p.lambda1
    assert ModelParams.from_dict(json.loads(json.dumps(p.to_dict()))) == p
    assert p.mu_eff == pytest.approx(mu * n ** -alpha)
