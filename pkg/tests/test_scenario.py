import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from resonant_swipt.channel import GainPattern
from resonant_swipt.scenario import (ControlParams, PhysicalConstants, ScenarioError,
                                     default_two_ue_scenario, load_scenario, parse_scenario,
                                     scenario_to_dict, serialize_scenario)


def minimal_doc(**over):
    doc = {
        "bs": {"tx": {"rows": 2, "cols": 2, "spacing": 0.0052}, "rx": {"rows": 2, "cols": 2, "spacing": 0.005}},
        "ues": [{"link_id": 1, "position": [1.0, 0.0, 2.0],
                 "tx": {"rows": 2, "cols": 2, "spacing": 0.005}, "rx": {"rows": 2, "cols": 2, "spacing": 0.0052}},
                {"link_id": 2, "position": [-1.0, 0.0, 2.0],
                 "tx": {"rows": 2, "cols": 2, "spacing": 0.005}, "rx": {"rows": 2, "cols": 2, "spacing": 0.0052}}],
        "plan": [{"link_id": 1, "f_dl": 28.517e9, "f_ul": 29.5e9}, {"link_id": 2, "f_dl": 29e9, "f_ul": 30e9}],
    }
    doc.update(over)
    return doc


def test_defaults_fill_table_values():
    s = parse_scenario(json.dumps(minimal_doc()))
    assert s.control.alpha == 0.995
    assert s.control.gamma == 0.995
    assert s.constants.z0 == 377.0
    assert s.constants.temperature == 295.0
    assert s.constants.kappa == 1.38e-23
    assert s.control.beta == 2.0
    assert s.control.delta_db == 3.0
    assert s.control.bandwidth == 1e9
    assert s.control.noise_figure_db == 6.0
    assert s.control.p_cap_total == 20.0
    assert s.pattern.g_max == pytest.approx(10 ** 0.497)


def test_omitted_ue_normal_points_at_bs():
    s = parse_scenario(json.dumps(minimal_doc()))
    n = s.ues[0].normal
    assert n == pytest.approx((-1 / math.sqrt(5), 0.0, -2 / math.sqrt(5)))


def test_empty_ue_list_rejected():
    with pytest.raises(ScenarioError, match="at least one UE required"):
        parse_scenario(json.dumps(minimal_doc(ues=[])))


def test_alpha_out_of_range():
    with pytest.raises(ScenarioError, match=r"alpha must lie in \(0,1\)") as e:
        parse_scenario(json.dumps(minimal_doc(control={"alpha": 1.2})))
    assert e.value.path == "control.alpha"


@pytest.mark.parametrize("mutate,where", [
    (lambda d: d["ues"][0].pop("tx"), "ues[0].tx"),
    (lambda d: d["ues"][1]["rx"].update(rows=0), "ues[1].rx"),
    (lambda d: d["plan"].pop(), "ues[1].link_id"),
    (lambda d: d["bs"].update(normal=[0, 0, 0]), "bs.normal"),
    (lambda d: d["control"].update(max_iters="ten") if "control" in d else d.update(control={"max_iters": "x"}),
     "control.max_iters"),
    (lambda d: d["ues"][0].update(colour="red"), "ues[0].colour"),
    (lambda d: d["ues"][0]["position"].append(1.0), "ues[0].position"),
])
def test_structured_errors(mutate, where):
    d = minimal_doc()
    mutate(d)
    with pytest.raises(ScenarioError) as e:
        parse_scenario(json.dumps(d))
    assert e.value.path == where


def test_unknown_key_allowed_when_not_strict():
    d = minimal_doc()
    d["notes"] = "hello"
    parse_scenario(json.dumps(d), strict=False)
    with pytest.raises(ScenarioError, match="unknown key"):
        parse_scenario(json.dumps(d))


def test_malformed_json():
    with pytest.raises(ScenarioError, match="malformed JSON"):
        parse_scenario("{not json")


def test_missing_file_names_path(tmp_path):
    p = tmp_path / "nope.json"
    with pytest.raises(ScenarioError, match="nope.json"):
        load_scenario(p)


def test_polar_placement():
    d = minimal_doc()
    d["ues"][0]["position"] = {"range": 2.0, "elevation_deg": 30.0, "azimuth_deg": 0.0}
    s = parse_scenario(json.dumps(d))
    assert s.ues[0].position == pytest.approx((1.0, 0.0, math.sqrt(3)))


def test_mismatched_tx_rx_counts():
    d = minimal_doc()
    d["bs"]["tx"]["rows"] = 3
    with pytest.raises(ScenarioError, match="same rows x cols"):
        parse_scenario(json.dumps(d))


def test_default_scenario_table_values():
    s = default_two_ue_scenario()
    e1, e2 = s.plan.entry(1), s.plan.entry(2)
    assert e2.f_dl == 29e9 and e2.f_ul == 30e9
    assert e1.f_ul == 29.5e9
    assert abs(e1.f_dl - 28.517e9) < 1e6
    assert s.ue(1).position == (1.0, 0.0, 2.0)
    assert s.ue(2).position == (-1.0, 0.0, 2.0)
    assert s.bs.position == (0.0, 0.0, 0.0) and s.bs.normal == (0.0, 0.0, 1.0)
    c = s.constants.c
    assert s.bs.rx_array.spacing == pytest.approx(0.0050, abs=5e-5)  # lambda_UL,2 / 2
    assert s.bs.tx_array.spacing == pytest.approx(0.0052, abs=5e-5)  # lambda_DL,2 / 2
    assert s.bs.tx_array.spacing == c / 29e9 / 2


def test_default_round_trip():
    s = default_two_ue_scenario()
    assert parse_scenario(serialize_scenario(s)) == s


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.01, 0.99), gamma=st.floats(0.01, 0.99),
       x=st.floats(-3, 3), z=st.floats(0.5, 5), rows=st.integers(1, 5),
       q=st.floats(0, 4), seed=st.integers(0, 2**31), phase=st.sampled_from(["random", "zero"]))
def test_round_trip_property(alpha, gamma, x, z, rows, q, seed, phase):
    from dataclasses import replace
    from resonant_swipt.scenario import resize_arrays
    s = resize_arrays(default_two_ue_scenario(2), rows, rows)
    s = replace(s, pattern=GainPattern(exponent=q))
    s = s.with_control(alpha=alpha, gamma=gamma, init_seed=seed, init_phase=phase)
    ues = (replace(s.ues[0], position=(x, 0.0, z)),) + s.ues[1:]
    s = replace(s, ues=ues)
    assert parse_scenario(serialize_scenario(s)) == s


def test_constants_positive():
    with pytest.raises(ScenarioError):
        PhysicalConstants(temperature=0)
    with pytest.raises(ScenarioError):
        ControlParams(conv_tol=0)


def test_dict_has_schema_sections():
    d = scenario_to_dict(default_two_ue_scenario(2))
    assert set(d) == {"constants", "control", "pattern", "bs", "ues", "plan"}
    assert set(d["control"]) >= {"alpha", "gamma", "p_cap_total", "g_pa_max", "beta", "delta_db", "bandwidth",
                                 "noise_figure_db", "conv_tol", "conv_window", "max_iters", "init_seed",
                                 "init_phase"}
