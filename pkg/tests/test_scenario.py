import json
import uuid

import pytest

from loc_auth import scenario
from loc_auth.errors import ScenarioError
from tests.conftest import beacon
from tests.conftest import user


def base(**extra):
    data = {"schema": 1, "beacons": [beacon("b1", 0), beacon("b2", 30)],
            "users": [user("alice", [(0, 0, 0)])]}
    data.update(extra)
    return data


def test_load_office(scenario_file):
    result = scenario.load_scenario(scenario_file("office.json"))
    assert [b.id for b in result.beacons] == ["lobby", "finance", "vault"]
    assert result.token.period_ms == 10000
    assert result.end_ms() == 4000


@pytest.mark.parametrize("name", ["office.json", "travel.json", "replay.json",
                                  "wormhole.json", "dos.json"])
def test_shipped_scenarios_validate(scenario_file, name):
    assert scenario.load_scenario(scenario_file(name)).beacons


def test_defaults():
    result = scenario.parse_scenario(base())
    assert result.beacons[0].range_m == scenario.DEFAULT_RANGE_M
    assert result.beacons[0].interval_ms == 5000
    assert result.token.skew_periods == 0
    assert result.session.sliding
    assert result.missed_broadcasts == scenario.DEFAULT_MISSED_BROADCASTS


def test_end_ms_from_trace():
    data = base(token={"period_ms": 10000})
    data["users"] = [user("alice", [(0, 0, 0), (7000, 5, 0)])]
    assert scenario.parse_scenario(data).end_ms() == 17000


def test_beacon_uuid_from_name():
    assert (scenario.beacon_uuid("lobby")
            == uuid.uuid5(scenario.BEACON_NAMESPACE, "lobby"))


def test_beacon_uuid_literal():
    ident = "00112233-4455-6677-8899-aabbccddeeff"
    assert scenario.beacon_uuid(ident) == uuid.UUID(ident)


def test_beacon_lookup():
    result = scenario.parse_scenario(base())
    assert result.beacon("b2").x_m == 30
    with pytest.raises(ScenarioError):
        result.beacon("b3")


@pytest.mark.parametrize("change", [
    {"schema": 2},
    {"beacons": []},
    {"beacons": [beacon("b1", 0), beacon("b1", 30)]},
    {"adjacency": [["b1", "b3"]]},
    {"adjacency": [["b1", "b1"]]},
    {"users": [user("alice", [(0, 0, 0)]), user("alice", [(0, 1, 0)])]},
    {"users": [user("alice", [(10, 0, 0), (10, 1, 0)])]},
    {"unknown_key": True},
    {"token": {"period_ms": 0}},
    {"token": {"skew_periods": 2}},
    {"attacks": [{"kind": "replay", "record_at": "b3", "delta_ms": 1}]},
    {"attacks": [{"kind": "replay", "record_at": "b1"}]},
    {"attacks": [{"kind": "replay", "record_at": "b1", "delta_ms": 1,
                  "replay_at_ms": 5}]},
    {"attacks": [{"kind": "replay", "record_at": "b1", "delta_ms": 0}]},
    {"attacks": [{"kind": "dos_jam", "area": "b1", "channels_jammed": [3],
                  "from_ms": 0, "to_ms": 10}]},
    {"attacks": [{"kind": "dos_jam", "area": "b1", "channels_jammed": [0, 0],
                  "from_ms": 0, "to_ms": 10}]},
    {"attacks": [{"kind": "dos_jam", "area": "b1", "channels_jammed": [0],
                  "from_ms": 10, "to_ms": 10}]},
    {"attacks": [{"kind": "teleport", "area": "b1"}]},
    {"attacks": [{"kind": "forge", "name": "x", "area": "b1", "at_ms": 1},
                 {"kind": "forge", "name": "x", "area": "b2", "at_ms": 1}]},
])
def test_invalid_scenarios(change):
    with pytest.raises(ScenarioError):
        scenario.parse_scenario(base(**change))


def test_non_finite_position():
    data = base()
    data["beacons"][0]["x_m"] = float("nan")
    with pytest.raises(ScenarioError):
        scenario.parse_scenario(data)


def test_attack_default_names():
    data = base(attacks=[
        {"kind": "forge", "area": "b1", "at_ms": 100},
        {"kind": "dos_jam", "area": "b2", "channels_jammed": [2, 0],
         "from_ms": 0, "to_ms": 500},
    ])
    result = scenario.parse_scenario(data)
    assert [a.name for a in result.attacks] == ["forge-0", "dos_jam-1"]
    assert result.attacks[1].channels_jammed == [0, 2]


def test_wormhole_aliases():
    data = base(attacks=[{"kind": "wormhole", "from": "b1", "to": "b2",
                          "target": "login_reply"}])
    attack = scenario.parse_scenario(data).attacks[0]
    assert attack.from_beacon == "b1"
    assert attack.to_beacon == "b2"
    dumped = json.loads(scenario.dump_scenario(scenario.parse_scenario(data)))
    assert dumped["attacks"][0]["from"] == "b1"
    assert dumped["schema"] == 1


def test_with_overrides():
    result = scenario.parse_scenario(base()).with_overrides(period_ms=2000,
                                                            ttl_ms=9000)
    assert result.token.period_ms == 2000
    assert result.session.ttl_ms == 9000


@pytest.mark.parametrize("overrides", [
    {"period_ms": 0}, {"period_ms": -5}, {"ttl_ms": 0},
])
def test_with_overrides_validated(overrides):
    with pytest.raises(ScenarioError):
        scenario.parse_scenario(base()).with_overrides(**overrides)


def test_with_overrides_keeps_attacks():
    data = base(attacks=[{"kind": "wormhole", "from": "b1", "to": "b2"}])
    result = scenario.parse_scenario(data).with_overrides(period_ms=2000)
    assert result.attacks[0].name == "wormhole-0"
    assert result.attacks[0].to_beacon == "b2"


def test_parse_json_text():
    result = scenario.parse_scenario(json.dumps(base()))
    assert len(result.users) == 1


def test_load_malformed_json(make_test_file):
    path = make_test_file("broken.json", '{"schema": 1, "beacons": [')
    with pytest.raises(ScenarioError):
        scenario.load_scenario(path)


def test_load_not_json(make_test_file):
    path = make_test_file("scenario.txt", json.dumps(base()))
    with pytest.raises(ScenarioError):
        scenario.load_scenario(path)


def test_load_missing_file(tmpdir):
    with pytest.raises(ScenarioError):
        scenario.load_scenario(tmpdir.join("missing.json").strpath)
