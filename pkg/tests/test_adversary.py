import dataclasses

import pytest

from loc_auth import adversary
from loc_auth import simworld
from loc_auth.errors import ScenarioError
from loc_auth.scenario import load_scenario
from tests.conftest import beacon
from tests.conftest import user

PERIOD_MS = 10000


def kinds(log, kind, **match):
    return [e for e in log if e["kind"] == kind
            and all(e.get(k) == v for k, v in match.items())]


def part(outcome, name):
    return next(p for p in outcome.parts if p.name == name)


def replay_scenario(make_scenario, replay_ms):
    """ alice answers at t=0, leaves, and is back in range for the replay. """
    back = replay_ms - 500
    trace = [(0, 0, 0), (1000, 0, 0), (1001, 0, 100), (back - 1, 0, 100),
             (back, 0, 0)]
    return make_scenario([beacon("finance", 0)], [user("carol", trace)],
                         until_ms=replay_ms + 1000)


@pytest.mark.parametrize("delta_ms", [1, PERIOD_MS, 10 * PERIOD_MS])
def test_replay_after_period(authority, enrolled, make_scenario, delta_ms):
    scenario = replay_scenario(make_scenario, PERIOD_MS + delta_ms)
    outcome = adversary.run_replay_game(scenario, delta_ms,
                                        authority=authority,
                                        enrolled=enrolled)
    assert outcome.passed, outcome.reason
    log = list(outcome.events)

    replies = kinds(log, "login_sent", trigger="replay-broadcast")
    assert replies
    reply_ids = {e["login_id"] for e in replies}
    results = [e for e in log if e["kind"] in ("authenticated", "rejected")
               and e["login_id"] in reply_ids]
    assert [e["reason"] for e in results] == ["TokenMismatch"] * len(replies)

    injected = kinds(log, "attack_delivered", attack="replay-login")
    assert len(injected) == 1
    result = [e for e in log if e["kind"] in ("authenticated", "rejected")
              and e["login_id"] == injected[0]["login_id"]]
    assert result[0]["reason"] == "TokenMismatch"
    assert adversary.attacker_authentications(log) == []
    assert adversary.exit_code(log) == 0


def test_replay_within_period_control(authority, enrolled, make_scenario):
    scenario = replay_scenario(make_scenario, PERIOD_MS - 1000)
    outcome = adversary.run_replay_game(scenario, -1000, authority=authority,
                                        enrolled=enrolled)
    assert outcome.passed, outcome.reason
    assert outcome.extension == adversary.REPLAY_CACHE
    broadcast = part(outcome, "replay-broadcast")
    assert broadcast.passed
    assert "accepted" in broadcast.reason
    login = part(outcome, "replay-login")
    assert login.extension == adversary.REPLAY_CACHE
    assert adversary.attacker_authentications(list(outcome.events)) == []


def test_replay_needs_honest_user(authority, enrolled, make_scenario):
    scenario = make_scenario([beacon("finance", 0)],
                             [user("carol", [(0, 500, 0)])], until_ms=4000)
    with pytest.raises(ScenarioError):
        adversary.run_replay_game(scenario, 1, authority=authority,
                                  enrolled=enrolled)


def test_wormhole(authority, enrolled, scenario_file):
    scenario = load_scenario(scenario_file("wormhole.json"))
    outcome = adversary.run_wormhole_game(scenario, authority=authority,
                                          enrolled=enrolled)
    assert outcome.passed, outcome.reason
    log = list(outcome.events)
    tunneled = kinds(log, "login_sent", trigger="tunnel-broadcast")
    assert [e["user"] for e in tunneled] == ["carol"]
    assert tunneled[0]["header_beacon"] == "l"
    assert tunneled[0]["beacon"] == "p"
    assert adversary.attacker_authentications(log) == []


def test_wormhole_same_beacon_control(authority, enrolled, scenario_file):
    scenario = load_scenario(scenario_file("wormhole.json"))
    outcome = adversary.run_wormhole_game(scenario, "l", "l",
                                          authority=authority,
                                          enrolled=enrolled)
    assert outcome.passed, outcome.reason
    assert part(outcome, "tunnel-login").extension == adversary.REPLAY_CACHE


def test_wormhole_after_period(authority, enrolled, make_scenario):
    scenario = make_scenario([beacon("l", 0)],
                             [user("alice", [(0, 1, 0)])], until_ms=11000)
    outcome = adversary.run_wormhole_game(scenario, "l", "l",
                                          tunnel_delay_ms=PERIOD_MS,
                                          authority=authority,
                                          enrolled=enrolled)
    assert outcome.passed, outcome.reason
    assert outcome.extension is None


def test_wormhole_overlapping_ranges(authority, enrolled, make_scenario):
    scenario = make_scenario([beacon("l", 0), beacon("p", 15)],
                             [user("alice", [(0, 1, 0)])], until_ms=1000)
    with pytest.raises(ScenarioError):
        adversary.run_wormhole_game(scenario, authority=authority,
                                    enrolled=enrolled)


def test_wormhole_needs_two_beacons(authority, enrolled, make_scenario):
    scenario = make_scenario([beacon("l", 0)], [user("alice", [(0, 1, 0)])],
                             until_ms=1000)
    with pytest.raises(ScenarioError):
        adversary.run_wormhole_game(scenario, authority=authority,
                                    enrolled=enrolled)


def test_dos(authority, enrolled, scenario_file):
    scenario = load_scenario(scenario_file("dos.json"))
    outcome = adversary.run_dos_game(scenario, partial=(0, 8000),
                                     full=(8000, 20000), authority=authority,
                                     enrolled=enrolled)
    assert outcome.passed, outcome.reason
    log = list(outcome.events)

    partial = kinds(log, "broadcast", beacon="finance")
    assert {e["channel"] for e in partial if e["t_us"] < 8_000_000} == {2}
    assert not [e for e in partial if 8_000_000 <= e["t_us"] < 20_000_000]
    fallback = kinds(log, "fallback_required", user="alice")
    assert [e["t_us"] for e in fallback] == [16_000_000]
    recovered = kinds(log, "session_established", user="alice")
    assert [e["t_us"] for e in recovered] == [0, 20_000_000]


def test_forge(authority, enrolled, make_scenario):
    scenario = make_scenario([beacon("finance", 0)],
                             [user("alice", [(0, 1, 1)])], until_ms=4000)
    outcome = adversary.run_forge_game(scenario, at_ms=2000,
                                       authority=authority, enrolled=enrolled)
    assert outcome.passed, outcome.reason
    log = list(outcome.events)
    replies = kinds(log, "login_sent", trigger="forge")
    assert len(replies) == 1
    assert kinds(log, "rejected", login_id=replies[0]["login_id"],
                 reason="TokenMismatch")


def test_attacker_holds_only_bytes():
    names = {f.name for f in dataclasses.fields(simworld.AttackerNode)}
    assert names == {"attack", "recorded"}


def world(attacks):
    return {"t_us": 0, "kind": "world", "period_us": 10_000_000,
            "missed_broadcasts": 3, "adjacency": [], "attacks": attacks,
            "beacons": {"finance": {"x_m": 0.0, "y_m": 0.0, "range_m": 10.0,
                                    "interval_us": 5_000_000}}}


REPLAY_LOGIN = {"kind": "replay", "name": "r", "record_at": "finance",
                "target": "login_reply", "delta_ms": 1}


def replay_log(reason):
    return [
        world([REPLAY_LOGIN]),
        {"t_us": 0, "kind": "attacker_recorded", "attack": "r", "period": 0,
         "target": "login_reply", "login_id": 1},
        {"t_us": 10_001_000, "kind": "attack_delivered", "attack": "r",
         "period": 0, "target": "login_reply", "login_id": 2},
        {"t_us": 10_001_000, "kind": "rejected", "login_id": 2,
         "sender": "attacker", "reason": reason},
    ]


def test_judge_reads_log():
    outcomes = adversary.judge(replay_log("TokenMismatch"))
    assert [o.verdict for o in outcomes] == [adversary.PASS]


def test_judge_fails_on_wrong_reason():
    outcomes = adversary.judge(replay_log("HashMismatch"))
    assert [o.verdict for o in outcomes] == [adversary.FAIL]


def test_judge_fails_without_recording():
    log = [world([REPLAY_LOGIN])]
    outcome = adversary.judge(log)[0]
    assert not outcome.passed
    assert "never recorded" in outcome.reason


def test_append_verdicts_and_exit_code():
    log = replay_log("HashMismatch")
    adversary.append_verdicts(log, adversary.judge(log))
    verdict = log[-1]
    assert verdict["kind"] == "verdict"
    assert verdict["attack"] == "r"
    assert verdict["t_us"] == 10_001_000
    assert adversary.exit_code(log) == 1


@pytest.mark.parametrize("event, expected_result", [
    ({"t_us": 0, "kind": "verdict", "verdict": "Pass"}, 0),
    ({"t_us": 0, "kind": "verdict", "verdict": "Fail"}, 1),
    ({"t_us": 0, "kind": "invariant_violation", "rule": "causality"}, 1),
])
def test_exit_code(event, expected_result):
    assert adversary.exit_code([world([]), event]) == expected_result
