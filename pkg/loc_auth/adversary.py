""" Replay, wormhole, jamming and forgery games with verdicts read off the log.

An attacker only records, replays, tunnels, jams or forges with public
parameters.  Judges never look at attacker state: everything they need
is in the event log, including the attack scripts themselves.
"""
import logging
from dataclasses import dataclass

from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

from loc_auth.errors import ScenarioError
from loc_auth.protocol import RejectReason
from loc_auth.scenario import Scenario
from loc_auth.scenario import parse_scenario
from loc_auth.simworld import Authority
from loc_auth.simworld import Enrollment
from loc_auth.simworld import Event
from loc_auth.simworld import Point2D
from loc_auth.simworld import WorldState
from loc_auth.simworld import run

logger = logging.getLogger(__name__)

PASS = "Pass"
FAIL = "Fail"
REPLAY_CACHE = "replay-cache"

TOKEN_MISMATCH = RejectReason.TOKEN_MISMATCH.value
REPLAYED_NONCE = RejectReason.REPLAYED_NONCE.value


@dataclass(frozen=True)
class GameOutcome:
    game: str
    name: str
    verdict: str
    reason: str
    events: Tuple[Event, ...] = ()
    parts: Tuple["GameOutcome", ...] = ()
    extension: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_event(self, t_us: int) -> Event:
        event = {"t_us": t_us, "kind": "verdict", "game": self.game,
                 "attack": self.name, "verdict": self.verdict,
                 "reason": self.reason, "observed": len(self.events)}
        if self.extension:
            event["extension"] = self.extension
        return event


def _passed(game: str, name: str, reason: str, events: Sequence[Event],
            extension: Optional[str] = None) -> GameOutcome:
    return GameOutcome(game, name, PASS, reason, tuple(events),
                       extension=extension)


def _failed(game: str, name: str, reason: str,
            events: Sequence[Event] = ()) -> GameOutcome:
    return GameOutcome(game, name, FAIL, reason, tuple(events))


# ----------------------------------------------------------------------
# log queries

def _world(log: Sequence[Event]) -> Event:
    for event in log:
        if event["kind"] == "world":
            return event
    raise ScenarioError("event log has no world record")


def _of_kind(log: Sequence[Event], kind: str, **match: Any) -> List[Event]:
    return [e for e in log if e["kind"] == kind
            and all(e.get(k) == v for k, v in match.items())]


def _verifications(log: Sequence[Event], login_ids: Sequence[int]) -> List[Event]:
    wanted = set(login_ids)
    return [e for e in log if e["kind"] in ("authenticated", "rejected")
            and e.get("login_id") in wanted]


def _between(events: Sequence[Event], start_us: int,
             end_us: Optional[int] = None) -> List[Event]:
    return [e for e in events if e["t_us"] >= start_us
            and (end_us is None or e["t_us"] < end_us)]


def attacker_authentications(log: Sequence[Event]) -> List[Event]:
    return [e for e in log if e["kind"] == "authenticated"
            and e["sender"] != "user"]


# ----------------------------------------------------------------------
# judges

def _judge_recorded(log: Sequence[Event], attack: Dict[str, Any]) -> GameOutcome:
    """ Replays and tunnels share one rule: stale or misplaced means TokenMismatch. """
    game, name = attack["kind"], attack["name"]
    recorded = _of_kind(log, "attacker_recorded", attack=name)
    delivered = _of_kind(log, "attack_delivered", attack=name)
    if not recorded:
        return _failed(game, name, "attacker never recorded a message")
    if not delivered:
        return _failed(game, name, "recorded message was never delivered",
                       recorded)
    period_us = _world(log)["period_us"]
    drop = delivered[0]
    same_place = game == "replay" or attack["from"] == attack["to"]
    fresh = same_place and drop["t_us"] // period_us == recorded[0]["period"]

    if attack["target"] == "broadcast":
        replies = _of_kind(log, "login_sent", trigger=name)
        if not replies:
            return _failed(game, name, "no honest user answered the "
                           "delivered broadcast", recorded + delivered)
        results = _verifications(log, [e["login_id"] for e in replies])
        observed = recorded + delivered + replies + results
        if fresh:
            if all(e["kind"] == "authenticated" for e in results):
                return _passed(game, name, "honest reply within the period "
                               "at the recorded place is accepted", observed)
            return _failed(game, name, "control reply was rejected", observed)
        if results and all(e.get("reason") == TOKEN_MISMATCH for e in results):
            return _passed(game, name, "honest replies rejected with "
                           "TokenMismatch", observed)
        return _failed(game, name, "honest reply to a stale or misplaced "
                       "broadcast was not rejected with TokenMismatch", observed)

    results = _verifications(log, [drop["login_id"]])
    observed = recorded + delivered + results
    if not results:
        return _failed(game, name, "injected login was never verified", observed)
    outcome = results[0]
    if fresh:
        if outcome.get("reason") == REPLAYED_NONCE:
            return _passed(game, name, "duplicate login blocked by the replay "
                           "cache", observed, extension=REPLAY_CACHE)
        return _failed(game, name, f"duplicate login ended as {outcome['kind']}",
                       observed)
    if outcome.get("reason") == TOKEN_MISMATCH:
        return _passed(game, name, "injected login rejected with TokenMismatch",
                       observed)
    return _failed(game, name, f"injected login ended as {outcome['kind']} "
                   f"{outcome.get('reason', '')}".rstrip(), observed)


def _judge_jam(log: Sequence[Event], attack: Dict[str, Any]) -> GameOutcome:
    game, name, area = attack["kind"], attack["name"], attack["area"]
    world = _world(log)
    start = round(attack["from_ms"] * 1000)
    end = round(attack["to_ms"] * 1000)
    broadcasts = _of_kind(log, "broadcast", beacon=area)
    accepted = [e for e in _of_kind(log, "authenticated", beacon=area)
                if e["sender"] == "user"]
    during = _between(broadcasts, start, end)
    accepted_during = _between(accepted, start, end)

    if len(attack["channels_jammed"]) < 3:
        observed = during + accepted_during
        if not during:
            return _failed(game, name, "no broadcast got through a partial jam",
                           observed)
        if not accepted_during:
            return _failed(game, name, "no login succeeded during a partial jam",
                           observed)
        return _passed(game, name, "frequency hopping kept the area usable",
                       observed)

    if during or accepted_during:
        return _failed(game, name, "traffic got through a full jam",
                       during + accepted_during)
    interval = world["beacons"][area]["interval_us"]
    deadline = start + world["missed_broadcasts"] * interval
    fallbacks = [e for e in _of_kind(log, "fallback_required", beacon=area)
                 if start <= e["t_us"] <= deadline]
    if not fallbacks:
        return _failed(game, name, "no fallback within "
                       f"{world['missed_broadcasts']} missed broadcasts")
    observed = list(fallbacks)
    later_ticks = _between(_of_kind(log, "beacon_tick", beacon=area), end)
    if later_ticks:
        recovered = _between(accepted, end)
        observed += recovered
        if not recovered:
            return _failed(game, name, "no login succeeded after the jam ended",
                           observed)
    return _passed(game, name, "full jam triggered fallback", observed)


def _judge_forge(log: Sequence[Event], attack: Dict[str, Any]) -> GameOutcome:
    game, name = attack["kind"], attack["name"]
    delivered = _of_kind(log, "attack_delivered", attack=name)
    replies = _of_kind(log, "login_sent", trigger=name)
    results = _verifications(log, [e["login_id"] for e in replies])
    observed = delivered + replies + results
    if not delivered:
        return _failed(game, name, "forged broadcast was never sent")
    if not replies:
        return _failed(game, name, "no honest user answered the forgery",
                       observed)
    if all(e.get("reason") == TOKEN_MISMATCH for e in results):
        return _passed(game, name, "logins built on a forged token rejected",
                       observed)
    return _failed(game, name, "a login built on a forged token was accepted",
                   observed)


_JUDGES = {
    "replay": _judge_recorded,
    "wormhole": _judge_recorded,
    "dos_jam": _judge_jam,
    "forge": _judge_forge,
}


def judge(log: Sequence[Event]) -> List[GameOutcome]:
    outcomes = [_JUDGES[attack["kind"]](log, attack)
                for attack in _world(log)["attacks"]]
    for outcome in outcomes:
        logger.info("%s %s: %s (%s)", outcome.game, outcome.name,
                    outcome.verdict, outcome.reason)
    return outcomes


def append_verdicts(log: List[Event],
                    outcomes: Sequence[GameOutcome]) -> List[Event]:
    end = log[-1]["t_us"] if log else 0
    log.extend(outcome.to_event(end) for outcome in outcomes)
    return log


def exit_code(log: Sequence[Event]) -> int:
    for event in log:
        if event["kind"] == "invariant_violation":
            return 1
        if event["kind"] == "verdict" and event["verdict"] != PASS:
            return 1
    return 0


# ----------------------------------------------------------------------
# games

def _with_attacks(scenario: Scenario, attacks: List[Dict[str, Any]]) -> Scenario:
    data = scenario.model_dump(by_alias=True, exclude_none=True)
    data["attacks"] = attacks
    data["token"]["skew_periods"] = 0
    return parse_scenario(data)


def _combine(game: str, log: List[Event],
             outcomes: Sequence[GameOutcome]) -> GameOutcome:
    failed = [o for o in outcomes if not o.passed]
    reason = "; ".join(f"{o.name}: {o.reason}" for o in (failed or outcomes))
    extension = next((o.extension for o in outcomes if o.extension), None)
    return GameOutcome(game, game, FAIL if failed else PASS, reason,
                       tuple(log), tuple(outcomes), extension)


def play(scenario: Scenario, rng_seed: int = 0,
         authority: Optional[Authority] = None,
         enrolled: Optional[Dict[str, Enrollment]] = None
         ) -> Tuple[List[Event], List[GameOutcome]]:
    """ Run a scenario and judge every attack it scripts. """
    world = WorldState.build(scenario, rng_seed, authority, enrolled)
    log = run(world, scenario.end_ms(), rng_seed)
    outcomes = judge(log)
    append_verdicts(log, outcomes)
    return log, outcomes


def _co_located(scenario: Scenario, area: str) -> bool:
    beacon = scenario.beacon(area)
    centre = Point2D(beacon.x_m, beacon.y_m)
    return any(centre.distance(Point2D(w.x_m, w.y_m)) <= beacon.range_m
               for user in scenario.users for w in user.trace)


def run_replay_game(scenario: Scenario, delta_ms: float, rng_seed: int = 0,
                    beacon: Optional[str] = None,
                    authority: Optional[Authority] = None,
                    enrolled: Optional[Dict[str, Enrollment]] = None
                    ) -> GameOutcome:
    """ Record at one beacon and replay ``delta_ms`` past the period's end.

    Both the broadcast and the user's login reply are replayed.  A
    negative delta replays inside the recorded period as a control.
    """
    area = beacon or scenario.beacons[0].id
    if not _co_located(scenario, area):
        raise ScenarioError(f"no honest user is ever within range of {area}")
    attacks = [
        {"kind": "replay", "name": "replay-broadcast", "record_at": area,
         "target": "broadcast", "delta_ms": delta_ms},
        {"kind": "replay", "name": "replay-login", "record_at": area,
         "target": "login_reply", "delta_ms": delta_ms},
    ]
    log, outcomes = play(_with_attacks(scenario, attacks), rng_seed,
                         authority, enrolled)
    return _combine("replay", log, outcomes)


def run_wormhole_game(scenario: Scenario, from_beacon: Optional[str] = None,
                      to_beacon: Optional[str] = None,
                      tunnel_delay_ms: float = 0, rng_seed: int = 0,
                      authority: Optional[Authority] = None,
                      enrolled: Optional[Dict[str, Enrollment]] = None
                      ) -> GameOutcome:
    if to_beacon is None and len(scenario.beacons) < 2:
        raise ScenarioError("a wormhole needs two beacons")
    source = from_beacon or scenario.beacons[0].id
    sink = to_beacon or scenario.beacons[1].id
    if source != sink:
        l, p = scenario.beacon(source), scenario.beacon(sink)
        gap = Point2D(l.x_m, l.y_m).distance(Point2D(p.x_m, p.y_m))
        if gap <= l.range_m + p.range_m:
            raise ScenarioError(f"ranges of {source} and {sink} overlap")
    attacks = [
        {"kind": "wormhole", "name": "tunnel-broadcast", "from": source,
         "to": sink, "target": "broadcast", "tunnel_delay_ms": tunnel_delay_ms},
        {"kind": "wormhole", "name": "tunnel-login", "from": source,
         "to": sink, "target": "login_reply",
         "tunnel_delay_ms": tunnel_delay_ms},
    ]
    log, outcomes = play(_with_attacks(scenario, attacks), rng_seed,
                         authority, enrolled)
    return _combine("wormhole", log, outcomes)


def run_dos_game(scenario: Scenario, area: Optional[str] = None,
                 partial: Optional[Tuple[float, float]] = None,
                 full: Optional[Tuple[float, float]] = None,
                 partial_channels: Sequence[int] = (0, 1),
                 rng_seed: int = 0,
                 authority: Optional[Authority] = None,
                 enrolled: Optional[Dict[str, Enrollment]] = None
                 ) -> GameOutcome:
    """ A partial jam, then a full jam, then recovery, in one run. """
    area = area or scenario.beacons[0].id
    third = scenario.end_ms() / 3
    partial = partial or (0.0, third)
    full = full or (third, 2 * third)
    attacks = [
        {"kind": "dos_jam", "name": "jam-partial", "area": area,
         "channels_jammed": list(partial_channels),
         "from_ms": partial[0], "to_ms": partial[1]},
        {"kind": "dos_jam", "name": "jam-full", "area": area,
         "channels_jammed": [0, 1, 2], "from_ms": full[0], "to_ms": full[1]},
    ]
    log, outcomes = play(_with_attacks(scenario, attacks), rng_seed,
                         authority, enrolled)
    return _combine("dos_jam", log, outcomes)


def run_forge_game(scenario: Scenario, area: Optional[str] = None,
                   at_ms: Optional[float] = None, rng_seed: int = 0,
                   authority: Optional[Authority] = None,
                   enrolled: Optional[Dict[str, Enrollment]] = None
                   ) -> GameOutcome:
    area = area or scenario.beacons[0].id
    at_ms = scenario.end_ms() / 2 if at_ms is None else at_ms
    attacks = [{"kind": "forge", "name": "forge", "area": area,
                "at_ms": at_ms}]
    log, outcomes = play(_with_attacks(scenario, attacks), rng_seed,
                         authority, enrolled)
    return _combine("forge", log, outcomes)


GAMES = {
    "replay": run_replay_game,
    "wormhole": run_wormhole_game,
    "dos": run_dos_game,
    "forge": run_forge_game,
}
