""" Deterministic discrete-event simulation of beacons, users and attackers.

Time is integer microseconds.  Beacon ticks are scheduled at exact
multiples of each beacon's interval, so the default 100 TU interval
ticks at 0, 102400, 204800 ... and never drifts.

The observable output is a list of JSON-ready event dicts; verdicts and
invariant checks are computed from that list alone.
"""
import hashlib
import heapq
import itertools
import json
import logging
import math
import uuid
from dataclasses import dataclass
from dataclasses import field

from typing import Any
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

from loc_auth import abe
from loc_auth.errors import ProtocolError
from loc_auth.errors import ScenarioError
from loc_auth.errors import TravelRejected
from loc_auth.protocol import PAYLOAD
from loc_auth.protocol import Authenticated
from loc_auth.protocol import BroadcastMessage
from loc_auth.protocol import ClientBundle
from loc_auth.protocol import LoginMessage
from loc_auth.protocol import Registry
from loc_auth.protocol import UserRecord
from loc_auth.protocol import VerificationService
from loc_auth.protocol import broadcast_step
from loc_auth.protocol import client_handle_broadcast
from loc_auth.protocol import password_verifier
from loc_auth.protocol import register_backend
from loc_auth.protocol import register_user
from loc_auth.scenario import CHANNELS
from loc_auth.scenario import DosJamAttack
from loc_auth.scenario import ForgeAttack
from loc_auth.scenario import ReplayAttack
from loc_auth.scenario import Scenario
from loc_auth.scenario import WormholeAttack
from loc_auth.scenario import beacon_uuid
from loc_auth.sessions import AdjacencyGraph
from loc_auth.sessions import Origin
from loc_auth.sessions import SessionStore
from loc_auth.tokens import SECRET_BYTES
from loc_auth.tokens import ManualClock
from loc_auth.tokens import current_period
from loc_auth.tokens import period_end_us

logger = logging.getLogger(__name__)

DIGEST_BYTES = 8

Event = Dict[str, Any]


@dataclass(frozen=True)
class Point2D:
    x_m: float
    y_m: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x_m) and math.isfinite(self.y_m)):
            raise ValueError(f"non-finite position ({self.x_m}, {self.y_m})")

    def distance(self, other: "Point2D") -> float:
        return math.hypot(self.x_m - other.x_m, self.y_m - other.y_m)


@dataclass(frozen=True)
class BeaconNode:
    name: str
    id: uuid.UUID
    pos: Point2D
    range_m: float = 10.0
    interval_ms: float = 102.4
    policy: str = ""

    def __post_init__(self) -> None:
        if self.range_m <= 0:
            raise ValueError("beacon range must be positive")
        if self.interval_ms <= 0:
            raise ValueError("beacon interval must be positive")

    @property
    def interval_us(self) -> int:
        return round(self.interval_ms * 1000)


@dataclass
class MobileNode:
    username: str
    bundle: ClientBundle
    password: str
    trace: List[Tuple[float, Point2D]]
    verifier: Optional[bytes] = None
    fallback: bool = False
    missed: Dict[str, int] = field(default_factory=dict)


@dataclass
class AttackerNode:
    """ Holds nothing but recorded message bytes. """
    attack: str
    recorded: List[bytes] = field(default_factory=list)


def position_at(node: Union[MobileNode, Sequence[Tuple[float, Point2D]]],
                t_ms: float) -> Point2D:
    trace = node.trace if isinstance(node, MobileNode) else node
    if not trace:
        raise ValueError("empty trace")
    if t_ms <= trace[0][0]:
        return trace[0][1]
    for (t0, p0), (t1, p1) in zip(trace, trace[1:]):
        if t0 <= t_ms <= t1:
            f = (t_ms - t0) / (t1 - t0)
            return Point2D(p0.x_m + f * (p1.x_m - p0.x_m),
                           p0.y_m + f * (p1.y_m - p0.y_m))
    return trace[-1][1]


def in_range(beacon: BeaconNode, p: Point2D) -> bool:
    return beacon.pos.distance(p) <= beacon.range_m


# ----------------------------------------------------------------------
# events

@dataclass(frozen=True)
class BeaconTick:
    beacon: str
    n: int


@dataclass(frozen=True)
class Deliver:
    msg: bytes
    to: str
    area: str
    sender: str
    trigger: str
    login_id: Optional[int] = None


@dataclass(frozen=True)
class AttackAction:
    attack: str
    action: str


@dataclass(frozen=True)
class SessionSweep:
    pass


SimEvent = Union[BeaconTick, Deliver, AttackAction, SessionSweep]

SERVICE = "service"


class EventQueue:
    """ Min-queue on (time, insertion sequence). """

    def __init__(self) -> None:
        self._heap: List[Tuple[int, int, SimEvent]] = []
        self._seq = itertools.count()

    def push(self, t_us: int, event: SimEvent) -> None:
        heapq.heappush(self._heap, (t_us, next(self._seq), event))

    def pop(self) -> Tuple[int, SimEvent]:
        t_us, _, event = heapq.heappop(self._heap)
        return t_us, event

    def __len__(self) -> int:
        return len(self._heap)


# ----------------------------------------------------------------------
# world

@dataclass(frozen=True)
class Authority:
    params: abe.PublicParams
    msk: abe.MasterKey
    master_secret: bytes

    @classmethod
    def generate(cls, rng_seed: Optional[int] = None) -> "Authority":
        params, msk = abe.setup(rng_seed=rng_seed)
        rng = abe.make_rng(None if rng_seed is None else rng_seed + 1)
        return cls(params, msk, abe.random_bytes(rng, SECRET_BYTES))


Enrollment = Tuple[UserRecord, ClientBundle]


@dataclass
class WorldState:
    scenario: Scenario
    authority: Authority
    registry: Registry
    beacons: Dict[str, BeaconNode]
    users: Dict[str, MobileNode]
    graph: AdjacencyGraph

    @classmethod
    def build(cls, scenario: Scenario, rng_seed: int = 0,
              authority: Optional[Authority] = None,
              enrolled: Optional[Dict[str, Enrollment]] = None) -> "WorldState":
        """ Register every scenario user, reusing existing enrollments. """
        authority = authority or Authority.generate(rng_seed)
        enrolled = enrolled or {}
        beacons = {}
        for config in scenario.beacons:
            beacons[config.id] = BeaconNode(
                config.id, beacon_uuid(config.id),
                Point2D(config.x_m, config.y_m), config.range_m,
                config.interval_ms, config.policy)
        graph = AdjacencyGraph((beacons[a].id, beacons[b].id)
                               for a, b in scenario.adjacency)

        registry = Registry()
        rng = abe.make_rng(rng_seed)
        users = {}
        for config in scenario.users:
            if config.username in enrolled:
                record, bundle = enrolled[config.username]
                registry.add(record)
            else:
                _, bundle = register_user(
                    registry, authority.params, authority.msk,
                    config.username, config.password, config.attrs, rng)
            users[config.username] = MobileNode(
                config.username, bundle, config.password,
                [(w.t_ms, Point2D(w.x_m, w.y_m)) for w in config.trace])
        return cls(scenario, authority, registry, beacons, users, graph)

    def beacon_by_id(self, beacon_id: uuid.UUID) -> Optional[BeaconNode]:
        for beacon in self.beacons.values():
            if beacon.id == beacon_id:
                return beacon
        return None


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:2 * DIGEST_BYTES]


def _attack_time_us(t_ms: float) -> int:
    return round(t_ms * 1000)


class Simulation:
    """ One run of a world; single-threaded, driven by the event queue. """

    def __init__(self, world: WorldState, rng_seed: int) -> None:
        self.world = world
        self.scenario = world.scenario
        self.rng = abe.make_rng(rng_seed)
        self.clock = ManualClock(0)
        self.period_ms = self.scenario.token.period_ms
        self.backend = register_backend(
            self.scenario.beacons[0].policy, world.authority.master_secret,
            world.authority.params)
        for beacon in world.beacons.values():
            self.backend.bind(beacon.id, beacon.policy)
        self.service = VerificationService(
            world.registry, world.authority.master_secret, self.clock,
            self.period_ms, self.scenario.token.skew_periods)
        self.sessions = SessionStore(self.scenario.session.ttl_ms,
                                     self.scenario.session.sliding)
        self.queue = EventQueue()
        self.log: List[Event] = []
        self.attacks = {attack.name: attack for attack in self.scenario.attacks}
        self.attackers = {name: AttackerNode(name) for name, attack
                          in self.attacks.items()
                          if not isinstance(attack, DosJamAttack)}
        self._login_ids = itertools.count(1)
        self._factors: Dict[int, str] = {}
        for user in world.users.values():
            user.verifier, user.fallback, user.missed = None, False, {}

    # -- bookkeeping -----------------------------------------------------

    def emit(self, kind: str, **fields: Any) -> Event:
        event = {"t_us": self.clock.now_us, "kind": kind}
        event.update(fields)
        self.log.append(event)
        return event

    def _name(self, beacon_id: Optional[uuid.UUID]) -> Optional[str]:
        if beacon_id is None:
            return None
        beacon = self.world.beacon_by_id(beacon_id)
        return beacon.name if beacon else str(beacon_id)

    def _users_near(self, area: BeaconNode) -> List[MobileNode]:
        t_ms = self.clock.now_ms
        return [user for user in self.world.users.values()
                if in_range(area, position_at(user, t_ms))]

    def _jammed(self, area: str) -> List[int]:
        now = self.clock.now_us
        channels = set()
        for attack in self.attacks.values():
            if (isinstance(attack, DosJamAttack) and attack.area == area
                    and _attack_time_us(attack.from_ms) <= now
                    < _attack_time_us(attack.to_ms)):
                channels.update(attack.channels_jammed)
        return sorted(channels)

    def _world_event(self, until_us: int) -> None:
        beacons = {
            name: {"id": str(b.id), "x_m": b.pos.x_m, "y_m": b.pos.y_m,
                   "range_m": b.range_m, "interval_us": b.interval_us,
                   "policy": b.policy}
            for name, b in self.world.beacons.items()}
        self.emit("world", beacons=beacons,
                  adjacency=sorted(sorted(pair)
                                   for pair in self.scenario.adjacency),
                  period_us=self.period_ms * 1000, until_us=until_us,
                  users=sorted(self.world.users),
                  missed_broadcasts=self.scenario.missed_broadcasts,
                  attacks=[attack.model_dump(by_alias=True)
                           for attack in self.scenario.attacks])

    # -- main loop -------------------------------------------------------

    def run(self, until_us: int) -> List[Event]:
        self._world_event(until_us)
        for name in self.world.beacons:
            self.queue.push(0, BeaconTick(name, 0))
        for name, attack in self.attacks.items():
            if isinstance(attack, DosJamAttack):
                self.queue.push(_attack_time_us(attack.from_ms),
                                AttackAction(name, "jam_start"))
                self.queue.push(_attack_time_us(attack.to_ms),
                                AttackAction(name, "jam_end"))
            elif isinstance(attack, ForgeAttack):
                self.queue.push(_attack_time_us(attack.at_ms),
                                AttackAction(name, "forge"))
        sweep_us = self.scenario.session.sweep_ms * 1000
        self.queue.push(sweep_us, SessionSweep())

        while self.queue:
            t_us, event = self.queue.pop()
            if t_us > until_us:
                break
            self.clock.advance_to(t_us)
            if isinstance(event, BeaconTick):
                self.on_tick(event, until_us)
            elif isinstance(event, Deliver):
                self.on_deliver(event)
            elif isinstance(event, AttackAction):
                self.on_attack(event)
            else:
                self.on_sweep(sweep_us)
        return self.log

    def on_sweep(self, sweep_us: int) -> None:
        for session in self.sessions.sweep_expired(self.clock):
            self.emit("session_expired", user=session.username,
                      beacon=self._name(session.beacon_id))
        self.queue.push(self.clock.now_us + sweep_us, SessionSweep())

    def on_tick(self, tick: BeaconTick, until_us: int) -> None:
        beacon = self.world.beacons[tick.beacon]
        nxt = (tick.n + 1) * beacon.interval_us
        if nxt <= until_us:
            self.queue.push(nxt, BeaconTick(tick.beacon, tick.n + 1))

        period = current_period(self.clock, self.period_ms)
        self.emit("beacon_tick", beacon=beacon.name, n=tick.n, period=period)

        jammed = self._jammed(beacon.name)
        free = [c for c in CHANNELS if c not in jammed]
        receivers = self._users_near(beacon)
        recorders = [name for name, attack in self.attacks.items()
                     if self._wants_broadcast(attack, beacon.name)]

        for user in receivers:
            self._count_miss(user, beacon, delivered=bool(free))
        if not free:
            if receivers or recorders:
                self.emit("broadcast_jammed", beacon=beacon.name, n=tick.n,
                          channels=jammed)
            return
        if not receivers and not recorders:
            return

        msg = broadcast_step(beacon.id, self.backend, self.clock, self.rng,
                             self.period_ms).to_bytes()
        channel = free[tick.n % len(free)]
        self.emit("broadcast", beacon=beacon.name, n=tick.n, period=period,
                  channel=channel, digest=digest(msg))
        for name in recorders:
            self._record(name, msg, period)
        for user in receivers:
            self.queue.push(self.clock.now_us,
                            Deliver(msg, user.username, beacon.name,
                                    beacon.name, "beacon"))

    def _count_miss(self, user: MobileNode, beacon: BeaconNode,
                    delivered: bool) -> None:
        for name in list(user.missed):
            if name != beacon.name and not in_range(
                    self.world.beacons[name],
                    position_at(user, self.clock.now_ms)):
                del user.missed[name]
        if delivered:
            user.missed[beacon.name] = 0
            return
        missed = user.missed.get(beacon.name, 0) + 1
        user.missed[beacon.name] = missed
        if missed == self.scenario.missed_broadcasts:
            user.fallback = True
            self.emit("fallback_required", user=user.username,
                      beacon=beacon.name, missed=missed)

    # -- delivery ----------------------------------------------------------

    def on_deliver(self, ev: Deliver) -> None:
        if ev.to == SERVICE:
            self.on_login(ev)
        else:
            self.on_broadcast(ev)

    def on_broadcast(self, ev: Deliver) -> None:
        user = self.world.users[ev.to]
        area = self.world.beacons[ev.area]
        session = self.sessions.lookup(user.username, self.clock)
        factor = "location" if session and not user.fallback else "password"
        if factor == "password":
            user.verifier = password_verifier(user.password, user.bundle.salt)

        login = client_handle_broadcast(
            ev.msg, user.bundle, self.world.authority.params, self.clock,
            self.rng, verifier=user.verifier, period_ms=self.period_ms)
        if login is None:
            self.emit("no_action", user=user.username, beacon=area.name,
                      trigger=ev.trigger)
            return

        pos = position_at(user, self.clock.now_ms)
        if not in_range(area, pos):
            return
        login_id = next(self._login_ids)
        self._factors[login_id] = factor
        raw = login.to_bytes()
        self.emit("login_sent", user=user.username, beacon=area.name,
                  header_beacon=self._name(login.beacon_id),
                  period=login.period, login_id=login_id, factor=factor,
                  trigger=ev.trigger, sender="user", x_m=pos.x_m, y_m=pos.y_m,
                  digest=digest(raw))
        self.queue.push(self.clock.now_us,
                        Deliver(raw, SERVICE, area.name, "user", ev.trigger,
                                login_id))
        if ev.trigger == "beacon":
            for name, attack in self.attacks.items():
                if self._wants_login(attack, area.name):
                    self._record(name, raw, login.period, login_id)

    def on_login(self, ev: Deliver) -> None:
        area = self.world.beacons[ev.area]
        result = self.service.verify(ev.msg, receiving_beacon=area.id)
        factor = self._factors.pop(ev.login_id, None)
        common = {"beacon": area.name, "login_id": ev.login_id,
                  "sender": ev.sender, "trigger": ev.trigger,
                  "period": result.period}
        if not isinstance(result, Authenticated):
            self.emit("rejected", reason=result.reason.value, **common)
            return
        self.emit("authenticated", user=result.username, **common)
        if ev.sender != "user":
            return
        user = self.world.users[result.username]
        if factor == "password":
            user.fallback = False
            session = self.sessions.establish(result, self.clock)
            self.emit("session_established", user=result.username,
                      beacon=area.name, origin=session.origin.value,
                      expires_us=session.expires_at_us)
            return
        session = self.sessions.lookup(result.username, self.clock)
        if session is None:
            self.emit("travel_rejected", user=result.username, to=area.name,
                      reason="SessionExpired")
            return
        try:
            moved = self.sessions.travel(session, result, self.world.graph,
                                         self.clock)
        except TravelRejected as e:
            self.sessions.revoke(result.username)
            self.emit("travel_rejected", user=result.username,
                      **{"from": self._name(session.beacon_id)}, to=area.name,
                      reason=e.reason.value)
            self.emit("session_revoked", user=result.username,
                      beacon=self._name(session.beacon_id))
            return
        if moved.beacon_id == session.beacon_id:
            self.emit("session_refreshed", user=result.username,
                      beacon=area.name, expires_us=moved.expires_at_us)
        else:
            self.emit("session_traveled", user=result.username,
                      **{"from": self._name(session.beacon_id)}, to=area.name,
                      origin=Origin.TRAVELED.value,
                      expires_us=moved.expires_at_us)

    # -- attacks -------------------------------------------------------------

    def _wants_broadcast(self, attack: Any, beacon: str) -> bool:
        if isinstance(attack, ReplayAttack):
            area, target = attack.record_at, attack.target
        elif isinstance(attack, WormholeAttack):
            area, target = attack.from_beacon, attack.target
        else:
            return False
        return (target == "broadcast" and area == beacon
                and not self.attackers[attack.name].recorded
                and self.clock.now_us >= _attack_time_us(attack.record_after_ms))

    def _wants_login(self, attack: Any, beacon: str) -> bool:
        if isinstance(attack, ReplayAttack):
            area, target = attack.record_at, attack.target
        elif isinstance(attack, WormholeAttack):
            area, target = attack.from_beacon, attack.target
        else:
            return False
        return (target == "login_reply" and area == beacon
                and not self.attackers[attack.name].recorded
                and self.clock.now_us >= _attack_time_us(attack.record_after_ms))

    def _record(self, name: str, msg: bytes, period: int,
                login_id: Optional[int] = None) -> None:
        attack = self.attacks[name]
        self.attackers[name].recorded.append(msg)
        self.emit("attacker_recorded", attack=name, target=attack.target,
                  period=period, digest=digest(msg), login_id=login_id)
        now = self.clock.now_us
        if isinstance(attack, ReplayAttack):
            if attack.delta_ms is not None:
                at = (period_end_us(period, self.period_ms)
                      + _attack_time_us(attack.delta_ms))
            else:
                at = _attack_time_us(attack.replay_at_ms)
        else:
            at = now + _attack_time_us(attack.tunnel_delay_ms)
        self.queue.push(max(at, now), AttackAction(name, "deliver"))

    def on_attack(self, action: AttackAction) -> None:
        attack = self.attacks[action.attack]
        if action.action == "jam_start":
            self.emit("jam_started", attack=attack.name, beacon=attack.area,
                      channels=attack.channels_jammed)
        elif action.action == "jam_end":
            self.emit("jam_ended", attack=attack.name, beacon=attack.area)
        elif action.action == "forge":
            self._forge(attack)
        else:
            self._deliver_recorded(attack)

    def _deliver_recorded(self, attack: Union[ReplayAttack,
                                              WormholeAttack]) -> None:
        if isinstance(attack, ReplayAttack):
            area = self.world.beacons[attack.record_at]
        else:
            area = self.world.beacons[attack.to_beacon]
        msg = self.attackers[attack.name].recorded[-1]
        if attack.target == "broadcast":
            period = BroadcastMessage.from_bytes(msg).period
            self.emit("attack_delivered", attack=attack.name, beacon=area.name,
                      target=attack.target, period=period, digest=digest(msg))
            self._radiate(msg, area, attack.name)
            return
        period = LoginMessage.from_bytes(msg).period
        login_id = next(self._login_ids)
        self.emit("attack_delivered", attack=attack.name, beacon=area.name,
                  target=attack.target, period=period, digest=digest(msg),
                  login_id=login_id)
        self.queue.push(self.clock.now_us,
                        Deliver(msg, SERVICE, area.name, "attacker",
                                attack.name, login_id))

    def _forge(self, attack: ForgeAttack) -> None:
        """ Public parameters and a policy are all a forger can use. """
        area = self.world.beacons[attack.area]
        period = current_period(self.clock, self.period_ms)
        fake = abe.random_bytes(self.rng, 16)
        payload = PAYLOAD.pack(fake, area.id.bytes, period)
        ct = abe.encrypt(self.world.authority.params,
                         abe.parse_policy(area.policy), payload, self.rng)
        msg = BroadcastMessage(area.id, period, ct).to_bytes()
        self.emit("attack_delivered", attack=attack.name, beacon=area.name,
                  target="forged_broadcast", period=period, digest=digest(msg))
        self._radiate(msg, area, attack.name)

    def _radiate(self, msg: bytes, area: BeaconNode, trigger: str) -> None:
        for user in self._users_near(area):
            self.queue.push(self.clock.now_us,
                            Deliver(msg, user.username, area.name, "attacker",
                                    trigger))


def run(world: WorldState, until_ms: float, rng_seed: int = 0) -> List[Event]:
    until_us = round(until_ms * 1000)
    logger.info("running %d beacons, %d users, %d attacks until %d us",
                len(world.beacons), len(world.users),
                len(world.scenario.attacks), until_us)
    log = Simulation(world, rng_seed).run(until_us)
    log.extend(check_invariants(log))
    return log


# ----------------------------------------------------------------------
# log checks

def check_invariants(log: Sequence[Event]) -> List[Event]:
    """ Causality, geometry, travel edges and attacker logins. """
    world = next((e for e in log if e["kind"] == "world"), None)
    if world is None:
        raise ScenarioError("event log has no world record")
    beacons = world["beacons"]
    edges = {frozenset(pair) for pair in world["adjacency"]}
    end = log[-1]["t_us"] if log else 0
    sent: Dict[int, int] = {}
    violations = []

    def violation(t_us: int, rule: str, detail: str) -> None:
        violations.append({"t_us": end, "kind": "invariant_violation",
                           "at_us": t_us, "rule": rule, "detail": detail})

    for e in log:
        kind = e["kind"]
        if kind == "login_sent":
            sent[e["login_id"]] = e["t_us"]
            b = beacons[e["beacon"]]
            if math.hypot(e["x_m"] - b["x_m"], e["y_m"] - b["y_m"]) > b["range_m"]:
                violation(e["t_us"], "geometry",
                          f"login {e['login_id']} sent outside {e['beacon']}")
        elif kind == "attack_delivered" and e.get("login_id") is not None:
            sent[e["login_id"]] = e["t_us"]
        elif kind in ("authenticated", "rejected") and e["login_id"] is not None:
            if e["login_id"] not in sent or sent[e["login_id"]] > e["t_us"]:
                violation(e["t_us"], "causality",
                          f"login {e['login_id']} verified before it was sent")
            if kind == "authenticated" and e["sender"] != "user":
                violation(e["t_us"], "attacker_authenticated",
                          f"login {e['login_id']} from {e['sender']} accepted")
        elif kind == "session_traveled":
            if frozenset((e["from"], e["to"])) not in edges:
                violation(e["t_us"], "travel",
                          f"{e['user']} traveled {e['from']} -> {e['to']}")
    return violations


def dumps_log(log: Iterable[Event]) -> str:
    return "".join(json.dumps(e, sort_keys=True) + "\n" for e in log)


def write_log(log: Iterable[Event], path: str) -> None:
    with open(path, "w") as f:
        f.write(dumps_log(log))


def read_log(path: str) -> List[Event]:
    with open(path, "r") as f:
        try:
            return [json.loads(line) for line in f if line.strip()]
        except json.JSONDecodeError as e:
            raise ProtocolError(f"unreadable event log {path}: {e}")


def summarize(log: Sequence[Event]) -> Dict[str, Any]:
    rejections: Dict[str, int] = {}
    summary: Dict[str, Any] = {"logins_attempted": 0, "logins_succeeded": 0,
                               "travels": 0, "fallbacks": 0,
                               "rejections": rejections, "verdicts": {},
                               "violations": 0}
    for e in log:
        kind = e["kind"]
        if kind == "login_sent":
            summary["logins_attempted"] += 1
        elif kind == "authenticated":
            summary["logins_succeeded"] += 1
        elif kind == "rejected":
            rejections[e["reason"]] = rejections.get(e["reason"], 0) + 1
        elif kind == "session_traveled":
            summary["travels"] += 1
        elif kind == "fallback_required":
            summary["fallbacks"] += 1
        elif kind == "verdict":
            summary["verdicts"][e["attack"]] = e["verdict"]
        elif kind == "invariant_violation":
            summary["violations"] += 1
    return summary
