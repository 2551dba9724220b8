""" Scenario documents: beacons, users, traces and attack scripts. """
import json
import uuid

from identify import identify  # type: ignore
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import ValidationError
from pydantic import field_validator
from pydantic import model_validator
from typing import Annotated
from typing import List
from typing import Literal
from typing import Optional
from typing import Tuple
from typing import Union

from loc_auth.errors import ScenarioError
from loc_auth.sessions import DEFAULT_TTL_MS
from loc_auth.tokens import DEFAULT_PERIOD_MS

SCHEMA_VERSION = 1
DEFAULT_RANGE_M = 10.0
DEFAULT_INTERVAL_MS = 102.4
DEFAULT_SWEEP_MS = 1000
DEFAULT_MISSED_BROADCASTS = 3
CHANNELS = (0, 1, 2)

BEACON_NAMESPACE = uuid.UUID("0f6a0c3e-4c61-4e2d-9b1e-6c6f632d6175")


def beacon_uuid(ident: str) -> uuid.UUID:
    """ Beacon ids may be UUID strings or short names. """
    try:
        return uuid.UUID(ident)
    except ValueError:
        return uuid.uuid5(BEACON_NAMESPACE, ident)


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False,
                              populate_by_name=True)


class TokenConfig(_Model):
    period_ms: int = Field(DEFAULT_PERIOD_MS, gt=0)
    skew_periods: int = Field(0, ge=0, le=1)


class SessionConfig(_Model):
    ttl_ms: int = Field(DEFAULT_TTL_MS, gt=0)
    sliding: bool = True
    sweep_ms: int = Field(DEFAULT_SWEEP_MS, gt=0)


class BeaconConfig(_Model):
    id: str = Field(min_length=1)
    x_m: float
    y_m: float
    range_m: float = Field(DEFAULT_RANGE_M, gt=0)
    interval_ms: float = Field(DEFAULT_INTERVAL_MS, gt=0)
    policy: str = Field(min_length=1)


class Waypoint(_Model):
    t_ms: float = Field(ge=0)
    x_m: float
    y_m: float


class UserConfig(_Model):
    username: str = Field(min_length=1)
    password: str
    attrs: List[str] = Field(min_length=1)
    trace: List[Waypoint] = Field(min_length=1)

    @field_validator("trace")
    @classmethod
    def _increasing(cls, trace: List[Waypoint]) -> List[Waypoint]:
        for before, after in zip(trace, trace[1:]):
            if after.t_ms <= before.t_ms:
                raise ValueError("waypoint times must be strictly increasing")
        return trace


class ReplayAttack(_Model):
    kind: Literal["replay"]
    name: Optional[str] = None
    record_at: str
    target: Literal["broadcast", "login_reply"] = "broadcast"
    record_after_ms: float = Field(0, ge=0)
    replay_at_ms: Optional[float] = None
    delta_ms: Optional[float] = None

    @model_validator(mode="after")
    def _one_replay_time(self) -> "ReplayAttack":
        if (self.replay_at_ms is None) == (self.delta_ms is None):
            raise ValueError("give exactly one of replay_at_ms or delta_ms")
        if self.delta_ms == 0:
            raise ValueError("delta_ms must be non-zero")
        return self


class WormholeAttack(_Model):
    kind: Literal["wormhole"]
    name: Optional[str] = None
    from_beacon: str = Field(alias="from")
    to_beacon: str = Field(alias="to")
    target: Literal["broadcast", "login_reply"] = "broadcast"
    record_after_ms: float = Field(0, ge=0)
    tunnel_delay_ms: float = Field(0, ge=0)


class DosJamAttack(_Model):
    kind: Literal["dos_jam"]
    name: Optional[str] = None
    area: str
    channels_jammed: List[int] = Field(min_length=1)
    from_ms: float = Field(ge=0)
    to_ms: float

    @field_validator("channels_jammed")
    @classmethod
    def _known_channels(cls, channels: List[int]) -> List[int]:
        if len(set(channels)) != len(channels) or not set(channels) <= set(CHANNELS):
            raise ValueError(f"channels must be distinct values of {CHANNELS}")
        return sorted(channels)

    @model_validator(mode="after")
    def _ordered(self) -> "DosJamAttack":
        if self.to_ms <= self.from_ms:
            raise ValueError("jam must end after it starts")
        return self


class ForgeAttack(_Model):
    kind: Literal["forge"]
    name: Optional[str] = None
    area: str
    at_ms: float = Field(ge=0)


Attack = Annotated[Union[ReplayAttack, WormholeAttack, DosJamAttack, ForgeAttack],
                   Field(discriminator="kind")]


class Scenario(_Model):
    schema_version: Literal[1] = Field(alias="schema")
    until_ms: Optional[float] = Field(None, gt=0)
    token: TokenConfig = TokenConfig()
    session: SessionConfig = SessionConfig()
    beacons: List[BeaconConfig] = Field(min_length=1)
    adjacency: List[Tuple[str, str]] = []
    users: List[UserConfig] = []
    attacks: List[Attack] = []
    missed_broadcasts: int = Field(DEFAULT_MISSED_BROADCASTS, ge=1)

    @model_validator(mode="after")
    def _references(self) -> "Scenario":
        ids = [beacon.id for beacon in self.beacons]
        if len(set(ids)) != len(ids):
            raise ValueError("beacon ids must be unique")
        names = [user.username for user in self.users]
        if len(set(names)) != len(names):
            raise ValueError("usernames must be unique")
        for a, b in self.adjacency:
            for ref in (a, b):
                if ref not in ids:
                    raise ValueError(f"adjacency names unknown beacon {ref!r}")
            if a == b:
                raise ValueError(f"adjacency self-loop on {a!r}")
        for index, attack in enumerate(self.attacks):
            if attack.name is None:
                attack.name = f"{attack.kind}-{index}"
            for ref in _attack_refs(attack):
                if ref not in ids:
                    raise ValueError(f"attack {attack.name} names unknown "
                                     f"beacon {ref!r}")
        attack_names = [attack.name for attack in self.attacks]
        if len(set(attack_names)) != len(attack_names):
            raise ValueError("attack names must be unique")
        return self

    def end_ms(self) -> float:
        if self.until_ms is not None:
            return self.until_ms
        last = max((user.trace[-1].t_ms for user in self.users), default=0.0)
        return last + self.token.period_ms

    def beacon(self, ident: str) -> BeaconConfig:
        for beacon in self.beacons:
            if beacon.id == ident:
                return beacon
        raise ScenarioError(f"unknown beacon {ident!r}")

    def with_overrides(self, period_ms: Optional[int] = None,
                       ttl_ms: Optional[int] = None) -> "Scenario":
        """ Command-line overrides, validated like the file itself. """
        data = self.model_dump(by_alias=True)
        if period_ms is not None:
            data["token"]["period_ms"] = period_ms
        if ttl_ms is not None:
            data["session"]["ttl_ms"] = ttl_ms
        return parse_scenario(data)


def _attack_refs(attack: Union[ReplayAttack, WormholeAttack, DosJamAttack,
                               ForgeAttack]) -> List[str]:
    if isinstance(attack, ReplayAttack):
        return [attack.record_at]
    if isinstance(attack, WormholeAttack):
        return [attack.from_beacon, attack.to_beacon]
    return [attack.area]


def parse_scenario(data: Union[str, bytes, dict]) -> Scenario:
    try:
        if isinstance(data, dict):
            return Scenario.model_validate(data)
        return Scenario.model_validate_json(data)
    except ValidationError as e:
        raise ScenarioError(f"scenario does not validate: {e}")


def load_scenario(path: str) -> Scenario:
    try:
        tags = identify.tags_from_path(path)
    except ValueError:
        raise ScenarioError(f"scenario file not found: {path}")
    if "json" not in tags:
        raise ScenarioError(f"scenario must be a JSON file: {path}")
    with open(path, "r") as f:
        text = f.read()
    try:
        json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"malformed JSON in {path}: {e}")
    return parse_scenario(text)


def dump_scenario(scenario: Scenario) -> str:
    return scenario.model_dump_json(by_alias=True, exclude_none=True, indent=2)

