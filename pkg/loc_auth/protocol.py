""" Beacon broadcast, client sign-on and service verification.

Wire layouts are documented in docs/wire-format.md.  All integers are
big-endian and both login layers use AES-256-GCM.
"""
import hashlib
import hmac
import logging
import struct
import threading
import uuid
from dataclasses import dataclass
from enum import Enum

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.kdf.pbkdf2 import PBKDF2HMAC

from typing import Dict
from typing import FrozenSet
from typing import Iterable
from typing import Iterator
from typing import Optional
from typing import Set
from typing import Tuple
from typing import Union

from loc_auth import abe
from loc_auth.errors import AbeError
from loc_auth.errors import DuplicateUser
from loc_auth.errors import IntegrityFailure
from loc_auth.errors import InvalidUsername
from loc_auth.errors import MalformedMessage
from loc_auth.errors import PolicyNotSatisfied
from loc_auth.errors import ProtocolError
from loc_auth.errors import UnknownBeacon
from loc_auth.tokens import DEFAULT_PERIOD_MS
from loc_auth.tokens import DEFAULT_SKEW_PERIODS
from loc_auth.tokens import SECRET_BYTES
from loc_auth.tokens import Clock
from loc_auth.tokens import accepted_periods
from loc_auth.tokens import current_period
from loc_auth.tokens import derive_c_token
from loc_auth.tokens import derive_session_token

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 0x01
TYPE_BROADCAST = 0x01
TYPE_LOGIN = 0x02
BUNDLE_VERSION = 0x01

PBKDF2_ITERATIONS = 100000
SALT_BYTES = 16
VERIFIER_BYTES = 32
WEAK_PASSWORD_LENGTH = 4
MAX_USERNAME_BYTES = 255
NONCE_BYTES = 12

HASH_SEPARATOR = b"\x1f"
OUTER_INFO = b"loc-auth/outer"
INNER_INFO = b"loc-auth/inner"

HEADER = struct.Struct(">BB16sQ")
PAYLOAD = struct.Struct(">16s16sQ")


def password_verifier(password: str, salt: bytes) -> bytes:
    kdf = PBKDF2HMAC(algorithm=hashes.SHA256(), length=VERIFIER_BYTES,
                     salt=salt, iterations=PBKDF2_ITERATIONS)
    return kdf.derive(password.encode("utf-8"))


def auth_hash(session_token: bytes, verifier: bytes) -> bytes:
    return hashlib.sha256(session_token + HASH_SEPARATOR + verifier).digest()


def layer_key(token: bytes, info: bytes) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=32, salt=None,
                info=info).derive(token)


def _header(msg_type: int, beacon_id: uuid.UUID, period: int,
            version: int = PROTOCOL_VERSION) -> bytes:
    return HEADER.pack(version, msg_type, beacon_id.bytes, period)


def _parse_header(data: bytes, msg_type: int) -> Tuple[int, uuid.UUID, int]:
    if len(data) < HEADER.size:
        raise MalformedMessage("message shorter than its header")
    version, kind, raw_id, period = HEADER.unpack_from(data)
    if version != PROTOCOL_VERSION:
        raise MalformedMessage(f"unsupported protocol version {version}")
    if kind != msg_type:
        raise MalformedMessage(f"expected message type {msg_type}, got {kind}")
    return version, uuid.UUID(bytes=raw_id), period


# ----------------------------------------------------------------------
# wire messages

@dataclass(frozen=True)
class BroadcastMessage:
    beacon_id: uuid.UUID
    period: int
    abe_ct: abe.AbeCiphertext
    version: int = PROTOCOL_VERSION

    def header(self) -> bytes:
        return _header(TYPE_BROADCAST, self.beacon_id, self.period, self.version)

    def to_bytes(self) -> bytes:
        return self.header() + self.abe_ct.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "BroadcastMessage":
        version, beacon_id, period = _parse_header(data, TYPE_BROADCAST)
        try:
            ct = abe.AbeCiphertext.from_bytes(data[HEADER.size:])
        except AbeError as e:
            raise MalformedMessage(f"bad broadcast ciphertext: {e}")
        return cls(beacon_id, period, ct, version)


@dataclass(frozen=True)
class LoginMessage:
    beacon_id: uuid.UUID
    period: int
    outer_nonce: bytes
    outer_ct: bytes
    version: int = PROTOCOL_VERSION

    def header(self) -> bytes:
        return _header(TYPE_LOGIN, self.beacon_id, self.period, self.version)

    def to_bytes(self) -> bytes:
        return self.header() + self.outer_nonce + self.outer_ct

    @classmethod
    def from_bytes(cls, data: bytes) -> "LoginMessage":
        version, beacon_id, period = _parse_header(data, TYPE_LOGIN)
        body = data[HEADER.size:]
        if len(body) < NONCE_BYTES + 16:
            raise MalformedMessage("login body too short")
        return cls(beacon_id, period, body[:NONCE_BYTES], body[NONCE_BYTES:],
                   version)


# ----------------------------------------------------------------------
# registration

@dataclass(frozen=True)
class UserRecord:
    username: str
    user_seed: bytes
    salt: bytes
    pwd_verifier: bytes
    attrs: FrozenSet[str]

    def __repr__(self) -> str:
        return f"UserRecord(username={self.username!r})"

    def to_dict(self) -> Dict[str, object]:
        return {
            "username": self.username,
            "user_seed": self.user_seed.hex(),
            "salt": self.salt.hex(),
            "pwd_verifier": self.pwd_verifier.hex(),
            "attrs": sorted(self.attrs),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "UserRecord":
        try:
            record = cls(str(data["username"]),
                         bytes.fromhex(data["user_seed"]),
                         bytes.fromhex(data["salt"]),
                         bytes.fromhex(data["pwd_verifier"]),
                         frozenset(data["attrs"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"bad user record: {e}")
        if (len(record.user_seed) != SECRET_BYTES
                or len(record.salt) != SALT_BYTES
                or len(record.pwd_verifier) != VERIFIER_BYTES):
            raise ProtocolError(f"bad key material for {record.username}")
        return record


@dataclass(frozen=True)
class ClientBundle:
    username: str
    usk: abe.UserSecretKey
    user_seed: bytes
    salt: bytes

    def __repr__(self) -> str:
        return f"ClientBundle(username={self.username!r})"

    def to_bytes(self) -> bytes:
        name = self.username.encode("utf-8")
        return (bytes([BUNDLE_VERSION]) + struct.pack(">H", len(name)) + name
                + self.user_seed + self.salt + self.usk.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "ClientBundle":
        if len(data) < 3 or data[0] != BUNDLE_VERSION:
            raise ProtocolError("unsupported client bundle")
        (length,) = struct.unpack_from(">H", data, 1)
        offset = 3 + length
        username = data[3:offset].decode("utf-8")
        seed = data[offset:offset + SECRET_BYTES]
        offset += SECRET_BYTES
        salt = data[offset:offset + SALT_BYTES]
        offset += SALT_BYTES
        if len(seed) != SECRET_BYTES or len(salt) != SALT_BYTES:
            raise ProtocolError("truncated client bundle")
        return cls(username, abe.UserSecretKey.from_bytes(data[offset:]),
                   seed, salt)


class Registry:
    """ Username database shared by registration and verification. """

    def __init__(self, records: Iterable[UserRecord] = ()) -> None:
        self._records: Dict[str, UserRecord] = {}
        for record in records:
            self.add(record)

    def add(self, record: UserRecord) -> None:
        if record.username in self._records:
            raise DuplicateUser(f"user {record.username!r} already registered")
        self._records[record.username] = record

    def get(self, username: str) -> Optional[UserRecord]:
        return self._records.get(username)

    def __contains__(self, username: object) -> bool:
        return username in self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[UserRecord]:
        return iter(sorted(self._records.values(), key=lambda r: r.username))


class BeaconPolicyConfig:
    """ Beacon to access-tree bindings; policies can be replaced at runtime. """

    def __init__(self, master_secret: bytes, params: abe.PublicParams,
                 policy_text: str, width: int = abe.DEFAULT_WIDTH) -> None:
        if len(master_secret) != SECRET_BYTES:
            raise ProtocolError("master secret must be 32 bytes")
        self.master_secret = master_secret
        self.params = params
        self.width = width
        self.policy_text = policy_text
        self.tree = abe.parse_policy(policy_text, width)
        self._bindings: Dict[uuid.UUID, Tuple[str, abe.AccessTree]] = {}
        self._lock = threading.Lock()

    def bind(self, beacon_id: uuid.UUID, policy_text: Optional[str] = None) -> None:
        if policy_text is None:
            entry = (self.policy_text, self.tree)
        else:
            entry = (policy_text, abe.parse_policy(policy_text, self.width))
        with self._lock:
            self._bindings[beacon_id] = entry

    def replace_policy(self, policy_text: str,
                       beacon_id: Optional[uuid.UUID] = None) -> abe.AccessTree:
        tree = abe.parse_policy(policy_text, self.width)
        with self._lock:
            if beacon_id is None:
                self.policy_text, self.tree = policy_text, tree
                targets = list(self._bindings)
            else:
                if beacon_id not in self._bindings:
                    raise UnknownBeacon(str(beacon_id))
                targets = [beacon_id]
            for target in targets:
                self._bindings[target] = (policy_text, tree)
        logger.info("policy replaced for %s: %s",
                    beacon_id or "all beacons", policy_text)
        return tree

    def policy_for(self, beacon_id: uuid.UUID) -> abe.AccessTree:
        with self._lock:
            entry = self._bindings.get(beacon_id)
        if entry is None:
            raise UnknownBeacon(f"no policy bound to beacon {beacon_id}")
        return entry[1]

    def policy_text_for(self, beacon_id: uuid.UUID) -> str:
        with self._lock:
            entry = self._bindings.get(beacon_id)
        if entry is None:
            raise UnknownBeacon(f"no policy bound to beacon {beacon_id}")
        return entry[0]

    @property
    def beacons(self) -> Tuple[uuid.UUID, ...]:
        with self._lock:
            return tuple(self._bindings)


def register_backend(policy_text: str, master_secret: bytes,
                     abe_params: abe.PublicParams,
                     beacon_ids: Iterable[uuid.UUID] = (),
                     width: int = abe.DEFAULT_WIDTH) -> BeaconPolicyConfig:
    if not policy_text.strip():
        raise abe.PolicySyntaxError("empty policy", 0)
    config = BeaconPolicyConfig(master_secret, abe_params, policy_text, width)
    for beacon_id in beacon_ids:
        config.bind(beacon_id)
    logger.info("backend registered with policy %s", config.tree)
    return config


def check_username(username: str) -> None:
    """ Usernames name bundle files, so path syntax is refused. """
    name = username.encode("utf-8")
    if not name or len(name) > MAX_USERNAME_BYTES:
        raise InvalidUsername("username must be 1..255 bytes of utf-8")
    if username in (".", "..") or any(c in username for c in "/\\\0"):
        raise InvalidUsername(f"username {username!r} is not a plain name")


def register_user(registry: Registry, params: abe.PublicParams,
                  msk: abe.MasterKey, username: str, password: str,
                  attrs: Iterable[str], rng: abe.Rng,
                  width: int = abe.DEFAULT_WIDTH
                  ) -> Tuple[UserRecord, ClientBundle]:
    check_username(username)
    if username in registry:
        raise DuplicateUser(f"user {username!r} already registered")
    if len(password) < WEAK_PASSWORD_LENGTH:
        logger.warning("weak password registered for %s", username)

    attributes = abe.expand_attributes(attrs, width)
    user_seed = abe.random_bytes(rng, SECRET_BYTES)
    salt = abe.random_bytes(rng, SALT_BYTES)
    record = UserRecord(username, user_seed, salt,
                        password_verifier(password, salt), attributes)
    usk = abe.keygen(msk, params, attributes, rng, width)
    registry.add(record)
    logger.info("registered %s with %d attributes", username, len(attributes))
    return record, ClientBundle(username, usk, user_seed, salt)


# ----------------------------------------------------------------------
# algorithm 1: beacon broadcast

def broadcast_step(beacon_id: uuid.UUID, backend: BeaconPolicyConfig,
                   clock: Clock, rng: abe.Rng,
                   period_ms: int = DEFAULT_PERIOD_MS) -> BroadcastMessage:
    tree = backend.policy_for(beacon_id)
    period = current_period(clock, period_ms)
    token = derive_session_token(backend.master_secret, beacon_id, period)
    payload = PAYLOAD.pack(token, beacon_id.bytes, period)
    ct = abe.encrypt(backend.params, tree, payload, rng)
    return BroadcastMessage(beacon_id, period, ct)


# ----------------------------------------------------------------------
# algorithm 2: client sign-on

def client_handle_broadcast(msg: Union[BroadcastMessage, bytes],
                            bundle: ClientBundle,
                            params: abe.PublicParams,
                            clock: Clock,
                            rng: abe.Rng,
                            password: Optional[str] = None,
                            verifier: Optional[bytes] = None,
                            period_ms: int = DEFAULT_PERIOD_MS
                            ) -> Optional[LoginMessage]:
    """ Answer a beacon broadcast, or return None (NoAction).

    Either the password or its stored verifier must be supplied; a
    traveling session reuses the verifier instead of asking again.
    """
    if password is None and verifier is None:
        raise ValueError("a password or a stored verifier is required")
    if isinstance(msg, bytes):
        try:
            msg = BroadcastMessage.from_bytes(msg)
        except ProtocolError as e:
            logger.debug("%s: unreadable broadcast: %s", bundle.username, e)
            return None

    try:
        payload = abe.decrypt(params, bundle.usk, msg.abe_ct)
    except PolicyNotSatisfied:
        logger.debug("%s: policy not satisfied", bundle.username)
        return None
    except (IntegrityFailure, AbeError) as e:
        logger.debug("%s: broadcast failed to open: %s", bundle.username, e)
        return None

    if len(payload) != PAYLOAD.size:
        logger.debug("%s: payload of %d bytes", bundle.username, len(payload))
        return None
    token, raw_id, period = PAYLOAD.unpack(payload)
    if raw_id != msg.beacon_id.bytes or period != msg.period:
        logger.debug("%s: header does not match payload binding",
                     bundle.username)
        return None

    if verifier is None:
        verifier = password_verifier(password or "", bundle.salt)
    c_token = derive_c_token(bundle.user_seed, current_period(clock, period_ms))
    name = bundle.username.encode("utf-8")

    inner_nonce = abe.random_bytes(rng, NONCE_BYTES)
    inner_ct = AESGCM(layer_key(c_token, INNER_INFO)).encrypt(
        inner_nonce, auth_hash(token, verifier), name)
    plaintext = struct.pack(">H", len(name)) + name + inner_nonce + inner_ct

    header = _header(TYPE_LOGIN, msg.beacon_id, msg.period)
    outer_nonce = abe.random_bytes(rng, NONCE_BYTES)
    outer_ct = AESGCM(layer_key(token, OUTER_INFO)).encrypt(
        outer_nonce, plaintext, header)
    return LoginMessage(msg.beacon_id, msg.period, outer_nonce, outer_ct)


# ----------------------------------------------------------------------
# algorithm 3: service verification

class RejectReason(Enum):
    UNKNOWN_USER = "UnknownUser"
    TOKEN_MISMATCH = "TokenMismatch"
    CTOKEN_MISMATCH = "CTokenMismatch"
    HASH_MISMATCH = "HashMismatch"
    REPLAYED_NONCE = "ReplayedNonce"
    MALFORMED_MESSAGE = "MalformedMessage"


@dataclass(frozen=True)
class Authenticated:
    username: str
    beacon_id: uuid.UUID
    period: int

    authenticated = True


@dataclass(frozen=True)
class Rejected:
    reason: RejectReason
    beacon_id: Optional[uuid.UUID]
    period: int

    authenticated = False


AuthResult = Union[Authenticated, Rejected]


class ReplayCache:
    """ Outer nonces seen per (beacon, period); old periods are pruned. """

    def __init__(self) -> None:
        self._seen: Set[Tuple[bytes, int, bytes]] = set()

    def __len__(self) -> int:
        return len(self._seen)

    def check_and_add(self, beacon_id: uuid.UUID, period: int, nonce: bytes,
                      oldest_period: int) -> bool:
        self._seen = {key for key in self._seen if key[1] >= oldest_period}
        key = (beacon_id.bytes, period, nonce)
        if key in self._seen:
            return False
        self._seen.add(key)
        return True


def _open_outer(msg: LoginMessage, master_secret: bytes, beacon: uuid.UUID,
                periods: Iterable[int]) -> Optional[Tuple[int, bytes, bytes]]:
    header = msg.header()
    for period in periods:
        token = derive_session_token(master_secret, beacon, period)
        try:
            plaintext = AESGCM(layer_key(token, OUTER_INFO)).decrypt(
                msg.outer_nonce, msg.outer_ct, header)
        except InvalidTag:
            continue
        return period, token, plaintext
    return None


def _open_inner(inner_nonce: bytes, inner_ct: bytes, name: bytes,
                user_seed: bytes, periods: Iterable[int]) -> Optional[bytes]:
    # the client keys the inner layer from its own clock, which may sit one
    # period off the period that opened the outer layer
    for period in periods:
        c_token = derive_c_token(user_seed, period)
        try:
            return AESGCM(layer_key(c_token, INNER_INFO)).decrypt(
                inner_nonce, inner_ct, name)
        except InvalidTag:
            continue
    return None


def service_verify_login(msg: Union[LoginMessage, bytes], registry: Registry,
                         master_secret: bytes, clock: Clock,
                         replay_cache: Optional[ReplayCache] = None,
                         receiving_beacon: Optional[uuid.UUID] = None,
                         period_ms: int = DEFAULT_PERIOD_MS,
                         skew_periods: int = DEFAULT_SKEW_PERIODS) -> AuthResult:
    now = current_period(clock, period_ms)
    if isinstance(msg, bytes):
        try:
            msg = LoginMessage.from_bytes(msg)
        except ProtocolError:
            return Rejected(RejectReason.MALFORMED_MESSAGE, receiving_beacon, now)

    beacon = receiving_beacon or msg.beacon_id
    opened = _open_outer(msg, master_secret, beacon,
                         accepted_periods(now, skew_periods))
    if opened is None:
        logger.debug("login at %s: outer layer did not open", beacon)
        return Rejected(RejectReason.TOKEN_MISMATCH, beacon, now)
    period, token, plaintext = opened

    if replay_cache is not None and not replay_cache.check_and_add(
            beacon, period, msg.outer_nonce, now - skew_periods):
        return Rejected(RejectReason.REPLAYED_NONCE, beacon, now)

    try:
        (length,) = struct.unpack_from(">H", plaintext)
        name = plaintext[2:2 + length]
        username = name.decode("utf-8")
        rest = plaintext[2 + length:]
        inner_nonce, inner_ct = rest[:NONCE_BYTES], rest[NONCE_BYTES:]
        if len(name) != length or len(inner_nonce) != NONCE_BYTES:
            raise MalformedMessage("truncated login plaintext")
    except (struct.error, UnicodeDecodeError, MalformedMessage):
        return Rejected(RejectReason.MALFORMED_MESSAGE, beacon, now)

    record = registry.get(username)
    if record is None:
        return Rejected(RejectReason.UNKNOWN_USER, beacon, now)

    candidates = [period] + [p for p in accepted_periods(now, skew_periods)
                             if p != period]
    received = _open_inner(inner_nonce, inner_ct, name, record.user_seed,
                           candidates)
    if received is None:
        return Rejected(RejectReason.CTOKEN_MISMATCH, beacon, now)

    if not hmac.compare_digest(received, auth_hash(token, record.pwd_verifier)):
        return Rejected(RejectReason.HASH_MISMATCH, beacon, now)
    return Authenticated(username, beacon, period)


class VerificationService:
    """ Serializes verification over one registry and replay cache. """

    def __init__(self, registry: Registry, master_secret: bytes, clock: Clock,
                 period_ms: int = DEFAULT_PERIOD_MS,
                 skew_periods: int = DEFAULT_SKEW_PERIODS) -> None:
        self.registry = registry
        self.master_secret = master_secret
        self.clock = clock
        self.period_ms = period_ms
        self.skew_periods = skew_periods
        self.replay_cache = ReplayCache()
        self._lock = threading.Lock()

    def verify(self, msg: Union[LoginMessage, bytes],
               receiving_beacon: Optional[uuid.UUID] = None) -> AuthResult:
        with self._lock:
            result = service_verify_login(
                msg, self.registry, self.master_secret, self.clock,
                self.replay_cache, receiving_beacon, self.period_ms,
                self.skew_periods)
        if isinstance(result, Rejected):
            logger.debug("rejected at %s: %s", result.beacon_id,
                         result.reason.value)
        return result
