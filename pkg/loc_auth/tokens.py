""" Time-period tokens: the per-beacon session token and the per-user c-token. """
import hashlib
import hmac
import struct
import time
import uuid

from typing import List
from typing import NewType
from typing import Union

from loc_auth.errors import ClockError
from loc_auth.errors import TokenError

DEFAULT_PERIOD_MS = 30000
DEFAULT_SKEW_PERIODS = 0
MAX_SKEW_PERIODS = 1
TOKEN_BYTES = 16
SECRET_BYTES = 32

PeriodIndex = NewType("PeriodIndex", int)
SessionToken = NewType("SessionToken", bytes)
CToken = NewType("CToken", bytes)

BeaconId = Union[uuid.UUID, bytes]


class Clock:
    """ Injectable time source in integer microseconds. """

    @property
    def now_us(self) -> int:
        raise NotImplementedError()

    @property
    def now_ms(self) -> float:
        return self.now_us / 1000


class SystemClock(Clock):
    @property
    def now_us(self) -> int:
        return time.time_ns() // 1000


class ManualClock(Clock):
    def __init__(self, now_us: int = 0) -> None:
        self._now_us = now_us

    @property
    def now_us(self) -> int:
        return self._now_us

    def advance_to(self, t_us: int) -> None:
        if t_us < self._now_us:
            raise ClockError(f"clock moved backwards: {t_us} < {self._now_us}")
        self._now_us = t_us

    def advance(self, delta_us: int) -> None:
        self.advance_to(self._now_us + delta_us)


def _period_bytes(period: int) -> bytes:
    return struct.pack(">Q", period)


def _beacon_bytes(beacon_id: BeaconId) -> bytes:
    raw = beacon_id.bytes if isinstance(beacon_id, uuid.UUID) else beacon_id
    if len(raw) != 16:
        raise TokenError("beacon id must be 16 bytes")
    return raw


def current_period(clock: Clock, period_ms: int = DEFAULT_PERIOD_MS) -> PeriodIndex:
    if period_ms <= 0:
        raise TokenError(f"period must be positive, got {period_ms}")
    return PeriodIndex(clock.now_us // int(period_ms * 1000))


def period_end_us(period: int, period_ms: int = DEFAULT_PERIOD_MS) -> int:
    return (period + 1) * int(period_ms * 1000)


def accepted_periods(period: int, skew: int = DEFAULT_SKEW_PERIODS) -> List[int]:
    """ Periods a verifier tries, current first. """
    if not 0 <= skew <= MAX_SKEW_PERIODS:
        raise TokenError(f"skew window must be 0..{MAX_SKEW_PERIODS}")
    periods = [period]
    for step in range(1, skew + 1):
        periods.append(period + step)
        if period - step >= 0:
            periods.append(period - step)
    return periods


def derive_session_token(master_secret: bytes, beacon_id: BeaconId,
                         period: int) -> SessionToken:
    if len(master_secret) != SECRET_BYTES:
        raise TokenError("master secret must be 32 bytes")
    mac = hmac.new(master_secret, _beacon_bytes(beacon_id) + _period_bytes(period),
                   hashlib.sha256).digest()
    return SessionToken(mac[:TOKEN_BYTES])


def derive_c_token(user_seed: bytes, period: int) -> CToken:
    if len(user_seed) != SECRET_BYTES:
        raise TokenError("user seed must be 32 bytes")
    mac = hmac.new(user_seed, _period_bytes(period), hashlib.sha256).digest()
    return CToken(mac[:TOKEN_BYTES])
