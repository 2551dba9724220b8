import uuid

import pytest

from loc_auth import tokens
from loc_auth.errors import ClockError
from loc_auth.errors import TokenError

MASTER_SECRET = bytes(range(0x00, 0x20))
USER_SEED = bytes(range(0x20, 0x40))
BEACON = uuid.UUID("00112233-4455-6677-8899-aabbccddeeff")


@pytest.mark.parametrize("period, expected_result", [
    (0, "8d8bf0675d37ad405664aadc60bbc3e7"),
    (1, "6d9a4ec2f4ae9b8556443a68af67200c"),
    (1000, "6537beb7c95a8c9559369510475629cc"),
])
def test_session_token_vectors(period, expected_result):
    result = tokens.derive_session_token(MASTER_SECRET, BEACON, period)
    assert result.hex() == expected_result


@pytest.mark.parametrize("period, expected_result", [
    (0, "48317b1d19db4290655946a2a2353d34"),
    (1, "146f0becb8ce6426541d2b133b654041"),
    (1000, "770c6542a21b9db8267365eaa57968be"),
])
def test_c_token_vectors(period, expected_result):
    result = tokens.derive_c_token(USER_SEED, period)
    assert result.hex() == expected_result


def test_session_token_accepts_raw_beacon_bytes():
    assert (tokens.derive_session_token(MASTER_SECRET, BEACON.bytes, 7)
            == tokens.derive_session_token(MASTER_SECRET, BEACON, 7))


def test_session_token_differs_per_beacon():
    other = uuid.UUID(int=BEACON.int + 1)
    assert (tokens.derive_session_token(MASTER_SECRET, BEACON, 0)
            != tokens.derive_session_token(MASTER_SECRET, other, 0))


def test_session_token_bad_secret():
    with pytest.raises(TokenError):
        tokens.derive_session_token(b"short", BEACON, 0)


def test_session_token_bad_beacon():
    with pytest.raises(TokenError):
        tokens.derive_session_token(MASTER_SECRET, b"\x00" * 15, 0)


def test_c_token_bad_seed():
    with pytest.raises(TokenError):
        tokens.derive_c_token(bytes(31), 0)


@pytest.mark.parametrize("now_us, expected_result", [
    (0, 0),
    (29_999_999, 0),
    (30_000_000, 1),
    (90_000_001, 3),
])
def test_current_period_default(now_us, expected_result):
    clock = tokens.ManualClock(now_us)
    assert tokens.current_period(clock) == expected_result


def test_current_period_custom_length():
    clock = tokens.ManualClock(25_000_000)
    assert tokens.current_period(clock, 10000) == 2


def test_current_period_bad_length():
    with pytest.raises(TokenError):
        tokens.current_period(tokens.ManualClock(0), 0)


def test_period_end():
    assert tokens.period_end_us(0) == 30_000_000
    assert tokens.period_end_us(4, 10000) == 50_000_000


@pytest.mark.parametrize("period, skew, expected_result", [
    (5, 0, [5]),
    (5, 1, [5, 6, 4]),
    (0, 1, [0, 1]),
])
def test_accepted_periods(period, skew, expected_result):
    assert tokens.accepted_periods(period, skew) == expected_result


def test_accepted_periods_skew_too_wide():
    with pytest.raises(TokenError):
        tokens.accepted_periods(5, 2)


def test_manual_clock_advance():
    clock = tokens.ManualClock(1000)
    clock.advance(500)
    assert clock.now_us == 1500
    assert clock.now_ms == 1.5


def test_manual_clock_backwards():
    clock = tokens.ManualClock(1000)
    with pytest.raises(ClockError):
        clock.advance_to(999)
    assert clock.now_us == 1000
