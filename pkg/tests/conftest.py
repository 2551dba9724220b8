import os
import pytest

from loc_auth import abe
from loc_auth.keystore import Keystore
from loc_auth.protocol import Registry
from loc_auth.protocol import register_user
from loc_auth.scenario import parse_scenario
from loc_auth.simworld import Authority

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)),
                            "scenarios")

USERS = {
    "alice": ("correct horse", ["firm:xyz", "dept:financial", "clearance=4"]),
    "bob": ("battery staple", ["firm:xyz", "intern", "clearance=2"]),
    "carol": ("tr0ub4dor", ["firm:xyz"]),
}


@pytest.fixture(scope="session")
def authority():
    # pairing setup is slow in pure python; share one authority
    return Authority.generate(rng_seed=7)


@pytest.fixture(scope="session")
def enrolled(authority):
    registry = Registry()
    rng = abe.make_rng(11)
    result = {}
    for username, (password, attrs) in USERS.items():
        result[username] = register_user(registry, authority.params,
                                         authority.msk, username, password,
                                         attrs, rng)
    return result


@pytest.fixture
def registry(enrolled):
    return Registry(record for record, _ in enrolled.values())


@pytest.fixture
def scenario_file():
    def _scenario_file(name):
        return os.path.join(SCENARIO_DIR, name)

    return _scenario_file


@pytest.fixture
def make_test_file(tmpdir):
    def _make_test_file(filename, file_contents):
        t = tmpdir.join(filename)
        t.write(file_contents)
        return t.strpath

    return _make_test_file


@pytest.fixture
def make_scenario():
    def _make_scenario(beacons, users=(), **extra):
        data = {"schema": 1, "token": {"period_ms": 10000},
                "beacons": list(beacons), "users": list(users)}
        data.update(extra)
        return parse_scenario(data)

    return _make_scenario


@pytest.fixture
def make_keystore(tmpdir):
    def _make_keystore(name="keystore", rng_seed=5):
        keystore = Keystore(tmpdir.join(name).strpath)
        keystore.create(rng_seed)
        return keystore

    return _make_keystore


def beacon(ident, x_m, y_m=0.0, policy="firm:xyz", interval_ms=5000, **extra):
    config = {"id": ident, "x_m": x_m, "y_m": y_m, "policy": policy,
              "interval_ms": interval_ms}
    config.update(extra)
    return config


def user(username, trace, attrs=None):
    password, default_attrs = USERS[username]
    return {"username": username, "password": password,
            "attrs": attrs or default_attrs,
            "trace": [{"t_ms": t, "x_m": x, "y_m": y} for t, x, y in trace]}
