import os
import stat

import pytest

from loc_auth import keystore
from loc_auth.errors import KeystoreError
from loc_auth.errors import InvalidUsername
from loc_auth.errors import KeystoreExists
from loc_auth.loc_auth import cmd_register
from loc_auth.protocol import Registry


def mode(path):
    return stat.S_IMODE(os.stat(path).st_mode)


def test_create_and_load(make_keystore):
    store = make_keystore()
    created = store.load()
    assert store.exists()
    assert created.params.to_bytes() == store.load().params.to_bytes()
    assert len(created.master_secret) == 32
    assert len(store.load_registry()) == 0


def test_create_deterministic_seed(tmpdir):
    first = keystore.Keystore(tmpdir.join("a").strpath).create(rng_seed=5)
    second = keystore.Keystore(tmpdir.join("b").strpath).create(rng_seed=5)
    assert first.params.to_bytes() == second.params.to_bytes()
    assert first.master_secret == second.master_secret


def test_create_refuses_overwrite(make_keystore):
    store = make_keystore()
    with pytest.raises(KeystoreExists):
        store.create()


def test_create_force(make_keystore):
    store = make_keystore()
    before = store.load().master_secret
    store.create(rng_seed=6, force=True)
    assert store.load().master_secret != before


def test_secret_file_modes(make_keystore):
    store = make_keystore()
    for name in ("msk.bin", "msk.hex", "master_secret.bin",
                 "master_secret.hex"):
        assert mode(os.path.join(store.path, name)) == keystore.SECRET_MODE
    assert mode(os.path.join(store.path, "params.bin")) == keystore.PUBLIC_MODE


def test_hex_sidecar(make_keystore):
    store = make_keystore()
    with open(os.path.join(store.path, "master_secret.bin"), "rb") as f:
        secret = f.read()
    with open(os.path.join(store.path, "master_secret.hex")) as f:
        assert f.read() == secret.hex() + "\n"


def test_load_missing(tmpdir):
    with pytest.raises(KeystoreError):
        keystore.Keystore(tmpdir.strpath).load()


def test_load_corrupt_params(make_keystore):
    store = make_keystore()
    with open(os.path.join(store.path, "params.bin"), "wb") as f:
        f.write(b"\x01garbage")
    with pytest.raises(KeystoreError):
        store.load()


def test_registry_text_stable(enrolled):
    registry = Registry(record for record, _ in enrolled.values())
    text = keystore.dumps_registry(registry)
    assert keystore.dumps_registry(keystore.loads_registry(text)) == text
    assert text.endswith("\n")
    assert text.index('"alice"') < text.index('"bob"') < text.index('"carol"')


@pytest.mark.parametrize("text", [
    "not json",
    '{"schema": 2, "users": []}',
    '{"schema": 1, "users": [{"username": "x"}]}',
])
def test_registry_bad_text(text):
    with pytest.raises(KeystoreError):
        keystore.loads_registry(text)


def test_registry_persists(make_keystore, enrolled):
    store = make_keystore()
    record, _ = enrolled["alice"]
    store.save_registry(Registry([record]))
    reopened = keystore.Keystore(store.path).load_registry()
    assert reopened.get("alice") == record


def test_bundles(make_keystore, enrolled):
    store = make_keystore()
    record, bundle = enrolled["carol"]
    path = store.write_bundle(bundle)
    assert mode(path) == keystore.SECRET_MODE
    assert store.load_bundle("carol").to_bytes() == bundle.to_bytes()

    store.save_registry(Registry([record, enrolled["bob"][0]]))
    enrolled_users = store.enrolled()
    assert list(enrolled_users) == ["carol"]
    assert enrolled_users["carol"][0] == record


def test_missing_bundle(make_keystore):
    with pytest.raises(KeystoreError):
        make_keystore().load_bundle("nobody")


def test_register_traversal_username_writes_nothing(tmpdir, make_keystore):
    keystore = make_keystore("inner/ks")
    before = sorted(p.strpath for p in tmpdir.visit())
    with pytest.raises(InvalidUsername):
        cmd_register(keystore, "../../escaped", "tr0ub4dor", ["firm:xyz"],
                     rng_seed=2)
    assert sorted(p.strpath for p in tmpdir.visit()) == before
    assert len(keystore.load_registry()) == 0


def test_bundle_path_refuses_traversal(make_keystore):
    keystore = make_keystore()
    with pytest.raises(KeystoreError):
        keystore.bundle_path("../escaped")
