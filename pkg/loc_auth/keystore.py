""" File-backed key authority, user registry and client bundles.

Layout of a keystore directory::

    params.bin  params.hex            ABE public parameters
    msk.bin     msk.hex               master key (0600)
    master_secret.bin master_secret.hex  token PRF key (0600)
    registry.json                     username database
    bundles/<user>.bundle  .hex       client bundles (0600)
"""
import contextlib
import fcntl
import json
import logging
import os

from typing import Dict
from typing import Iterator
from typing import Optional

from loc_auth import abe
from loc_auth.errors import AbeError
from loc_auth.errors import KeystoreError
from loc_auth.errors import KeystoreExists
from loc_auth.errors import ProtocolError
from loc_auth.protocol import ClientBundle
from loc_auth.protocol import Registry
from loc_auth.protocol import UserRecord
from loc_auth.protocol import check_username
from loc_auth.simworld import Authority
from loc_auth.simworld import Enrollment
from loc_auth.tokens import SECRET_BYTES

logger = logging.getLogger(__name__)

PARAMS_FILE = "params.bin"
MSK_FILE = "msk.bin"
SECRET_FILE = "master_secret.bin"
REGISTRY_FILE = "registry.json"
BUNDLE_DIR = "bundles"
LOCK_FILE = ".lock"
REGISTRY_SCHEMA = 1
SECRET_MODE = 0o600
PUBLIC_MODE = 0o644


def _write(path: str, data: bytes, mode: int) -> None:
    """ Write the binary file and its hex sidecar. """
    for target, content in ((path, data),
                            (os.path.splitext(path)[0] + ".hex",
                             data.hex().encode("ascii") + b"\n")):
        tmp = target + ".tmp"
        fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, mode)
        with os.fdopen(fd, "wb") as f:
            f.write(content)
        os.chmod(tmp, mode)
        os.replace(tmp, target)


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except FileNotFoundError:
        raise KeystoreError(f"missing keystore file {path}")


def dumps_registry(registry: Registry) -> str:
    document = {"schema": REGISTRY_SCHEMA,
                "users": [record.to_dict() for record in registry]}
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def loads_registry(text: str) -> Registry:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise KeystoreError(f"registry is not JSON: {e}")
    if not isinstance(document, dict) or document.get("schema") != REGISTRY_SCHEMA:
        raise KeystoreError("unsupported registry schema")
    try:
        return Registry(UserRecord.from_dict(entry)
                        for entry in document.get("users", []))
    except ProtocolError as e:
        raise KeystoreError(str(e))


class Keystore:
    def __init__(self, path: str) -> None:
        self.path = path

    def _file(self, name: str) -> str:
        return os.path.join(self.path, name)

    def bundle_path(self, username: str) -> str:
        try:
            check_username(username)
        except ProtocolError as e:
            raise KeystoreError(f"bad bundle name: {e}")
        return os.path.join(self.path, BUNDLE_DIR, f"{username}.bundle")

    def exists(self) -> bool:
        return any(os.path.exists(self._file(name))
                   for name in (PARAMS_FILE, MSK_FILE, SECRET_FILE))

    @contextlib.contextmanager
    def lock(self) -> Iterator[None]:
        os.makedirs(self.path, exist_ok=True)
        with open(self._file(LOCK_FILE), "w") as f:
            fcntl.flock(f, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(f, fcntl.LOCK_UN)

    def create(self, rng_seed: Optional[int] = None,
               force: bool = False) -> Authority:
        with self.lock():
            if self.exists() and not force:
                raise KeystoreExists(f"keystore already exists in {self.path}")
            authority = Authority.generate(rng_seed)
            _write(self._file(PARAMS_FILE), authority.params.to_bytes(),
                   PUBLIC_MODE)
            _write(self._file(MSK_FILE), authority.msk.to_bytes(), SECRET_MODE)
            _write(self._file(SECRET_FILE), authority.master_secret,
                   SECRET_MODE)
            self.write_registry(Registry())
        logger.info("keystore created in %s", self.path)
        return authority

    def load(self) -> Authority:
        try:
            params = abe.PublicParams.from_bytes(_read(self._file(PARAMS_FILE)))
            msk = abe.MasterKey.from_bytes(_read(self._file(MSK_FILE)))
        except AbeError as e:
            raise KeystoreError(f"corrupt keystore in {self.path}: {e}")
        if not abe.check_master_key(params, msk):
            raise KeystoreError("master key does not match public parameters")
        secret = _read(self._file(SECRET_FILE))
        if len(secret) != SECRET_BYTES:
            raise KeystoreError("master secret must be 32 bytes")
        return Authority(params, msk, secret)

    def load_registry(self) -> Registry:
        path = self._file(REGISTRY_FILE)
        if not os.path.exists(path):
            return Registry()
        with open(path, "r") as f:
            return loads_registry(f.read())

    def write_registry(self, registry: Registry) -> None:
        path = self._file(REGISTRY_FILE)
        with open(path + ".tmp", "w") as f:
            f.write(dumps_registry(registry))
        os.replace(path + ".tmp", path)

    def save_registry(self, registry: Registry) -> None:
        with self.lock():
            self.write_registry(registry)

    def write_bundle(self, bundle: ClientBundle) -> str:
        path = self.bundle_path(bundle.username)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        _write(path, bundle.to_bytes(), SECRET_MODE)
        return path

    def load_bundle(self, username: str) -> ClientBundle:
        data = _read(self.bundle_path(username))
        try:
            return ClientBundle.from_bytes(data)
        except (ProtocolError, AbeError) as e:
            raise KeystoreError(f"corrupt bundle for {username}: {e}")

    def enrolled(self) -> Dict[str, Enrollment]:
        """ Registry records paired with their bundles, where both exist. """
        result = {}
        for record in self.load_registry():
            if os.path.exists(self.bundle_path(record.username)):
                result[record.username] = (record,
                                           self.load_bundle(record.username))
        return result
