""" Location-based authentication operator tool. """
import argparse
import getpass
import importlib.metadata as importlib_metadata
import logging
import sys
import time
import uuid

from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

from loc_auth import abe
from loc_auth import adversary
from loc_auth.errors import LocAuthError
from loc_auth.errors import PolicySyntaxError
from loc_auth.errors import ScenarioError
from loc_auth.keystore import Keystore
from loc_auth.protocol import PBKDF2_ITERATIONS
from loc_auth.protocol import Registry
from loc_auth.protocol import auth_hash
from loc_auth.protocol import INNER_INFO
from loc_auth.protocol import OUTER_INFO
from loc_auth.protocol import layer_key
from loc_auth.protocol import password_verifier
from loc_auth.protocol import register_user
from loc_auth.scenario import load_scenario
from loc_auth.simworld import Event
from loc_auth.simworld import WorldState
from loc_auth.simworld import run
from loc_auth.simworld import summarize
from loc_auth.simworld import write_log
from loc_auth.tokens import derive_c_token
from loc_auth.tokens import derive_session_token

try:
    version = importlib_metadata.version("loc-auth")
except importlib_metadata.PackageNotFoundError:
    version = "unknown"

logger = logging.getLogger(__name__)

DEFAULT_KEYSTORE = "keystore"
DEFAULT_OUT = "events.jsonl"
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2

VECTOR_MASTER_SECRET = bytes(range(0x00, 0x20))
VECTOR_BEACON_ID = uuid.UUID("00112233-4455-6677-8899-aabbccddeeff")
VECTOR_USER_SEED = bytes(range(0x20, 0x40))
VECTOR_SALT = bytes(range(0x40, 0x50))
VECTOR_PASSWORD = "pw1234"
VECTOR_PERIODS = (0, 1, 1000)


class ElapseTime:
    def __init__(self) -> None:
        self.start_time = 0.0
        self.end_time = 0.0

    def start(self) -> None:
        self.start_time = time.time()

    def stop(self) -> None:
        self.end_time = time.time()

    def elapse_time(self) -> float:
        return self.end_time - self.start_time


class Display:
    def __init__(self,
                 show_elapse_time: bool,
                 display_color: bool = False,
                 quiet_mode: bool = False) -> None:
        if display_color:
            self.red = "\033[1;31m"
            self.green = "\033[1;32m"
            self.reset_color = "\033[0m"
        else:
            self.red = ""
            self.green = ""
            self.reset_color = ""

        self.script_name = "Loc-Auth"
        self.failed = f"{self.red}Failed{self.reset_color}"
        self.passed = f"{self.green}Passed{self.reset_color}"
        self.show_elapse_time = show_elapse_time
        self.quiet_mode = quiet_mode

    def welcome(self) -> None:
        if not self.quiet_mode:
            print(self.script_name)

    def _elapse(self, elapse_time: float) -> str:
        if self.show_elapse_time:
            return f"  in {elapse_time:.2f}s"
        return ""

    def summary(self, summary: Dict[str, Any], exit_code: int,
                elapse_time: float) -> None:
        if self.quiet_mode and exit_code == EXIT_OK:
            return None

        print(f"{summary['logins_attempted']} logins attempted, "
              f"{summary['logins_succeeded']} authenticated, "
              f"{summary['travels']} travels")
        if summary["rejections"]:
            reasons = ", ".join(f"{reason}: {count}" for reason, count
                                in sorted(summary["rejections"].items()))
            print(f"rejected: {reasons}")
        for attack, verdict in sorted(summary["verdicts"].items()):
            state = self.passed if verdict == adversary.PASS else self.failed
            print(f"  {attack}: {state}")
        if summary["violations"]:
            print(f"{summary['violations']} invariant violations")
        state = self.passed if exit_code == EXIT_OK else self.failed
        print(f"{state}{self._elapse(elapse_time)}")

    def done(self, msg: str, elapse_time: float = 0.0) -> None:
        if not self.quiet_mode:
            print(f"{msg}{self._elapse(elapse_time)}")

    def error(self, msg: str) -> None:
        print(f"{self.red}{msg}{self.reset_color}")


# ----------------------------------------------------------------------
# subcommands

def cmd_setup(out_dir: str, force: bool = False,
              rng_seed: Optional[int] = None) -> Keystore:
    keystore = Keystore(out_dir)
    keystore.create(rng_seed, force)
    return keystore


def cmd_register(keystore: Keystore, username: str, password: str,
                 attrs: Sequence[str],
                 rng_seed: Optional[int] = None) -> Tuple[Registry, str]:
    authority = keystore.load()
    with keystore.lock():
        registry = keystore.load_registry()
        _, bundle = register_user(registry, authority.params, authority.msk,
                                  username, password, attrs,
                                  abe.make_rng(rng_seed))
        keystore.write_registry(registry)
        path = keystore.write_bundle(bundle)
    return registry, path


def _finish(log: List[Event], out_path: str) -> int:
    write_log(log, out_path)
    code = adversary.exit_code(log)
    logger.info("wrote %d events to %s", len(log), out_path)
    return code


def _load(scenario_path: str, keystore: Optional[Keystore],
          period_ms: Optional[int], ttl_ms: Optional[int]) -> Dict[str, Any]:
    scenario = load_scenario(scenario_path).with_overrides(period_ms, ttl_ms)
    if keystore is None:
        return {"scenario": scenario}
    return {"scenario": scenario, "authority": keystore.load(),
            "enrolled": keystore.enrolled()}


def cmd_run(scenario_path: str, keystore: Optional[Keystore] = None,
            rng_seed: int = 0, out_path: str = DEFAULT_OUT,
            period_ms: Optional[int] = None,
            ttl_ms: Optional[int] = None) -> Tuple[int, List[Event]]:
    loaded = _load(scenario_path, keystore, period_ms, ttl_ms)
    scenario = loaded["scenario"]
    world = WorldState.build(scenario, rng_seed, loaded.get("authority"),
                             loaded.get("enrolled"))
    log = run(world, scenario.end_ms(), rng_seed)
    adversary.append_verdicts(log, adversary.judge(log))
    return _finish(log, out_path), log


def cmd_attack(game: str, scenario_path: str,
               keystore: Optional[Keystore] = None, rng_seed: int = 0,
               out_path: str = DEFAULT_OUT, period_ms: Optional[int] = None,
               ttl_ms: Optional[int] = None,
               **game_args: Any) -> Tuple[int, List[Event]]:
    loaded = _load(scenario_path, keystore, period_ms, ttl_ms)
    options = {k: v for k, v in game_args.items() if v is not None}
    outcome = adversary.GAMES[game](loaded["scenario"], rng_seed=rng_seed,
                                    authority=loaded.get("authority"),
                                    enrolled=loaded.get("enrolled"),
                                    **options)
    log = list(outcome.events)
    return _finish(log, out_path), log


def cmd_vectors() -> str:
    verifier = password_verifier(VECTOR_PASSWORD, VECTOR_SALT)
    lines = [
        f"master_secret  {VECTOR_MASTER_SECRET.hex()}",
        f"beacon_id      {VECTOR_BEACON_ID}",
        f"user_seed      {VECTOR_USER_SEED.hex()}",
        f"salt           {VECTOR_SALT.hex()}",
        f"password       {VECTOR_PASSWORD}",
        f"iterations     {PBKDF2_ITERATIONS}",
        f"pwd_verifier   {verifier.hex()}",
    ]
    for period in VECTOR_PERIODS:
        token = derive_session_token(VECTOR_MASTER_SECRET, VECTOR_BEACON_ID,
                                     period)
        c_token = derive_c_token(VECTOR_USER_SEED, period)
        lines += [
            f"period {period}",
            f"  session_token  {token.hex()}",
            f"  c_token        {c_token.hex()}",
            f"  auth_hash      {auth_hash(token, verifier).hex()}",
            f"  outer_key      {layer_key(token, OUTER_INFO).hex()}",
            f"  inner_key      {layer_key(c_token, INNER_INFO).hex()}",
        ]
    return "\n".join(lines) + "\n"


def cmd_policy_check(policy: str, attrs: Sequence[str],
                     width: int = abe.DEFAULT_WIDTH) -> Tuple[abe.AccessTree, bool]:
    tree = abe.parse_policy(policy, width)
    return tree, abe.satisfies(abe.expand_attributes(attrs, width), tree)


# ----------------------------------------------------------------------
# command line

def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", type=str, help="scenario JSON file")
    parser.add_argument("--keystore", action="store", default=None,
                        help="use keys and enrollments from this keystore")
    parser.add_argument("--seed", type=int, default=0,
                        help="simulation random seed")
    parser.add_argument("--out", action="store", default=DEFAULT_OUT,
                        metavar="filename", help="JSONL event log to write")
    parser.add_argument("--period-ms", type=int, default=None,
                        help="override the token period")
    parser.add_argument("--ttl-ms", type=int, default=None,
                        help="override the session lifetime")


def argument_parsing(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="loc_auth")
    parser.add_argument("-E", "--elapse_time", action="store_true",
                        help="elapse time in seconds to run the command")
    parser.add_argument("-q", dest="quiet_mode", action="store_true",
                        help="Quiet mode. No output unless fail or error")
    parser.add_argument("--no_color", dest="color", action="store_false",
                        help="turn off color output")
    parser.add_argument("-v", dest="verbose", action="count", default=0,
                        help="log progress to stderr, twice for debug")
    parser.add_argument("--version", action="version",
                        version=f"Version: {version}")
    commands = parser.add_subparsers(dest="command", required=True)

    setup = commands.add_parser("setup", help="create a key authority")
    setup.add_argument("--keystore", default=DEFAULT_KEYSTORE,
                       help="keystore directory")
    setup.add_argument("--force", action="store_true",
                       help="overwrite an existing keystore")
    setup.add_argument("--seed", type=int, default=None,
                       help="deterministic key generation (testing only)")

    register = commands.add_parser("register", help="register a user")
    register.add_argument("username", type=str)
    register.add_argument("attrs", nargs="+",
                          help="attributes, e.g. dept:financial clearance=4")
    register.add_argument("--password", default=None,
                          help="prompted for when omitted")
    register.add_argument("--keystore", default=DEFAULT_KEYSTORE,
                          help="keystore directory")

    run_cmd = commands.add_parser("run", help="run a scenario")
    _add_run_options(run_cmd)

    commands.add_parser("vectors", help="print token and KDF test vectors")

    check = commands.add_parser("policy-check",
                                help="test attributes against a policy")
    check.add_argument("policy", type=str)
    check.add_argument("attrs", nargs="*")
    check.add_argument("--width", type=int, default=abe.DEFAULT_WIDTH,
                       help="bit width of numeric attributes")

    attack = commands.add_parser("attack", help="play one security game")
    attack.add_argument("game", choices=sorted(adversary.GAMES))
    _add_run_options(attack)
    attack.add_argument("--delta-ms", dest="delta_ms", type=float, default=1.0,
                        help="replay: time past the recorded period's end")
    attack.add_argument("--beacon", default=None,
                        help="replay: beacon to record at")
    attack.add_argument("--from", dest="from_beacon", default=None,
                        help="wormhole: recording beacon")
    attack.add_argument("--to", dest="to_beacon", default=None,
                        help="wormhole: delivery beacon")
    attack.add_argument("--tunnel-delay-ms", dest="tunnel_delay_ms",
                        type=float, default=None, help="wormhole: tunnel delay")
    attack.add_argument("--area", default=None,
                        help="dos/forge: attacked beacon")
    return parser.parse_args(argv)


def _game_args(args: argparse.Namespace) -> Dict[str, Any]:
    if args.game == "replay":
        return {"delta_ms": args.delta_ms, "beacon": args.beacon}
    if args.game == "wormhole":
        return {"from_beacon": args.from_beacon, "to_beacon": args.to_beacon,
                "tunnel_delay_ms": args.tunnel_delay_ms}
    return {"area": args.area}


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    elapse_timer = ElapseTime()
    args = argument_parsing(argv)
    _configure_logging(args.verbose)
    display = Display(args.elapse_time, args.color, args.quiet_mode)

    elapse_timer.start()

    if args.command == "vectors":
        print(cmd_vectors(), end="")
        return EXIT_OK

    display.welcome()
    try:
        if args.command == "setup":
            cmd_setup(args.keystore, args.force, args.seed)
            elapse_timer.stop()
            display.done(f"keystore written to {args.keystore}",
                         elapse_timer.elapse_time())
            return EXIT_OK

        if args.command == "register":
            password = args.password
            if password is None:
                password = getpass.getpass(f"password for {args.username}: ")
            _, path = cmd_register(Keystore(args.keystore), args.username,
                                   password, args.attrs)
            elapse_timer.stop()
            display.done(f"registered {args.username}, bundle {path}",
                         elapse_timer.elapse_time())
            return EXIT_OK

        if args.command == "policy-check":
            tree, ok = cmd_policy_check(args.policy, args.attrs, args.width)
            print(tree)
            print(display.passed if ok else display.failed)
            return EXIT_OK if ok else EXIT_FAILED

        keystore = Keystore(args.keystore) if args.keystore else None
        if args.command == "run":
            code, log = cmd_run(args.scenario, keystore, args.seed, args.out,
                                args.period_ms, args.ttl_ms)
        else:
            code, log = cmd_attack(args.game, args.scenario, keystore,
                                   args.seed, args.out, args.period_ms,
                                   args.ttl_ms, **_game_args(args))
    except PolicySyntaxError as e:
        display.error(f"Error policy syntax at {e.position}: {e}")
        return EXIT_INPUT
    except ScenarioError as e:
        display.error(f"Error {e}")
        return EXIT_INPUT
    except LocAuthError as e:
        display.error(f"Error {e}")
        return EXIT_FAILED

    elapse_timer.stop()
    display.summary(summarize(log), code, elapse_timer.elapse_time())
    return code


if __name__ == "__main__":
    exit(main())
