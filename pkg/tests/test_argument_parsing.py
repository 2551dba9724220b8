import pytest

from loc_auth import loc_auth


def test_argument_parsing_run():
    result = loc_auth.argument_parsing(["run", "office.json"])
    assert result.command == "run"
    assert result.scenario == "office.json"
    assert result.seed == 0
    assert result.out == "events.jsonl"
    assert result.keystore is None
    assert result.period_ms is None


@pytest.mark.parametrize("test_args, expected_results", [
    (["run", "s.json"], (None, None)),
    (["run", "s.json", "--period-ms", "2000"], (2000, None)),
    (["run", "s.json", "--ttl-ms", "9000", "--period-ms", "5"], (5, 9000)),
])
def test_argument_parsing_overrides(test_args, expected_results):
    result = loc_auth.argument_parsing(test_args)
    assert (result.period_ms, result.ttl_ms) == expected_results


@pytest.mark.parametrize("test_args, expected_result", [
    (["vectors"], False), (["-E", "vectors"], True)
])
def test_argument_parsing_elapse_time(test_args, expected_result):
    result = loc_auth.argument_parsing(test_args)
    assert result.elapse_time == expected_result


@pytest.mark.parametrize("test_args, expected_result", [
    (["vectors"], True), (["--no_color", "vectors"], False),
])
def test_argument_parsing_no_color(test_args, expected_result):
    result = loc_auth.argument_parsing(test_args)
    assert result.color == expected_result


@pytest.mark.parametrize("test_args, expected_result", [
    (["vectors"], False), (["-q", "vectors"], True)
])
def test_argument_parsing_quiet_mode(test_args, expected_result):
    result = loc_auth.argument_parsing(test_args)
    assert result.quiet_mode == expected_result


@pytest.mark.parametrize("test_args, expected_result", [
    (["vectors"], 0), (["-v", "vectors"], 1), (["-vv", "vectors"], 2)
])
def test_argument_parsing_verbose(test_args, expected_result):
    result = loc_auth.argument_parsing(test_args)
    assert result.verbose == expected_result


def test_argument_parsing_no_arguments():
    with pytest.raises(SystemExit):
        loc_auth.argument_parsing([])


def test_argument_parsing_help(capsys):
    with pytest.raises(SystemExit):
        loc_auth.argument_parsing(["-h"])
    captured_output = capsys.readouterr().out
    assert "usage" in captured_output


def test_display_version(capsys):
    with pytest.raises(SystemExit):
        loc_auth.argument_parsing(["--version"])
    captured_output = capsys.readouterr().out
    assert captured_output == f"Version: {loc_auth.version}\n"


def test_argument_parsing_setup():
    result = loc_auth.argument_parsing(["setup", "--force", "--seed", "3"])
    assert result.keystore == "keystore"
    assert result.force
    assert result.seed == 3


def test_argument_parsing_register():
    result = loc_auth.argument_parsing(
        ["register", "alice", "firm:xyz", "clearance=4", "--password", "pw"])
    assert result.username == "alice"
    assert result.attrs == ["firm:xyz", "clearance=4"]
    assert result.password == "pw"


def test_argument_parsing_register_needs_attrs(capsys):
    with pytest.raises(SystemExit):
        loc_auth.argument_parsing(["register", "alice"])


def test_argument_parsing_attack():
    result = loc_auth.argument_parsing(
        ["attack", "wormhole", "s.json", "--from", "l", "--to", "p"])
    assert result.game == "wormhole"
    assert result.from_beacon == "l"
    assert result.to_beacon == "p"
    assert result.delta_ms == 1.0


def test_argument_parsing_unknown_game(capsys):
    with pytest.raises(SystemExit):
        loc_auth.argument_parsing(["attack", "teleport", "s.json"])
    captured_output = capsys.readouterr().err
    assert "invalid choice" in captured_output


def test_argument_parsing_policy_check():
    result = loc_auth.argument_parsing(["policy-check", "a AND b", "a"])
    assert result.policy == "a AND b"
    assert result.attrs == ["a"]
    assert result.width == 8
