import json

import pytest
from PIL import Image

from lintest import commands, config
from lintest.main import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def last_error(err: str) -> dict:
    return json.loads(err.strip().splitlines()[-1])


def write(path, payload) -> str:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


@pytest.fixture
def toy_files(tmp_path, capsys):
    code, out, _ = run(capsys, "fixture", "toy_parity")
    assert code == 0
    doc = json.loads(out)
    return {
        "game": write(tmp_path / "toy.json", doc["game"]),
        "strategy": write(tmp_path / "perfect.json", doc["strategies"]["perfect"]),
    }


@pytest.fixture
def chsh_file(tmp_path, capsys):
    path = tmp_path / "chsh.json"
    assert run(capsys, "--out", str(path), "fixture", "chsh")[0] == 0
    return write(tmp_path / "chsh_game.json", json.loads(path.read_text())["game"])


def test_version(capsys):
    with pytest.raises(SystemExit) as err:
        main(["--version"])
    assert err.value.code == 0
    assert config.VERSION in capsys.readouterr().out


def test_unknown_fixture_is_a_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["fixture", "nope"])
    assert err.value.code == 2


def test_fixture_document(capsys):
    code, out, _ = run(capsys, "fixture", "magic_square")
    doc = json.loads(out)
    assert code == 0
    assert doc["name"] == "magic_square"
    assert set(doc["extras"]) == {"cv", "cc"}
    assert len(doc["lcs"]["equations"]) == 6


def test_classical_estimate(capsys, chsh_file):
    code, out, _ = run(capsys, "estimate", chsh_file, "--method", "classical")
    assert code == 0
    assert json.loads(out)["exact"] == "3/4"


def test_monte_carlo_on_a_plain_game_needs_a_strategy(capsys, chsh_file):
    code, _, err = run(capsys, "estimate", chsh_file, "--samples", "200")
    assert code == 2
    assert last_error(err)["error"] == "Usage error"


def test_compile(capsys, toy_files):
    code, out, _ = run(capsys, "compile", toy_files["game"], "--epsilon", "1/10")
    doc = json.loads(out)
    assert code == 0
    assert doc["passes"] == ["nonempty:identity", "project", "bcs", "longcode:u1"]
    assert doc["test"]["epsilon"] == "1/10"
    assert doc["payload_bytes"] == 113


def test_compile_rejects_asynchronous_games(capsys, chsh_file):
    code, _, err = run(capsys, "compile", chsh_file, "--epsilon", "1/10")
    assert code == 2
    assert last_error(err)["error"] == "Domain error"


def test_paper_mode_rejects_large_noise(capsys, toy_files):
    code, _, err = run(capsys, "compile", toy_files["game"], "--epsilon", "1/10", "--paper-mode")
    assert code == 2
    assert last_error(err)["error"] == "Configuration error"


def test_build_from_compiled_bcs(tmp_path, capsys, toy_files):
    _, out, _ = run(capsys, "compile", toy_files["game"], "--epsilon", "1/10")
    bcs = write(tmp_path / "bcs.json", json.loads(out)["test"]["bcs"])
    code, out, _ = run(capsys, "build", bcs, "--kind", "bcs")
    assert code == 0
    assert len(json.loads(out)["questions"]) == 6


def test_build_lcs_game(tmp_path, capsys):
    _, out, _ = run(capsys, "fixture", "magic_square")
    lcs = write(tmp_path / "lcs.json", json.loads(out)["lcs"])
    code, out, _ = run(capsys, "build", lcs, "--kind", "lcs", "--symmetric")
    assert code == 0
    assert len(json.loads(out)["questions"]) == 15


def test_transform_passes(capsys, toy_files):
    code, out, _ = run(capsys, "transform", toy_files["game"], "--passes", "nonempty,project")
    assert code == 0
    assert len(json.loads(out)["questions"]) == 6
    code, _, err = run(capsys, "transform", toy_files["game"], "--passes", "shuffle")
    assert code == 2


def test_test_mode_estimate_with_transcript(tmp_path, capsys, toy_files):
    transcript = tmp_path / "rounds.jsonl"
    code, out, _ = run(
        capsys, "--seed", "4", "estimate", toy_files["game"], "--epsilon", "1/10",
        "--strategy", toy_files["strategy"], "--samples", "150", "--transcript", str(transcript),
    )
    assert code == 0
    assert json.loads(out)["method"] == "monte_carlo"
    lines = transcript.read_text().splitlines()
    assert len(lines) == 150
    first = json.loads(lines[0])
    assert first["seed"] == [4, 0]
    assert set(first["alice_q"]) == {"W", "U", "C", "f", "g", "gprime", "rounds"}


def test_exact_test_value(capsys, toy_files):
    code, out, _ = run(
        capsys, "estimate", toy_files["game"], "--epsilon", "1/10", "--strategy", toy_files["strategy"], "--exact",
    )
    assert code == 0
    assert json.loads(out)["point"] == pytest.approx(0.9, abs=1e-9)


def test_audit_of_the_honest_strategy(capsys, toy_files):
    code, out, _ = run(
        capsys, "audit", toy_files["game"], "--epsilon", "1/100", "--strategy", toy_files["strategy"], "--exact",
    )
    doc = json.loads(out)
    assert code == 0
    assert all(e["passed"] for e in doc["audit"]["entries"])
    assert doc["params"]["epsilon"] == "1/100"


def _suite_config(tmp_path, suites) -> str:
    return write(tmp_path / "suites.json", {"seed": 5, "suites": suites})


def test_verify_is_byte_identical_without_timestamps(tmp_path, capsys):
    cfg = _suite_config(tmp_path, [{"name": "fourier", "trials": 3}, {"name": "classical"}])
    first, again = tmp_path / "a.json", tmp_path / "b.json"
    image = tmp_path / "summary.png"
    assert run(capsys, "--out", str(first), "verify", cfg, "--no-timestamp", "--image", str(image))[0] == 0
    assert run(capsys, "--out", str(again), "verify", cfg, "--no-timestamp")[0] == 0
    assert first.read_bytes() == again.read_bytes()
    assert json.loads(first.read_text())["seed"] == 5
    with Image.open(image) as png:
        assert png.size == (800, 600)


def test_verify_failure_exit_code(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(config, "LEMMA_TOL", -1.0)
    cfg = _suite_config(tmp_path, [{"name": "fourier", "trials": 2}])
    code, out, err = run(capsys, "verify", cfg)
    assert code == 1
    assert last_error(err) == {"error": "Acceptance checks failed", "details": ["fourier"]}
    assert json.loads(out)["created_at"]


def test_verify_bad_config(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"suites": [', encoding="utf-8")
    code, _, err = run(capsys, "verify", str(path))
    assert code == 2
    assert last_error(err)["details"]["line"] == 1


def test_capacity_exit_code(capsys, toy_files):
    code, _, err = run(capsys, "compile", toy_files["game"], "--epsilon", "1/10", "--u", "9")
    assert code == 3
    assert last_error(err)["error"] == "Capacity exceeded"


def test_internal_errors_are_not_leaked(capsys, monkeypatch):
    def boom(args):
        raise RuntimeError("secret detail")

    monkeypatch.setattr(commands, "cmd_fixture", boom)
    code, _, err = run(capsys, "fixture", "chsh")
    assert code == 1
    assert last_error(err) == {"error": "Internal error"}


def test_log_level_flag_overrides_the_environment(capsys, monkeypatch):
    monkeypatch.setattr(config, "LOG_LEVEL", "WARNING")
    _, _, err = run(capsys, "fixture", "chsh")
    assert "fixture finished" not in err
    _, _, err = run(capsys, "--log-level", "info", "fixture", "chsh")
    assert "fixture finished" in err
    _, _, err = run(capsys, "--log-level", "error", "fixture", "chsh")
    assert "fixture finished" not in err
