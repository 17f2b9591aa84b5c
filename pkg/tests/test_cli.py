import json

import pytest

from conftest import NON_REUNICLUS
from htlcswap.cli import main


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_recognize(capsys, data_dir):
    assert main(["recognize", str(data_dir / "digon_chain.txt")]) == 0
    out = _json_out(capsys)
    assert out["reuniclus"] and out["decomposition"]["parent"] == {"b": "a"}


def test_recognize_rejects_and_errors(capsys, data_dir):
    assert main(["recognize", str(data_dir / "non_reuniclus.txt")]) == 2
    assert _json_out(capsys)["reuniclus"] is False
    assert main(["recognize", str(data_dir / "malformed.txt")]) == 1
    assert main(["recognize", str(data_dir / "missing.txt")]) == 1


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as e:
        main(["bogus"])
    assert e.value.code == 1


def test_schedule_bdp(capsys, data_dir):
    assert main(["schedule", str(data_dir / "three_cycle.txt"), "--protocol", "bdp", "--leader", "l"]) == 0
    out = _json_out(capsys)
    assert [out["timeouts"][k] for k in ("l->a", "a->b", "b->l")] == [5, 4, 3]
    assert out["invariants"]["ok"]


def test_schedule_rdp(capsys, data_dir, tmp_path):
    fig = tmp_path / "s.png"
    assert main(["schedule", str(data_dir / "digon_chain.txt"), "--figure", str(fig)]) == 0
    out = _json_out(capsys)
    assert [out["timeouts"][k] for k in ("a->b", "b->a", "b->c", "c->b")] == [4, 3, 5, 4]
    assert fig.stat().st_size > 0


def test_schedule_bdp_needs_bottleneck_leader(capsys, data_dir):
    assert main(["schedule", str(data_dir / "digon_chain.txt"), "--protocol", "bdp", "--leader", "a"]) == 2


def test_simulate_conforming(capsys, data_dir, tmp_path):
    fig = tmp_path / "t.png"
    assert main(["simulate", str(data_dir / "digon_chain.txt"), "--figure", str(fig)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    report = json.loads(lines[-1])
    assert {o["class"] for o in report["outcomes"]} == {"Deal"}
    assert all(json.loads(x)["event"] for x in lines[:-1])
    assert fig.exists()


def test_simulate_script(capsys, data_dir, tmp_path):
    script = _write(tmp_path, "b.json", json.dumps([{"party": "v", "action": "NeverCreate", "args": {"arc": ["v", "l"]}}]))
    assert main(["simulate", str(data_dir / "digon.txt"), "--protocol", "bdp", "--leader", "l", "--behaviors", script]) == 0
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    classes = {o["subject"][0]: o["class"] for o in report["outcomes"]}
    assert classes == {"l": "NoDeal", "v": "NoDeal"}
    bad = _write(tmp_path, "bad.json", json.dumps([{"party": "zz", "conforming": True}]))
    assert main(["simulate", str(data_dir / "digon.txt"), "--behaviors", bad]) == 1


def test_simulate_random_coalition_is_seeded(capsys, data_dir):
    args = ["simulate", str(data_dir / "digon_chain.txt"), "--coalition", "c", "--seed", "7"]
    main(args)
    first = capsys.readouterr().out
    main(args)
    assert capsys.readouterr().out == first
    assert json.loads(first.strip().splitlines()[-1])["coalition"]["acceptable"]


def test_horizon_env(capsys, data_dir, monkeypatch):
    monkeypatch.setenv("HTLCSWAP_HORIZON", "1")
    main(["simulate", str(data_dir / "digon_chain.txt")])
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1])["horizon"] == 1


def test_check_and_replay(capsys, tmp_path):
    g = _write(tmp_path, "g.txt", NON_REUNICLUS)
    bundle = tmp_path / "bundle.json"
    code = main(["check", g, "--suite", "safety", "--protocol", "naive", "--leader", "a",
                 "--exhaustive", "--budget", "2", "--bundle-out", str(bundle)])
    assert code == 2 and _json_out(capsys)["verdict"] == "fail"
    assert main(["simulate", "--replay", str(bundle)]) == 0
    assert _json_out(capsys)["matches"]


def test_check_suites(capsys, data_dir):
    assert main(["check", str(data_dir / "digon.txt"), "--suite", "safety", "--exhaustive"]) == 0
    assert main(["check", str(data_dir / "digon_chain.txt"), "--suite", "liveness"]) == 0
    assert main(["check", str(data_dir / "digon_chain.txt"), "--suite", "invariants"]) == 0
    assert main(["check", "--suite", "enumerate", "--n", "4"]) == 0
    assert main(["check", str(data_dir / "nope.txt"), "--suite", "liveness"]) == 1


def test_clear(capsys, tmp_path):
    orders = _write(tmp_path, "o.json", json.dumps([
        {"party": "Alice", "offers": ["ski"], "wants": ["ipad"]},
        {"party": "Bob", "offers": ["ipad"], "wants": ["ski"]}]))
    assert main(["clear", orders]) == 0
    out = _json_out(capsys)
    assert out["cleared"] and len(out["arcs"]) == 2
    bad = _write(tmp_path, "u.json", json.dumps([{"party": "A", "offers": ["x"]}]))
    assert main(["clear", bad]) == 2
    assert _json_out(capsys)["stage"] == "unbalanced"


def test_stderr_has_seed_and_replay_line(capsys, data_dir):
    main(["--seed", "5", "recognize", str(data_dir / "digon.txt")])
    err = capsys.readouterr().err
    assert "seed=5" in err
    assert "replay: htlcswap --seed 5 recognize" in err
