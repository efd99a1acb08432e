from pathlib import Path

from htact.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_reduce_examples(capsys):
    code, out, _ = run(capsys, "reduce", "--bs", "2", "3", "T h3 t")
    assert code == 0 and out.strip() == "h2"
    code, out, _ = run(capsys, "reduce", "--bs", "2", "3", "t T")
    assert code == 0 and out.strip() == "1"
    code, out, _ = run(capsys, "reduce", "--amalgam", "2", "3", "1:1 1:1")
    assert code == 0 and out.strip() == "1"


def test_reduce_parse_error(capsys):
    code, _, err = run(capsys, "reduce", "--bs", "2", "3", "zzz")
    assert code == 2 and "error" in err


def demand_file(tmp_path: Path) -> Path:
    f = tmp_path / "demands.txt"
    f.write_text("map (0,0) (0,1) -> (0,2) (0,4)\nmap (1,0) -> (0,-1)\n")
    return f


def test_build_verify_round_trip(tmp_path, capsys):
    demands = demand_file(tmp_path)
    out = tmp_path / "run"
    code, _, _ = run(capsys, "build", "--bs", "2", "3", "--demands", str(demands), "--out", str(out))
    assert code == 0
    for name in ("transcript.txt", "certificates.txt", "preaction.txt", "graph.dot"):
        assert (out / name).exists()
    code, stdout, _ = run(capsys, "verify", str(out / "preaction.txt"), str(out / "certificates.txt"))
    assert code == 0
    assert "FAIL" not in stdout


def test_build_rejects_bad_presentations(tmp_path, capsys):
    demands = demand_file(tmp_path)
    code, _, err = run(capsys, "build", "--bs", "2", "2", "--demands", str(demands), "--out", str(tmp_path / "x"))
    assert code == 2 and "topologically free" in err
    code, _, err = run(capsys, "build", "--bs", "1", "2", "--demands", str(demands), "--out", str(tmp_path / "y"))
    assert code == 2 and "ascending" in err


def test_verify_detects_tampering(tmp_path, capsys):
    demands = demand_file(tmp_path)
    out = tmp_path / "run"
    run(capsys, "build", "--bs", "2", "3", "--demands", str(demands), "--out", str(out))
    cert_file = out / "certificates.txt"
    tampered = cert_file.read_text().replace('gamma="t t', 'gamma="t t h1')
    bad = tmp_path / "tampered.txt"
    bad.write_text(tampered)
    code, stdout, _ = run(capsys, "verify", str(out / "preaction.txt"), str(bad))
    assert code == 1 and "FAIL" in stdout


def test_verify_presentation_mismatch(tmp_path, capsys):
    demands = demand_file(tmp_path)
    out = tmp_path / "run"
    run(capsys, "build", "--bs", "2", "3", "--demands", str(demands), "--out", str(out))
    certs = (out / "certificates.txt").read_text().replace("bs m=2 n=3", "bs m=2 n=5")
    bad = tmp_path / "other.txt"
    bad.write_text(certs)
    code, _, err = run(capsys, "verify", str(out / "preaction.txt"), str(bad))
    assert code == 1 and "mismatch" in err


def test_graph_core_and_window(tmp_path, capsys):
    demands = demand_file(tmp_path)
    out = tmp_path / "run"
    run(capsys, "build", "--bs", "2", "3", "--demands", str(demands), "--out", str(out))
    code, dot, _ = run(capsys, "graph", str(out / "preaction.txt"))
    assert code == 0 and dot.startswith("graph bass_serre")
    code2, dot2, _ = run(capsys, "graph", str(out / "preaction.txt"), "--radius", "1")
    assert code2 == 0 and dot2.count("--") > dot.count("--")


def test_graph_empty_preaction(tmp_path, capsys):
    f = tmp_path / "empty.txt"
    f.write_text("preaction bs m=2 n=3\norbit 0 core\norbit 1 core\norbit 2 core\n")
    code, dot, _ = run(capsys, "graph", str(f))
    assert code == 0
    assert dot.count("--") == 0 and dot.count(";") == 3


def test_demands_gen_deterministic(capsys):
    code, out1, _ = run(capsys, "demands", "gen", "--bs", "2", "3", "--count", "3", "--seed", "5")
    code2, out2, _ = run(capsys, "demands", "gen", "--bs", "2", "3", "--count", "3", "--seed", "5")
    assert code == code2 == 0 and out1 == out2
    assert len(out1.strip().splitlines()) == 3
    code, out3, _ = run(capsys, "demands", "gen", "--bs", "2", "3", "--count", "3", "--seed", "6")
    assert out3 != out1


def test_build_amalgam(tmp_path, capsys):
    f = tmp_path / "demands.txt"
    f.write_text("map (0,0) -> (0,1)\nmap (1,0) (1,1) -> (2,0) (2,1)\n")
    out = tmp_path / "amrun"
    code, _, _ = run(capsys, "build", "--amalgam", "2", "3", "--demands", str(f), "--out", str(out))
    assert code == 0
    code, stdout, _ = run(capsys, "verify", str(out / "preaction.txt"), str(out / "certificates.txt"))
    assert code == 0 and "FAIL" not in stdout
