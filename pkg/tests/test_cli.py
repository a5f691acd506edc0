import numpy as np

from linsing.cli import main

BAD_SYMMETRY_SPEC = """
# same flow as example1, but the candidate V = f fails to descend
[vars]
names = x, y

[system]
f = 1, y

[constraints]
phi = y - 2

[forces]
Delta = x, 1

[symmetry]
V = 1, y
box = x:-2:2, y:0.5:4
"""


def _run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_analyze_scenario_point(capsys):
    code, out, err = _run(
        capsys, "analyze", "--scenario", "example1", "--at", "x=0.5"
    )
    assert code == 0 and err == ""
    assert "point_000:" in out
    assert "at: [0.5, 2]" in out  # y lifted onto the constraint line
    assert "regular: true" in out
    assert "D: [1]" in out
    assert "X: [0, 0]" in out  # 1 - a*x at x = 1/2
    assert "u: [-2]" in out  # D u = -dphi.Y with Y = (1, a)


def test_analyze_is_byte_stable(capsys):
    argv = ("analyze", "--scenario", "rosenberg", "--points", "4")
    code1, out1, _ = _run(capsys, *argv)
    code2, out2, _ = _run(capsys, *argv)
    assert code1 == code2 == 0
    assert out1 == out2
    assert out1.endswith("\n")


def test_param_override_changes_the_report(capsys):
    _, base, _ = _run(capsys, "analyze", "--scenario", "example1", "--at", "x=1")
    code, out, _ = _run(
        capsys, "analyze", "--scenario", "example1", "--at", "x=1",
        "--param", "a=3",
    )
    assert code == 0
    assert out != base
    assert "at: [1, 3]" in out  # lift now lands on y = 3
    assert "X: [-2, 0]" in out  # 1 - a*x with a = 3


def test_analyze_rejects_unknown_flags_and_points(capsys):
    code, _, err = _run(capsys, "analyze", "--at", "x=1")
    assert code == 2 and "--scenario or --spec" in err
    code, _, err = _run(capsys, "analyze", "--scenario", "nope", "--at", "x=1")
    assert code == 2 and "unknown scenario" in err
    code, _, err = _run(
        capsys, "analyze", "--scenario", "example1", "--at", "w=1"
    )
    assert code == 2 and "unknown variable" in err
    code, _, err = _run(
        capsys, "analyze", "--scenario", "example1", "--at", "x=1,x=2"
    )
    assert code == 2 and "assigned twice" in err
    code, _, err = _run(
        capsys, "analyze", "--scenario", "example1", "--at", "x=1",
        "--tol-rank", "-1",
    )
    assert code == 2 and "positive" in err


def test_analyze_off_manifold_point_is_an_evaluation_error(capsys):
    code, _, err = _run(
        capsys, "analyze", "--scenario", "example1", "--at", "x=0,y=7"
    )
    assert code == 3
    assert "violates the constraints" in err


def test_analyze_spec_file_from_disk(tmp_path, capsys):
    path = tmp_path / "toy.lss"
    path.write_text("[vars]\nnames = x\n\n[system]\nf = -x\n")
    code, out, _ = _run(capsys, "analyze", "--spec", str(path), "--at", "x=2")
    assert code == 0
    assert "rank_A: 1" in out
    assert "X0: [-2]" in out
    code, _, err = _run(capsys, "analyze", "--spec", str(tmp_path / "no.lss"))
    assert code == 2 and "cannot read" in err


def test_simulate_writes_csv(tmp_path, capsys):
    out_csv = tmp_path / "traj.csv"
    code, out, _ = _run(
        capsys, "simulate", "--scenario", "rosenberg",
        "--x0", "x=0,y=1,z=0,x'=2,y'=3",
        "--t1", "0.1", "--dt", "0.01",
        "--out", str(out_csv), "--quiet-time",
    )
    assert code == 0
    assert "mode: constrained" in out
    assert "steps: 10" in out
    assert "drift_max:" in out and "monitor_deviation:" in out
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "t,x1,x2,x3,x4,x5,x6,u1,drift"
    assert len(lines) == 12
    first = np.array([float(v) for v in lines[1].split(",")])
    assert np.allclose(first[1:7], [0.0, 1.0, 0.0, 2.0, 3.0, 2.0])


def test_simulate_usage_errors(capsys):
    code, _, err = _run(
        capsys, "simulate", "--scenario", "example1",
        "--x0", "x=0", "--t1", "1", "--dt", "0",
    )
    assert code == 2 and "--dt" in err
    code, _, err = _run(
        capsys, "simulate", "--scenario", "example1",
        "--x0", "x=0", "--dt", "0.1",
    )
    assert code == 2 and "--t1" in err
    code, _, err = _run(
        capsys, "simulate", "--scenario", "example1", "--t1", "1", "--dt", "0.1",
    )
    assert code == 2 and "--x0" in err


def test_check_symmetry_passes_on_example1(capsys):
    code, out, _ = _run(
        capsys, "check-symmetry", "--scenario", "example1", "--points", "60"
    )
    assert code == 0
    assert "symmetry_passed: true" in out
    assert "descends: true" in out
    assert "passed: true" in out


def test_check_symmetry_fails_when_candidate_does_not_descend(tmp_path, capsys):
    path = tmp_path / "bad.lss"
    path.write_text(BAD_SYMMETRY_SPEC)
    code, out, _ = _run(
        capsys, "check-symmetry", "--spec", str(path), "--points", "40"
    )
    assert code == 1
    assert "symmetry_passed: true" in out  # V = f is always a base symmetry
    assert "descends: false" in out
    assert "passed: false" in out


def test_check_symmetry_box_override(capsys):
    code, out, _ = _run(
        capsys, "check-symmetry", "--scenario", "example1", "--points", "40",
        "--box", "y:1:3",
    )
    assert code == 0 and "passed: true" in out
    code, _, err = _run(
        capsys, "check-symmetry", "--scenario", "example1", "--box", "y:3:1"
    )
    assert code == 2 and "empty --box range" in err
    code, _, err = _run(
        capsys, "check-symmetry", "--scenario", "example1", "--box", "w:0:1"
    )
    assert code == 2 and "unknown variable" in err


def test_check_constant(capsys):
    code, out, _ = _run(
        capsys, "check-constant", "--scenario", "example1", "--points", "30"
    )
    assert code == 0
    assert "level:" in out
    assert "constrained_conserved: true" in out
    assert "consistent: true" in out
    code, out, _ = _run(
        capsys, "check-constant", "--scenario", "rosenberg", "--points", "20"
    )
    assert code == 0
    for name in ("plane", "px", "twist", "vy"):
        assert f"{name}:" in out


def test_scenario_list_dump_and_selftest(capsys):
    code, out, _ = _run(capsys, "scenario", "--list")
    assert code == 0
    assert out.splitlines() == [
        "example1", "relparticle-L1", "relparticle-L2", "rosenberg",
    ]
    code, out, _ = _run(capsys, "scenario", "--dump", "example1")
    assert code == 0 and "[system]" in out and "phi = y - a" in out
    code, out, _ = _run(capsys, "scenario", "--self-test", "example1")
    assert code == 0
    assert "ok: true" in out
    code, _, err = _run(capsys, "scenario")
    assert code == 2 and "one of" in err
