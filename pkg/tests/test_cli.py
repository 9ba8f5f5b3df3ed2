import pytest

from interval_ci_power.cli import EXIT_INPUT, EXIT_OK, NEAR1_HEADER, POWER_HEADER, main

CONFIG = """\
[experiment]
ci_kinds = CI1
reps = 4000
seed = 3

[dgp]
theta_l = 0
theta_u = 0.2
sigma_l = 1
sigma_u = 1.5
rho = 0.3
noise_tau = 0.5

[alternative]
kind = local_lower
psi = 0, 1
n = 100
"""


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("INTERVAL_CI_WORKERS", raising=False)
    monkeypatch.delenv("INTERVAL_CI_LOG_LEVEL", raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_critval_ci1(capsys):
    code, out, _ = run(
        capsys, "critval", "--ci", "1", "--alpha", "0.05", "--delta", "0", "--sigma-l", "1", "--sigma-u", "1"
    )
    assert code == EXIT_OK
    header, row = out.splitlines()
    assert header == "ci,alpha,delta,sigma_l,sigma_u,c,residual"
    assert row.startswith("1,0.05,0,1,1,1.95996398,")


def test_critval_ci1_infinite_delta(capsys):
    code, out, _ = run(
        capsys, "critval", "--ci", "1", "--alpha", "0.05", "--delta", "inf", "--sigma-l", "1", "--sigma-u", "2"
    )
    assert code == EXIT_OK
    assert out.splitlines()[1].startswith("1,0.05,inf,1,2,1.64485363,")


def test_critval_ci2(capsys):
    code, out, _ = run(
        capsys,
        "critval", "--ci", "2", "--alpha", "0.05", "--delta", "0",
        "--sigma-l", "1", "--sigma-u", "1", "--rho", "1",
    )
    assert code == EXIT_OK
    header, row = out.splitlines()
    assert header.split(",")[-1] == "branch"
    fields = row.split(",")
    assert fields[6:8] == ["1.95996398", "1.95996398"]
    assert fields[-1] == "equal_variance_degenerate"
    assert fields[8:10] == ["true", "true"]


def test_critval_ci2_requires_rho(capsys):
    code, _, err = run(
        capsys, "critval", "--ci", "2", "--alpha", "0.05", "--delta", "1", "--sigma-l", "1", "--sigma-u", "1"
    )
    assert code == EXIT_INPUT
    assert "--rho" in err


def test_critval_rejects_bad_alpha(capsys):
    code, out, err = run(
        capsys, "critval", "--ci", "1", "--alpha", "0.6", "--delta", "1", "--sigma-l", "1", "--sigma-u", "1"
    )
    assert code == EXIT_INPUT
    assert out == ""
    assert "alpha must lie in (0, 0.5)" in err


def test_missing_arguments_exit_2(capsys):
    assert run(capsys, "critval", "--ci", "1")[0] == EXIT_INPUT
    assert run(capsys)[0] == EXIT_INPUT
    assert run(capsys, "critval", "--ci", "1", "--alpha", "nan", "--delta", "1", "--sigma-l", "1", "--sigma-u", "1")[0] == EXIT_INPUT


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == EXIT_OK
    assert out.startswith("interval-ci ")


def test_limit_h(capsys):
    code, out, _ = run(capsys, "limit", "--fn", "h", "--sigma", "1,2", "--mu", "1", "--psi", "0")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "sigma,mu,psi,alpha,h"
    assert [line.split(",")[-1] for line in lines[1:]] == ["0.95", "0.95"]


def test_limit_w(capsys):
    code, out, _ = run(capsys, "limit", "--fn", "w", "--mu", "1,inf", "--psi", "0")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "sigma_l,sigma_u,rho,mu,psi,alpha,side,w"
    assert [line.split(",")[-1] for line in lines[1:]] == ["0.95", "0.95"]


def test_limit_w_rejects_unreachable_drift(capsys):
    code, _, err = run(capsys, "limit", "--fn", "w", "--rho", "0.7", "--mu", "1", "--psi", "0")
    assert code == EXIT_INPUT
    assert "rho = 1 and sigma_l = sigma_u" in err


def test_limit_h_scan_finds_nothing(capsys):
    code, out, _ = run(
        capsys, "limit", "--fn", "h-scan", "--sigma", "0.5,1,2", "--mu", "0,1", "--psi", "0,1,3"
    )
    assert code == EXIT_OK
    assert out == "mu,psi,sigma_1,sigma_2,h_1,h_2\n"


def test_near1(capsys):
    code, out, _ = run(capsys, "near1", "--rho", "0.5,1", "--n", "1000", "--reps", "2000")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == ",".join(NEAR1_HEADER)
    assert len(lines) == 3
    half, degenerate = (line.split(",") for line in lines[1:])
    assert half[6] == "0.158655254"
    assert degenerate[5:7] == ["0", "0"]
    assert half[-1] == degenerate[-1] == "0"


def test_power_is_reproducible(tmp_path, capsys):
    config = tmp_path / "exp.ini"
    config.write_text(CONFIG, encoding="utf-8")
    outputs = []
    for workers in ("1", "1", "2"):
        target = tmp_path / f"power-{len(outputs)}.csv"
        code, _, _ = run(capsys, "--workers", workers, "power", "--config", str(config), "--output", str(target))
        assert code == EXIT_OK
        outputs.append(target.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    lines = outputs[0].decode("utf-8").split("\n")
    assert lines[0] == ",".join(POWER_HEADER)
    assert b"\r" not in outputs[0]
    assert len([line for line in lines if line]) == 3


def test_power_writes_plot(tmp_path, capsys):
    config = tmp_path / "exp.ini"
    config.write_text(CONFIG.replace("seed = 3", "seed = 3\nplot = figs/power"), encoding="utf-8")
    code, out, _ = run(capsys, "power", "--config", str(config))
    assert code == EXIT_OK
    assert out.startswith(",".join(POWER_HEADER))
    assert (tmp_path / "figs" / "power.svg").exists()


def test_power_bad_config(tmp_path, capsys):
    config = tmp_path / "exp.ini"
    config.write_text(CONFIG.replace("rho = 0.3", "rho = 3"), encoding="utf-8")
    code, _, err = run(capsys, "power", "--config", str(config))
    assert code == EXIT_INPUT
    assert "rho" in err


def test_critval_ci2_infinite_delta(capsys):
    code, out, _ = run(
        capsys,
        "critval", "--ci", "2", "--alpha", "0.05", "--delta", "inf",
        "--sigma-l", "1", "--sigma-u", "1", "--rho", "0.3",
    )
    assert code == EXIT_OK
    fields = out.splitlines()[1].split(",")
    assert fields[6:8] == ["1.64485363", "1.64485363"]
    assert fields[-1] == "infinite_delta"


def test_limit_w_infinite_drift_any_rho(capsys):
    code, out, _ = run(capsys, "limit", "--fn", "w", "--rho", "0.7", "--mu", "inf", "--psi", "0")
    assert code == EXIT_OK
    assert out.splitlines()[1].split(",")[-1] == "0.95"


def test_unwritable_output_exits_2(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    code, out, err = run(
        capsys,
        "critval", "--ci", "1", "--alpha", "0.05", "--delta", "0",
        "--sigma-l", "1", "--sigma-u", "1", "--output", str(blocker / "out.csv"),
    )
    assert code == EXIT_INPUT
    assert out == ""
    assert "error: " in err


def test_bad_log_file_exits_2(tmp_path, capsys):
    code, _, err = run(
        capsys,
        "--log-file", str(tmp_path / "missing" / "run.log"),
        "limit", "--fn", "h", "--sigma", "1", "--mu", "0", "--psi", "0",
    )
    assert code == EXIT_INPUT
    assert "error: " in err
