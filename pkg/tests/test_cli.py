import csv
import subprocess
import sys

from knuthpp.cli import main


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_generate_and_envelope(tmp_path, capsys):
    pat = tmp_path / "mtp.csv"
    code = main(
        ["generate", "thomas", "--param", "rho=2e-4", "--param", "sigma=10", "--param", "mu=10",
         "--seed", "12", "-o", str(pat)]
    )
    assert code == 0 and len(_rows(pat)) > 100
    out = tmp_path / "g.csv"
    code = main(
        ["envelope", str(pat), "--window", "0,500,0,500", "--n-sims", "39", "--level", "0.95",
         "--n-points", "48", "--seed", "3", "-o", str(out)]
    )
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 48 and list(rows[0]) == ["r", "value", "lower", "upper", "theory"]
    assert "outside the 0.95 CSR envelope" in capsys.readouterr().out


def test_generate_is_reproducible(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert main(["generate", "csr", "--param", "lambda=0.001", "--seed", "9", "-o", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_generate_bad_param_exit_code(tmp_path, capsys):
    assert main(["generate", "csr", "--param", "lambda=-2", "-o", str(tmp_path / "x.csv")]) == 1
    assert main(["generate", "csr", "--param", "oops", "-o", str(tmp_path / "x.csv")]) == 1
    assert not (tmp_path / "x.csv").exists()


def test_compare_binning(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    assert main(["compare-binning", "--datasets", "3", "--n", "300", "--c", "40", "--step", "1e-2", "-o", str(out)]) == 0
    assert len(_rows(out)) == 3
    assert "datasets=3" in capsys.readouterr().out


def test_analyze_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("generator = csr\ngenerator.lambda = 0.002\nwindow = 500x500\nseed = 1\nanalyses = knuth\n")
    assert main(["analyze", str(cfg), "--output-dir", str(tmp_path / "res")]) == 0
    assert len(_rows(tmp_path / "res" / "histogram.csv")) == 1
    assert (tmp_path / "res" / "manifest.json").exists()


def test_analyze_bad_config_writes_nothing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("generator = csr\ngenerator.lambda = 0.002\nanalyses = knuth, bogus\n")
    assert main(["analyze", str(cfg)]) == 1
    assert not (tmp_path / "output").exists()


def test_console_module_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "knuthpp.cli", "analyze", str(tmp_path / "none.cfg")],
                         capture_output=True, text=True)
    assert res.returncode == 1 and "config error" in res.stderr
