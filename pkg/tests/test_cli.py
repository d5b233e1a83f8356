"""Command-line interface: exit codes, output formats, file handling."""

import json

import pytest

from marq.cli import main, parse_sweep_spec
from marq.errors import DomainError

GOOD_SWEEP = """\
# two-point sanity sweep
v_kmh = 114
delta_ms = 5
variable = snr_db
values = 10,20
realizations = 2000
seed = 3
policies = lemma4,genie
"""


def test_approx_tabulates(capsys):
    assert main(["approx", "--alpha", "2", "--beta", "0:0.5:4"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "beta,exact_cdf,approx_cdf,abs_error"
    assert len(lines) == 10  # header + 9 grid points


def test_approx_rejects_bad_alpha(capsys):
    code = main(["approx", "--alpha", "0", "--variant", "corollary1",
                 "--beta", "0:1:4"])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_approx_rejects_negative_grid(capsys):
    assert main(["approx", "--alpha", "2", "--beta=-1:1"]) == 2


def test_integrate_single_value(capsys):
    code = main(["integrate", "--family", "G", "--alpha", "2", "--rho", "1",
                 "--m", "2", "--n", "2"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["family"] == "G"
    assert doc["rel_error"] < 0.05


def test_integrate_requires_params(capsys):
    assert main(["integrate", "--family", "G", "--alpha", "2"]) == 2
    assert main(["integrate"]) == 2
    assert main(["integrate", "--family", "T0", "--alpha", "2", "--m", "1",
                 "--a", "1", "--theta1", "0", "--theta2", "2"]) == 2


def test_integrate_preset(capsys):
    assert main(["integrate", "--preset", "fig2", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "m,n,rho,closed_form,oracle,rel_error"
    assert len(lines) == 1 + 5 * 9


def test_rate_reports_both_policies(capsys):
    assert main(["rate", "--g-hat", "1.0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    for key in ("sigma", "lemma4_rate_npcu", "exact_rate_npcu",
                "lemma4_outage", "rescued", "used_fallback"):
        assert key in doc
    assert doc["lemma4_rate_npcu"] >= 0.0


def test_sweep_spec_file(tmp_path, capsys):
    spec_file = tmp_path / "sweep.txt"
    spec_file.write_text(GOOD_SWEEP)
    out_file = tmp_path / "result.csv"
    code = main(["sweep", "--spec", str(spec_file), "--out", str(out_file)])
    assert code == 0
    text = out_file.read_text()
    assert text.startswith("variable,value,policy,")
    assert len(text.strip().splitlines()) == 1 + 2 * 2  # 2 points x 2 policies


def test_sweep_malformed_spec_writes_nothing(tmp_path, capsys):
    spec_file = tmp_path / "sweep.txt"
    spec_file.write_text("variable = snr_db\nvalues = 20,10\n")
    out_file = tmp_path / "result.csv"
    code = main(["sweep", "--spec", str(spec_file), "--out", str(out_file)])
    assert code == 2
    assert not out_file.exists()
    assert "error:" in capsys.readouterr().err


def test_sweep_needs_exactly_one_source(capsys):
    assert main(["sweep"]) == 2
    assert main(["sweep", "--preset", "fig5", "--spec", "x.txt"]) == 2
    assert main(["sweep", "--preset", "fig99"]) == 2


def test_sweep_missing_spec_file(capsys):
    assert main(["sweep", "--spec", "/nonexistent/sweep.txt"]) == 2


def test_parse_sweep_spec_details():
    spec = parse_sweep_spec(GOOD_SWEEP)
    assert spec.variable == "snr_db"
    assert spec.values == (10.0, 20.0)
    assert spec.realizations == 2000
    assert [p.value for p in spec.policies] == ["lemma4", "genie"]
    with pytest.raises(DomainError):
        parse_sweep_spec("values = 1,2\n")  # missing variable
    with pytest.raises(DomainError):
        parse_sweep_spec(GOOD_SWEEP + "policies = genie\n")  # duplicate
    with pytest.raises(DomainError):
        parse_sweep_spec(GOOD_SWEEP.replace("lemma4,genie", "psychic"))
    ranged = parse_sweep_spec("variable = snr_db\nvalues = 0:5:20\n")
    assert ranged.values == (0.0, 5.0, 10.0, 15.0, 20.0)


def test_selftest_fast_passes(capsys):
    assert main(["selftest", "fast"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is True
    assert all(c["passed"] for c in report["checks"])
