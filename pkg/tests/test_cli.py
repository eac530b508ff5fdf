import json
import re
from importlib import resources

import pytest

from scmasim.cli import main
from scmasim.codebook import DEFAULT_CODEBOOK_RESOURCE
from scmasim.maxstar import G1_PARAMS, G2_PARAMS

SHIPPED_CODEBOOK = resources.files("scmasim").joinpath("data", DEFAULT_CODEBOOK_RESOURCE)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_fit_g1_matches_builtin_constants(capsys):
    code, out, _ = run_cli(capsys, "fit", "--kind", "g1")
    assert code == 0
    m = re.search(r"a=([-\d.]+)\s+b=([-\d.]+)\s+c=([-\d.]+)\s+d=([-\d.]+)", out)
    assert m is not None
    fitted = tuple(float(g) for g in m.groups())
    for got, ref in zip(fitted, G1_PARAMS):
        assert got == pytest.approx(ref, abs=0.02)


def test_fit_g2_matches_builtin_constants(capsys):
    code, out, _ = run_cli(capsys, "fit", "--kind", "g2")
    assert code == 0
    m = re.search(r"a=([-\d.]+)\s+b=([-\d.]+)", out)
    fitted = tuple(float(g) for g in m.groups())
    for got, ref in zip(fitted, G2_PARAMS):
        assert got == pytest.approx(ref, abs=0.02)


def test_fit_impossible_tolerance_fails(capsys):
    code, _, err = run_cli(capsys, "fit", "--kind", "g2", "--tolerance", "1e-9")
    assert code == 1
    assert "tolerance" in err


def test_validate_shipped_codebook(capsys):
    code, out, _ = run_cli(capsys, "validate", str(SHIPPED_CODEBOOK))
    assert code == 0
    assert out.startswith("ok: J=6 K=4 M=4 N=2")
    assert "overloading=1.50" in out


def test_validate_reports_violations(capsys, tmp_path):
    doc = json.loads(SHIPPED_CODEBOOK.read_text())
    doc["layers"][0][0][2] = [0.5, 0.0]  # third nonzero breaks the N=2 support
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, _, err = run_cli(capsys, "validate", str(bad))
    assert code == 1
    assert err.count("violation:") >= 1


def test_validate_missing_file_is_usage_error(capsys, tmp_path):
    code, _, err = run_cli(capsys, "validate", str(tmp_path / "nope.json"))
    assert code == 2
    assert err.startswith("error:")


def test_ber_prints_points_and_writes_csv(capsys, tmp_path):
    out_csv = tmp_path / "ber.csv"
    code, out, _ = run_cli(
        capsys, "ber", "--snr", "6.0,10.0", "--variant", "mpa",
        "--max-frames", "300", "--target-bit-errors", "1000000",
        "--seed", "9", "--output", str(out_csv),
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("snr=6 dB  variant=mpa  ber=")
    assert out_csv.read_text().splitlines()[0] == "# schema=scmasim-ber-v1"


def test_ami_prints_points(capsys):
    code, out, _ = run_cli(
        capsys, "ami", "--snr", "8.0", "--max-frames", "300", "--seed", "9",
    )
    assert code == 0
    assert re.match(r"snr=8 dB  variant=log_exact  ami=\d\.\d{4}", out)


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({
        "snr_grid_db": [4.0], "variant": "log_maxlog",
        "max_frames": 200, "target_bit_errors": 1000000, "seed": 2,
    }))
    code, out, _ = run_cli(capsys, "ber", "--config", str(cfg), "--snr", "12.0")
    assert code == 0
    assert out.startswith("snr=12 dB  variant=log_maxlog")


def test_unknown_config_key_rejected(capsys, tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({"snr_db_grid": [4.0]}))
    code, _, err = run_cli(capsys, "ber", "--config", str(cfg))
    assert code == 2
    assert "snr_db_grid" in err


def test_bad_variant_is_reported_not_raised(capsys):
    code, _, err = run_cli(
        capsys, "ber", "--variant", "genie", "--snr", "4.0", "--max-frames", "100",
    )
    assert code == 2
    assert "genie" in err


def test_uncoded_flag_overrides_config(capsys, tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({
        "coded": True, "snr_grid_db": [8.0], "max_frames": 200,
        "target_bit_errors": 1000000, "seed": 2,
    }))
    code, out, _ = run_cli(capsys, "ber", "--config", str(cfg), "--uncoded")
    assert code == 0
    # uncoded run counts max_frames * J * D bits, not LDPC info bits
    assert "bits=2400" in out
