import csv
import hashlib
import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from figkit.cli import main
from figkit.schemas import SchemaError, load_csv


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _fttm(tmp, command, doc):
    cfg = tmp / "cfg.json"
    cfg.write_text(json.dumps(doc))
    out = tmp / command
    subprocess.run(["fttm", command, "--config", str(cfg),
                    "--out", str(out)], check=True, capture_output=True)
    return out


@pytest.fixture(scope="session")
def outputs(tmp_path_factory):
    """One cheap upstream run per CSV schema, via the fttm CLI only."""
    tmp = tmp_path_factory.mktemp("fttm-runs")
    made = {}
    made["trace"] = _fttm(tmp, "simulate", {
        "sweep": {"f_start": 0.0, "f_stop": 5.0e9, "period": 0.5e-6},
        "filter": {"family": "ideal", "center": 0.6e9, "bandwidth": 100e6},
        "sut": {"kind": "tones", "tones": [[2.5e9, 1.0]]},
    }) / "pulses.csv"
    made["response"] = _fttm(tmp, "simulate", {
        "output": "response",
        "filter": {"family": "sbs", "center": 0.0, "natural_fwhm": 20e6},
        "pump_sweeps": [0.0, 90e6],
        "grid_step": 1e6,
    }) / "response_sweep090.csv"
    made["width_surface"] = _fttm(tmp, "sweep-bw", {
        "rates": [1e16],
        "filter": {"family": "ideal", "center": 0.0},
        "bandwidths": [50e6, 100e6, 200e6, 400e6],
    }) / "width_surface.csv"
    made["spectrogram"] = _fttm(tmp, "stft", {
        "sweep": {"f_start": 0.0, "f_stop": 2e9, "period": 1e-6},
        "filter": {"family": "ideal", "center": 0.6e9, "bandwidth": 100e6},
        "sut": {"kind": "lfm", "f0": 0.4e9, "f1": 1.8e9, "duration": 8e-6},
        "duration": 8e-6,
        "freq_bins": 64,
    }) / "stft_k2.csv"
    made["error_stats"] = _fttm(tmp, "measure", {
        "rate": 4e15,
        "filter": {"family": "ideal", "center": 0.0, "bandwidth": 100e6},
        "pump_sweeps": [0.0],
        "true_seps": [500e6],
        "trials": 1,
    }) / "error_stats.csv"
    return made


def test_renders_every_kind_readonly(outputs, tmp_path):
    runner = CliRunner()
    for kind, src in outputs.items():
        before = _sha(src)
        out = tmp_path / f"{kind}.png"
        result = runner.invoke(main, [kind, "--in", str(src),
                                      "--out", str(out)])
        assert result.exit_code == 0, f"{kind}: {result.output}"
        assert out.exists() and out.stat().st_size > 0
        assert _sha(src) == before, f"{kind}: input CSV modified"


def test_spectrogram_axes_span_config_ranges(outputs, tmp_path):
    import numpy as np
    from matplotlib.image import imread

    from figkit.render import render_spectrogram

    src = outputs["spectrogram"]
    data = load_csv(src, "spectrogram")
    out = tmp_path / "gram.png"
    render_spectrogram([str(src)], str(out), {})
    assert imread(out).size > 0
    # the renderer pins the limits to the data span, which must equal the
    # config ranges: 8 periods of 1 us -> midpoints 0.5..7.5 us, 64 bins
    # over 0..2 GHz
    times = np.unique(data["time_s"])
    freqs = np.unique(data["freq_hz"])
    assert times[0] == pytest.approx(0.5e-6)
    assert times[-1] == pytest.approx(7.5e-6)
    assert freqs[0] == 0.0 and freqs[-1] == pytest.approx(2e9)


def test_svg_output(outputs, tmp_path):
    runner = CliRunner()
    out = tmp_path / "resp.svg"
    result = runner.invoke(main, ["response", "--in",
                                  str(outputs["response"]),
                                  "--out", str(out)])
    assert result.exit_code == 0
    assert b"<svg" in out.read_bytes()[:300]


def test_multiple_inputs_overlay(outputs, tmp_path):
    runner = CliRunner()
    out = tmp_path / "overlay.png"
    result = runner.invoke(main, ["response",
                                  "--in", str(outputs["response"]),
                                  "--in", str(outputs["response"]),
                                  "--out", str(out)])
    assert result.exit_code == 0 and out.exists()


def test_axis_overrides(outputs, tmp_path):
    runner = CliRunner()
    out = tmp_path / "trace.png"
    result = runner.invoke(main, ["trace", "--in", str(outputs["trace"]),
                                  "--out", str(out),
                                  "--xmin", "0", "--xmax", "500"])
    assert result.exit_code == 0 and out.exists()


def test_schema_mismatch_names_column(tmp_path):
    bad = tmp_path / "bad.csv"
    with open(bad, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["freq_hz", "re", "im"])   # mag_db missing
        writer.writerow([0.0, 1.0, 0.0])
    runner = CliRunner()
    result = runner.invoke(main, ["response", "--in", str(bad),
                                  "--out", str(tmp_path / "x.png")])
    assert result.exit_code == 2
    assert "mag_db" in result.output


def test_non_numeric_cell_names_row_and_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("freq_hz,re,im,mag_db\n1.0,oops,0.0,0.0\n")
    with pytest.raises(SchemaError) as err:
        load_csv(bad, "response")
    assert "re" in str(err.value) and "row 2" in str(err.value)


def test_unknown_kind_rejected(tmp_path):
    from figkit.render import render
    with pytest.raises(SchemaError):
        render("pie-chart", [], str(tmp_path / "x.png"))
