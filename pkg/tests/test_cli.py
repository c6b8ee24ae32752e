import json
import math

import numpy as np
import pytest

from squeezer_sim import cli
from squeezer_sim.config import CONFIG_DIR_ENV, load_config, parse_config
from squeezer_sim.errors import ConfigError
from squeezer_sim.reporting import read_spectrum_csv

GEO_NO_BUDGET = """
[scenario]
name = nobudget
[cavity.sqz]
r1 = 0.92
r2 = 1.0
segments = 0.010:1.83, 0.020:1.0
[measurement]
sq_db = -9
anti_db = 14
[opo]
cavity = sqz
x = fit
eta_esc = fit
[homodyne]
dark_clearance_db = 17
"""


def run(argv, capsys=None):
    code = cli.main(argv)
    return code


def body(path):
    return path.read_text().split("\n", 1)[1]


# --- config -------------------------------------------------------------------

def test_geo600_config_loads():
    cfg = load_config("geo600")
    assert cfg.name == "geo600"
    assert set(cfg.cavities) == {"sqz", "mc532"}
    assert cfg.opo.x == pytest.approx(0.680146, abs=1e-6)
    assert cfg.loops["pump_phase"].unity_gain_frequency == 6e3
    assert cfg.loops["pump_phase"].demod_harmonic == 2
    assert cfg.loops["lo_phase"].unity_gain_frequency == 10e3
    assert cfg.cavities["mc532"].pdh_modulation == 120e6
    assert cfg.eta_bhd == 0.95 and cfg.extra_losses == [0.10, 0.15]


@pytest.mark.parametrize("text, path", [
    ("[homodyne]\nvisibility = abc\n", "homodyne.visibility"),
    ("[cavity.a]\nr1 = 0.9\nr2 = 1\nsegments = 0.1-1\n", "cavity.a.segments[0]"),
    ("[cavity.a]\nr1 = 1.5\nr2 = 1\nsegments = 0.1:1\n", "cavity.a"),
    ("[output]\nband = 10\n", "output.band"),
    ("[output]\nmains = maybe\n", "output.mains"),
    ("[cavity.a]\nr1 = 0.9\nr2 = 1\nsegments = 0.1:1\n[opo]\ncavity = b\n", "opo.cavity"),
    ("[cavity.a]\nr1 = 0.9\nr2 = 1\nsegments = 0.1:1\n[opo]\ncavity = a\nx = 1.2\n", "opo"),
    ("[loop.p]\nunity_gain_hz = 6e3\nmodulation_hz = 1e6\ndemod_harmonic = 3\n", "loop.p"),
])
def test_config_errors_name_the_field(text, path):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.path == path


def test_config_dir_from_environment(tmp_path, monkeypatch):
    (tmp_path / "mine.cfg").write_text(GEO_NO_BUDGET)
    monkeypatch.setenv(CONFIG_DIR_ENV, str(tmp_path))
    assert load_config("mine").name == "nobudget"


def test_unknown_config():
    with pytest.raises(ConfigError):
        load_config("no-such-scenario")


# --- spectrum -------------------------------------------------------------------

def test_spectrum_geo600_flat_levels(tmp_path):
    assert run(["spectrum", "--out", str(tmp_path), "--dark-noise", "off", "--plot", "off"]) == 0
    data = read_spectrum_csv(tmp_path / "spectrum.csv")
    assert list(data) == ["frequency_hz", "shot_db", "squeezed_db", "antisqueezed_db"]
    assert len(data["frequency_hz"]) == 151
    assert np.allclose(data["shot_db"], 0.0)
    assert np.allclose(data["squeezed_db"], -9.0, atol=1e-5)
    assert np.allclose(data["antisqueezed_db"], 14.0, atol=1e-4)
    assert (tmp_path / "run_report.json").exists()


def test_spectrum_with_dark_noise_and_plot(tmp_path):
    assert run(["spectrum", "--out", str(tmp_path)]) == 0
    data = read_spectrum_csv(tmp_path / "spectrum.csv")
    assert np.allclose(data["shot_db"], 0.0858, atol=1e-4)
    assert (tmp_path / "spectrum.png").stat().st_size > 0


def test_spectrum_vacuum(tmp_path):
    assert run(["spectrum", "--config", "vacuum", "--out", str(tmp_path), "--plot", "off"]) == 0
    data = read_spectrum_csv(tmp_path / "spectrum.csv")
    for col in ("shot_db", "squeezed_db", "antisqueezed_db"):
        assert np.allclose(data[col], 0.0, atol=1e-12)


def test_spectrum_header_and_mains(tmp_path):
    assert run(["spectrum", "--out", str(tmp_path), "--mains", "on", "--band", "10:1e4",
                "--points-per-decade", "50", "--plot", "off"]) == 0
    lines = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert lines[0].startswith("# generated ")
    assert lines[1].startswith("# params: ") and "mains=on" in lines[1]
    arts = json.loads(lines[2].split(":", 1)[1])
    assert [a["frequency_hz"] for a in arts] == [50.0, 100.0]
    assert lines[3] == "frequency_hz,shot_db,squeezed_db,antisqueezed_db"


def test_spectrum_doc_format(tmp_path):
    assert run(["spectrum", "--out", str(tmp_path), "--format", "doc", "--plot", "off"]) == 0
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    assert len(doc["frequency_hz"]) == 151
    assert set(doc) >= {"shot_db", "squeezed_db", "antisqueezed_db", "units"}


# --- fit ------------------------------------------------------------------------

def test_fit_geo_pair(capsys):
    assert run(["fit", "--format", "doc", "-9", "14"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["loss_percent"] == pytest.approx(9.3, abs=0.05)
    assert doc["injected_db"] == pytest.approx(-11.0, abs=0.05)
    assert doc["fit_opo"]["x"] == pytest.approx(0.680, abs=1e-3)
    assert all(p["improvement_db"] >= 6.0 for p in doc["projection"])


def test_fit_text_output(capsys):
    assert run(["fit", "-9", "14"]) == 0
    out = capsys.readouterr().out
    assert "fit_pure.eta = 0.906977" in out


def test_fit_pure_state(capsys):
    assert run(["fit", "--format", "doc", "-3.0103", "3.0103"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["loss_percent"] == pytest.approx(0.0, abs=0.01)
    assert doc["fit_pure"]["eta"] == pytest.approx(1.0, abs=1e-4)


def test_fit_nonphysical_exit_code(capsys):
    assert run(["fit", "-3", "2"]) == cli.EXIT_PHYSICS
    assert "NonphysicalPairError" in capsys.readouterr().err


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[homodyne]\nvisibility = x\n")
    assert run(["report", "--config", str(bad), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "homodyne.visibility" in capsys.readouterr().err


def test_above_threshold_is_physics_error(tmp_path):
    assert run(["errorsignal", "pump-phase", "--x", "1.2", "--out", str(tmp_path),
                "--plot", "off"]) == cli.EXIT_PHYSICS


# --- errorsignal -----------------------------------------------------------------

def _trace(path):
    rows = [ln.split(",") for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return np.array([[float(v) for v in r] for r in rows[1:]])


def test_errorsignal_pdh(tmp_path):
    assert run(["errorsignal", "pdh", "--cavity", "mc532", "--out", str(tmp_path),
                "--sweep=-2e8:2e8", "--points", "2001"]) == 0
    t = _trace(tmp_path / "errorsignal_pdh.csv")
    assert t[1000, 0] == 0.0 and abs(t[1000, 1]) < 1e-12
    assert np.allclose(t[:, 1], -t[::-1, 1], atol=1e-9)
    assert (tmp_path / "errorsignal_pdh.png").exists()


def test_errorsignal_pump_phase_periodic(tmp_path):
    assert run(["errorsignal", "pump-phase", "--out", str(tmp_path), "--sweep", "0:6.283185307179586",
                "--points", "1001", "--plot", "off"]) == 0
    t = _trace(tmp_path / "errorsignal_pump-phase.csv")
    assert np.allclose(t[:501, 1], t[500:, 1], atol=1e-9)


def test_errorsignal_pump_phase_first_harmonic_flat(tmp_path, capsys):
    assert run(["errorsignal", "pump-phase", "--demod-harmonic", "1", "--out", str(tmp_path),
                "--plot", "off"]) == 0
    t = _trace(tmp_path / "errorsignal_pump-phase.csv")
    assert np.all(t[:, 1] == 0.0)
    assert "no discrimination" in capsys.readouterr().out


def test_errorsignal_lo_phase(tmp_path):
    assert run(["errorsignal", "lo-phase", "--out", str(tmp_path), "--plot", "off"]) == 0
    t = _trace(tmp_path / "errorsignal_lo-phase.csv")
    mid = len(t) // 2
    assert abs(t[mid, 1]) < 1e-12 and t[mid + 1, 1] > 0


def test_errorsignal_invalid_selector():
    with pytest.raises(SystemExit) as info:
        cli.main(["errorsignal", "bogus"])
    assert info.value.code == cli.EXIT_USAGE


def test_errorsignal_unknown_cavity(tmp_path):
    assert run(["errorsignal", "pdh", "--cavity", "nope", "--out", str(tmp_path)]) == cli.EXIT_CONFIG


# --- loop -------------------------------------------------------------------------

def test_loop_command(tmp_path, capsys):
    assert run(["loop", "pump_phase", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "residual_jitter_rad" in out
    lines = (tmp_path / "loop_pump_phase.csv").read_text().splitlines()
    assert lines[2] == "frequency_hz,suppression"
    assert (tmp_path / "loop_pump_phase.png").exists()


# --- report -----------------------------------------------------------------------

def test_report_geo600(tmp_path, capsys):
    assert run(["report", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert round(doc["cavities"]["sqz"]["finesse"], 1) == pytest.approx(75.3, abs=0.1)
    assert doc["fit"]["fit_pure"]["eta"] == pytest.approx(0.907, abs=5e-4)
    assert doc["fit"]["injected_db"] == pytest.approx(-11.0, abs=0.05)
    assert doc["inputs"]["measurement"]["sq_db"] == "-9.0"
    assert "projection_status" not in doc
    txt = (tmp_path / "report.txt").read_text()
    assert "cavities.sqz.finesse = 75.349" in txt


def test_report_without_budget_flags_projection(tmp_path):
    cfg = tmp_path / "nobudget.cfg"
    cfg.write_text(GEO_NO_BUDGET)
    assert run(["report", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["projection_status"] == "missing"


def test_report_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["report", "--out", str(a)]) == 0
    assert run(["report", "--out", str(b)]) == 0
    for name in ("report.json", "report.txt"):
        assert body(a / name) == body(b / name)
    assert run(["spectrum", "--out", str(a)]) == 0
    assert run(["spectrum", "--out", str(b)]) == 0
    assert body(a / "spectrum.csv") == body(b / "spectrum.csv")
    assert (a / "spectrum.png").read_bytes() == (b / "spectrum.png").read_bytes()
    # the timestamp is the only line that differs, and it is the first one
    for name in ("report.json", "spectrum.csv"):
        first = (a / name).read_text().splitlines()
        assert sum("generated" in ln for ln in first) == 1
