import math

import pytest

from noonsim import config as CF
from noonsim.errors import ConfigError
from noonsim.pairgen import spurious_ratio

MINIMAL = """
device = "two-source-mzi"
[pump]
wavelength_nm = 1549.6
power_mw = 1.0
[experiment]
seed = 1
"""


def test_preset_loads_with_paper_values():
    cfg = CF.load_config("paper")
    assert cfg.pump.wavelengths_nm == (1549.6,) and cfg.pump.powers_mw == (15.0,)
    assert cfg.process.delta_nm == 6.4
    assert cfg.detection.eta_s_db == -24.2 and cfg.detection.eta_i_db == -25.5
    assert cfg.detection.dark_hz == 1000.0 and cfg.detection.gate_ps == 650.0
    assert cfg.experiment.splitter_R == 0.502
    assert spurious_ratio(cfg.circuit, cfg.pump, cfg.process) == pytest.approx((0.025, 0.021), abs=1e-12)
    sources = [cfg.circuit.components[i] for i in cfg.circuit.source_segments if cfg.circuit.components[i].tag == "source"]
    assert [s.length_mm for s in sources] == [5.2, 5.2]
    assert sources[0].loss_db_per_cm == 4.1
    assert cfg.circuit.coupling_loss_db == 7.3


def test_delta_override_switches_process():
    cfg = CF.load_config("paper", delta_nm=0.0)
    assert cfg.process.kind == "degenerate" and cfg.pump.scheme == "dual"
    assert cfg.pump.wavelengths_nm[1] - cfg.pump.wavelengths_nm[0] == pytest.approx(22.4)
    assert cfg.brightness.b_khz_per_nm_mw2 == 2.5
    for d in (3.2, 9.6):
        assert CF.load_config("paper", delta_nm=d).process.delta_nm == d


def test_hash_stable_under_key_order():
    a = CF.parse_config(MINIMAL)
    b = CF.parse_config("""
device = "two-source-mzi"
[experiment]
seed = 1
[pump]
power_mw = 1.0
wavelength_nm = 1549.6
""")
    assert a.config_hash == b.config_hash
    c = CF.parse_config(MINIMAL.replace("power_mw = 1.0", "power_mw = 2.0"))
    assert c.config_hash != a.config_hash


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match=r"pump\.colour.*line 6, column 1"):
        CF.parse_config(MINIMAL.replace("power_mw = 1.0", "power_mw = 1.0\ncolour = 'red'"))


def test_unknown_section():
    with pytest.raises(ConfigError, match="laser"):
        CF.parse_config(MINIMAL + "\n[laser]\nx = 1\n")


def test_syntax_error_has_line_and_column():
    with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
        CF.parse_config("[pump\n")


def test_missing_file_names_path(tmp_path):
    p = tmp_path / "absent.toml"
    with pytest.raises(ConfigError, match="absent.toml"):
        CF.load_config(p)


def test_wdm_detuning_must_match_process():
    text = MINIMAL + "wdm = { delta_nm = 3.2 }\n"
    with pytest.raises(ConfigError, match="disagrees"):
        CF.parse_config(text)


def test_ratio_needs_template():
    text = MINIMAL + "[process]\ngamma_io_ratio_sq = 0.02\n"
    cfg = CF.parse_config(text)
    assert spurious_ratio(cfg.circuit, cfg.pump, cfg.process) == pytest.approx((0.02, 0.02), abs=1e-12)
    with pytest.raises(ConfigError, match="conflicts"):
        CF.parse_config(text.replace('device = "two-source-mzi"',
                                     'device = { template = "two-source-mzi", io_length_mm = 0.7 }'))


def test_invalid_values():
    with pytest.raises(ConfigError):
        CF.parse_config(MINIMAL + "splitter_R = 1.5\n")
    with pytest.raises(ConfigError):
        CF.parse_config(MINIMAL.replace("[pump]", "[pump]\nscheme = 'triple'"))
    with pytest.raises(ConfigError):
        CF.parse_config(MINIMAL + "[process]\nprocess = 'degenerate'\n")


def test_lambda_p_of_dual_pump_is_harmonic_mean():
    cfg = CF.load_config("paper", delta_nm=0.0)
    l1, l2 = cfg.pump.wavelengths_nm
    assert 2 / cfg.lambda_p_nm == pytest.approx(1 / l1 + 1 / l2)
    assert not math.isnan(cfg.lambda_p_nm)
