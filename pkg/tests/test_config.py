import json
import math

import pytest

from soundersim.config import (
    SounderConfig,
    count_channels,
    derive_metrics,
    link_budget,
    max_doppler,
    validate_config,
)
from soundersim.errors import InvalidConfigError


def scenario1():
    return SounderConfig(
        f_c=5.675e9, f_s=500e6, L=1024, F=819, M=8, K=3, P=9216, R=2221472,
        n_T=(1,) + (0,) * 8, n_R=(0,) + (16,) * 8, T_sw=10e-6,
    )


def scenario2():
    return SounderConfig(
        f_c=5.675e9, f_s=500e6, L=1024, F=819, M=8, K=3, P=9216, R=14348416,
        n_T=(16,) * 8, n_R=(16,) * 8, T_sw=10e-6,
    )


def scenario3():
    return SounderConfig(
        f_c=5.6e9, f_s=500e6, L=8192, F=4095, M=64, K=2, P=49152, R=1353120,
        n_T=(1, 1), n_R=(1, 1), T_sw=10e-6,
    )


def test_scenario1_metrics():
    m = derive_metrics(scenario1())
    assert m.bandwidth == pytest.approx(500e6 * 819 / 1024)  # 399.9 MHz
    assert m.snapshot_rate == pytest.approx(200.0)
    assert m.coherence_time == pytest.approx(557.056e-6)
    assert m.channels_unique == 128
    assert m.time_slots == 16
    assert m.max_delay_spread == pytest.approx(1024 / 500e6)  # 2.048 us
    assert m.processing_gain_db == pytest.approx(10 * math.log10(8 * 1024))


def test_scenario3_metrics():
    m = derive_metrics(scenario3())
    assert m.bandwidth == pytest.approx(500e6 * 4095 / 8192)  # 249.9 MHz
    assert m.snapshot_rate == pytest.approx(200.0)
    assert m.max_delay_spread == pytest.approx(8192 / 500e6)  # 16.4 us
    assert m.processing_gain_db == pytest.approx(57.1957, abs=1e-3)
    assert m.channels_unique == 1


def test_channel_counts():
    assert count_channels((1,) + (0,) * 8, (0,) + (16,) * 8) == {
        "total": 128, "unique": 128, "time_slots": 16,
    }
    c2 = count_channels((16,) * 8, (16,) * 8)
    assert c2["total"] == 14336
    assert c2["unique"] == 7168
    assert c2["time_slots"] == 2048
    # full deployment: eight 16-antenna panels plus four standalone nodes
    full = count_channels((16,) * 8 + (1,) * 4, (16,) * 8 + (1,) * 4)
    assert full["unique"] == 7686


def test_count_channels_rejects_bad_vectors():
    with pytest.raises(InvalidConfigError):
        count_channels((1, 2), (1,))
    with pytest.raises(InvalidConfigError):
        count_channels((1, -1), (1, 1))


def test_validate_scenario1_clean():
    report = validate_config(
        scenario1(), {"tau0_max": 100e-9, "dtau_max": 1e-6}
    )
    assert report.violations == []


def test_validate_flags_short_discard_window():
    cfg = scenario1()
    bad = SounderConfig(**{**_asdict(cfg), "P": 16})
    report = validate_config(bad, {"tau0_max": 100e-9, "dtau_max": 1e-6})
    assert any("discard" in v for v in report.violations)


def test_validate_flags_aliasing():
    report = validate_config(scenario1(), {"dtau_max": 3e-6})
    assert any("aliasing" in v for v in report.violations)


def test_headroom_warning_scenario3():
    # M = 64, K = 2 leaves 4 bits of growth beyond the 2 spare bits
    report = validate_config(scenario3(), {})
    assert any("headroom" in w for w in report.warnings)
    assert validate_config(scenario1(), {}).warnings == []


def test_max_doppler_limits():
    d1 = max_doppler(scenario1())
    assert d1["per_snapshot"] == pytest.approx(200.0)
    assert d1["per_burst"] == pytest.approx(500e6 / 17408)  # 28.7 kHz
    d3 = max_doppler(scenario3())
    assert d3["averager_limit"] == pytest.approx(0.1 * 500e6 / (64 * 8192))  # 95.4 Hz


def test_link_budget_processing_gain():
    cfg = scenario1()
    noise_floor = -174 + 10 * math.log10(cfg.f_s * cfg.F / cfg.L) + 5.0
    budget = link_budget(cfg, path_loss_db=18.0 - noise_floor)  # snr = 0 dB
    assert budget["snr_db"] == pytest.approx(0.0, abs=1e-9)
    assert budget["snr_after_gain_db"] == pytest.approx(39.13, abs=0.01)


def test_metrics_json_and_table():
    m = derive_metrics(scenario1())
    data = json.loads(m.to_json())
    assert data["channels_unique"] == 128
    table = m.to_table()
    assert "200.000 Hz" in table
    assert "Data rate" in table  # row present; value uses the printed formula


def test_config_validation_errors():
    good = _asdict(scenario1())
    for field, value in [
        ("n_T", (0,) * 9), ("F", 2048), ("M", 0), ("K", -1), ("f_s", 0.0),
    ]:
        with pytest.raises(InvalidConfigError):
            SounderConfig(**{**good, field: value})
    with pytest.raises(InvalidConfigError):
        SounderConfig(**{**good, "n_T": (1, 0)})  # length mismatch


def _asdict(cfg: SounderConfig) -> dict:
    return {
        "f_c": cfg.f_c, "f_s": cfg.f_s, "L": cfg.L, "F": cfg.F, "M": cfg.M,
        "K": cfg.K, "P": cfg.P, "R": cfg.R, "n_T": cfg.n_T, "n_R": cfg.n_R,
        "T_sw": cfg.T_sw,
    }
