from __future__ import annotations

import numpy as np
import pytest

from slotted_lorawan.scenario import Scenario


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def ideal(scn: Scenario, **extra) -> Scenario:
    """No drift, no timestamp jitter, no RX-window error."""
    ov = {
        "clock.drift_ppm_min": 0.0,
        "clock.drift_ppm_max": 0.0,
        "jitter.family": "constant",
        "jitter.shift_us": 0.0,
        "jitter.rx_window_open_error_us": 0,
    }
    ov.update(extra)
    return scn.with_overrides(ov)


ACCEPTANCE: dict[str, str] = {}


def record(key: str, title: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE[key] = f"{'PASS' if ok else 'FAIL'}  {key:>3}  {title}: {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
            terminalreporter.write_line(ACCEPTANCE[key])
