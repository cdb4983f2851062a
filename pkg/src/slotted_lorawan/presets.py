"""Named reproduction presets, backed by TOML data files in ``preset_data/``.

Each preset yields a header and a list of row dicts, ready for CSV or JSON
emission by the CLI.  Runs are deterministic given the seed.
"""

from __future__ import annotations

import math
import statistics
import sys
from dataclasses import dataclass
from importlib import resources
from typing import Any

from . import analytic
from .clock import sync_error_stats
from .errors import ConfigInvalid
from .scenario import Scenario
from .simulator import MetricsReport, period_for_load, run, simulate

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

PRESET_NAMES = (
    "fig5_curves",
    "fig6a_sf12",
    "fig6b_sf6",
    "table2_tests",
    "table3_comparison",
    "table4_tb_sweep",
    "table1_sync",
)


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str
    description: str
    data: dict[str, Any]

    @property
    def base(self) -> Scenario:
        return Scenario.from_dict(self.data.get("base", {}))

    def section(self, key: str) -> dict[str, Any]:
        return self.data.get(key, {})


@dataclass(frozen=True)
class PresetResult:
    header: tuple[str, ...]
    rows: list[dict[str, Any]]


def load_preset(name: str) -> Preset:
    if name not in PRESET_NAMES:
        raise ConfigInvalid("unknown-preset", f"{name!r}; choose from {', '.join(PRESET_NAMES)}")
    text = resources.files(__package__).joinpath("preset_data", f"{name}.toml").read_text(encoding="utf-8")
    data = tomllib.loads(text)
    meta = data.get("preset", {})
    return Preset(name=meta["name"], kind=meta["kind"], description=meta["description"], data=data)


# -- individual kinds ---------------------------------------------------------------


def _curves(p: Preset, seed: int) -> PresetResult:
    c = p.section("curves")
    k = analytic.overhead_factor(analytic.OverheadModel(c["t_payload_s"], c["t_ack_s"], c["rx1_delay_s"]))
    rows = [dict(zip(analytic.CURVE_HEADER, r)) for r in analytic.curves(c["g_min"], c["g_max"], c["g_steps"], k)]
    return PresetResult(analytic.CURVE_HEADER, rows)


LOAD_SWEEP_HEADER = ("g_target", "seed", "packets_sent", "success_rate", "g_payload", "s_payload", "s_closed_form")


def _load_sweep(p: Preset, seed: int) -> PresetResult:
    sw = p.section("sweep")
    base = p.base.with_overrides({"scenario.n_nodes": sw["n_nodes"]})
    t_us = base.uplink_toa_us
    k = base.exchange_us / t_us
    rows = []
    for g in sw["g"]:
        scn = base.with_overrides(
            {
                "scenario.tx_period_s": period_for_load(g, sw["n_nodes"], t_us),
                "scenario.duration_s": sw["packets_per_point"] * t_us / 1e6 / g,
            }
        )
        r = run(scn, seed)
        rows.append(
            {
                "g_target": g,
                "seed": seed,
                "packets_sent": r.packets_sent,
                "success_rate": r.success_rate,
                "g_payload": r.g_payload,
                "s_payload": r.s_payload,
                "s_closed_form": float(analytic.confirmed_lorawan_throughput(r.g_payload, k)),
            }
        )
    return PresetResult(LOAD_SWEEP_HEADER, rows)


TESTS_HEADER = ("test",) + (
    "seed",
    "n_nodes",
    "tx_period_s",
    "duration_s",
    "packets_sent",
    "packets_acked",
    "success_rate",
    "g_payload",
    "g_full",
    "g_per_second",
    "s_payload",
    "s_full",
    "s_per_second",
    "collisions",
    "slot_errors",
)


def _tests(p: Preset, seed: int) -> PresetResult:
    rows = []
    for t in p.data["tests"]:
        scn = p.base.with_overrides(
            {
                "scenario.name": t["name"],
                "scenario.n_nodes": t["n_nodes"],
                "scenario.tx_period_s": t["tx_period_s"],
                "scenario.duration_s": t["duration_s"],
            }
        )
        r = run(scn, seed)
        row = {k: getattr(r, k) for k in TESTS_HEADER if hasattr(r, k)}
        row.update(test=t["name"], tx_period_s=t["tx_period_s"])
        rows.append(row)
    return PresetResult(TESTS_HEADER, rows)


@dataclass(frozen=True)
class Table3Result:
    slotted: MetricsReport
    pure: MetricsReport

    @property
    def ratio(self) -> float:
        """S(slotted) / S(pure confirmed), payload normalization; NaN if undefined."""
        if self.pure.s_payload == 0:
            return math.nan
        return self.slotted.s_payload / self.pure.s_payload


def preset_table3(seed: int, base: Scenario | None = None) -> Table3Result:
    """Run the comparison pair with identical traffic seeds."""
    if base is None:
        base = load_preset("table3_comparison").base
    slotted = run(base.with_overrides({"scenario.mode": "slotted"}), seed)
    pure = run(base.with_overrides({"scenario.mode": "pure-confirmed"}), seed)
    return Table3Result(slotted, pure)


@dataclass(frozen=True)
class RatioSummary:
    n: int
    mean: float
    stdev: float
    ci95_low: float
    ci95_high: float


def summarize_ratios(ratios: list[float]) -> RatioSummary:
    """Mean and normal-approximation 95% interval over finite ratios."""
    xs = [r for r in ratios if math.isfinite(r)]
    if not xs:
        return RatioSummary(0, math.nan, math.nan, math.nan, math.nan)
    mean = statistics.fmean(xs)
    sd = statistics.stdev(xs) if len(xs) > 1 else 0.0
    half = 1.96 * sd / math.sqrt(len(xs))
    return RatioSummary(len(xs), mean, sd, mean - half, mean + half)


TABLE3_HEADER = (
    "seed",
    "packets_sent_slotted",
    "packets_sent_pure",
    "success_slotted",
    "success_pure",
    "g_slotted",
    "g_pure",
    "s_slotted",
    "s_pure",
    "ratio",
    "ratio_ci95_low",
    "ratio_ci95_high",
)


def _comparison(p: Preset, seed: int) -> PresetResult:
    n = p.section("comparison").get("seeds", 10)
    rows, ratios = [], []
    for s in range(seed, seed + n):
        res = preset_table3(s, p.base)
        ratios.append(res.ratio)
        rows.append(
            {
                "seed": s,
                "packets_sent_slotted": res.slotted.packets_sent,
                "packets_sent_pure": res.pure.packets_sent,
                "success_slotted": res.slotted.success_rate,
                "success_pure": res.pure.success_rate,
                "g_slotted": res.slotted.g_payload,
                "g_pure": res.pure.g_payload,
                "s_slotted": res.slotted.s_payload,
                "s_pure": res.pure.s_payload,
                "ratio": res.ratio,
            }
        )
    summ = summarize_ratios(ratios)
    rows.append(
        {
            "seed": "mean",
            "packets_sent_slotted": statistics.fmean(r["packets_sent_slotted"] for r in rows),
            "packets_sent_pure": statistics.fmean(r["packets_sent_pure"] for r in rows),
            "success_slotted": statistics.fmean(r["success_slotted"] for r in rows),
            "success_pure": statistics.fmean(r["success_pure"] for r in rows),
            "g_slotted": statistics.fmean(r["g_slotted"] for r in rows),
            "g_pure": statistics.fmean(r["g_pure"] for r in rows),
            "s_slotted": statistics.fmean(r["s_slotted"] for r in rows),
            "s_pure": statistics.fmean(r["s_pure"] for r in rows),
            "ratio": summ.mean,
            "ratio_ci95_low": summ.ci95_low,
            "ratio_ci95_high": summ.ci95_high,
        }
    )
    return PresetResult(TABLE3_HEADER, rows)


TB_HEADER = (
    "t_b_ms",
    "seed",
    "slotted_uplinks",
    "slot_errors",
    "slot_success_rate",
    "packets_sent",
    "success_rate",
    "s_payload",
)


def _tb_sweep(p: Preset, seed: int) -> PresetResult:
    rows = []
    for tb in p.section("sweep")["t_b_ms"]:
        r = run(p.base.with_overrides({"slot.t_b_us": int(tb) * 1000}), seed)
        rows.append({k: getattr(r, k) for k in TB_HEADER if hasattr(r, k)} | {"t_b_ms": tb})
    return PresetResult(TB_HEADER, rows)


SYNC_HEADER = ("n_nodes", "seed", "count", "min_ms", "max_ms", "mean_ms", "p25_ms", "median_ms", "p75_ms")


def sync_run(base: Scenario, n_nodes: int, seed: int, min_samples: int, duration_factor: float = 1.5):
    """Stats over the first ``min_samples`` sync samples of one run."""
    period = base.scenario.tx_period_s
    duration = math.ceil(duration_factor * min_samples * period / n_nodes)
    while True:
        log = simulate(base.with_overrides({"scenario.n_nodes": n_nodes, "scenario.duration_s": duration}), seed)
        if len(log.sync_samples) >= min_samples or n_nodes == 0:
            break
        duration = math.ceil(duration * 1.5)
    return sync_error_stats(log.sync_samples[:min_samples])


def _sync(p: Preset, seed: int) -> PresetResult:
    sy = p.section("sync")
    rows = []
    for n in sy["n_nodes"]:
        st = sync_run(p.base, n, seed, sy["min_samples"], sy.get("duration_factor", 1.5))
        row = {"n_nodes": n, "seed": seed, "count": st.count}
        for key in ("min", "max", "mean", "p25", "median", "p75"):
            row[f"{key}_ms"] = getattr(st, key) / 1000.0
        rows.append(row)
    return PresetResult(SYNC_HEADER, rows)


_KINDS = {
    "curves": _curves,
    "load_sweep": _load_sweep,
    "tests": _tests,
    "comparison": _comparison,
    "tb_sweep": _tb_sweep,
    "sync": _sync,
}


def run_preset(name: str, seed: int = 0) -> PresetResult:
    p = load_preset(name)
    return _KINDS[p.kind](p, seed)


__all__ = [
    "PRESET_NAMES",
    "Preset",
    "PresetResult",
    "Table3Result",
    "RatioSummary",
    "load_preset",
    "preset_table3",
    "run_preset",
    "summarize_ratios",
    "sync_run",
]
