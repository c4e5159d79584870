"""Offered-load estimation from known-good traffic attenuation.

During an attack a site only sees what survives upstream loss.  Known-good
traffic (monitoring probes, heavy hitters) has a predictable normal rate, so
its attenuation gives the access fraction, and dividing the observed rate by
that fraction recovers the true offered load.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EstimationError

ALPHA_FLOOR = 1e-4  # emitted (with low-signal) under total upstream loss

DEFAULT_WINDOW_S = 60.0
DEFAULT_WINDOW_STEP_S = 10.0


class Confidence(str, Enum):
    OK = "ok"
    LOW_SIGNAL = "low-signal"


@dataclass(frozen=True)
class KnownGoodSpec:
    """Which sources count as known-good and what they normally send."""

    kind: str  # "monitor" or "heavy-hitter"
    members: frozenset[str]
    expected_rates: dict[str, float]  # per-source normal rate (q/s)

    def expected_rate_at(self, site_members: set[str]) -> float:
        """Expected known-good rate for one site, given which members the
        current catchment sends there."""
        return sum(
            self.expected_rates.get(m, 0.0)
            for m in self.members & site_members
        )


@dataclass(frozen=True)
class EstimatorSample:
    site_id: str
    window: tuple[float, float]
    t_observed: float
    t_known_observed: float
    t_known_offered: float

    def __post_init__(self):
        if min(self.t_observed, self.t_known_observed, self.t_known_offered) < 0:
            raise EstimationError("rates must be >= 0")
        if self.t_known_observed > self.t_observed + 1e-9:
            raise EstimationError(
                "known-good observed rate cannot exceed total observed rate"
            )


@dataclass(frozen=True)
class EstimateResult:
    site_id: str
    alpha: float
    t_offered_hat: float
    confidence: Confidence
    window: tuple[float, float] = (0.0, 0.0)


def estimate_alpha(sample: EstimatorSample) -> float:
    alpha, _ = _alpha_with_confidence(sample)
    return alpha


def _alpha_with_confidence(sample: EstimatorSample) -> tuple[float, Confidence]:
    if sample.t_known_offered <= 0:
        raise EstimationError(
            f"{sample.site_id}: no known-good traffic expected in this window; "
            "widen the window or fall back to another source"
        )
    if sample.t_known_observed <= 0:
        # Total upstream loss: the ratio degenerates, but "site saturated" is
        # still actionable, so report the floor instead of failing.
        return ALPHA_FLOOR, Confidence.LOW_SIGNAL
    alpha = min(1.0, sample.t_known_observed / sample.t_known_offered)
    return alpha, Confidence.OK


def estimate_offered(sample: EstimatorSample) -> EstimateResult:
    alpha, confidence = _alpha_with_confidence(sample)
    return EstimateResult(
        site_id=sample.site_id,
        alpha=alpha,
        t_offered_hat=sample.t_observed / alpha,
        confidence=confidence,
        window=sample.window,
    )


def load_ingest_csv(path) -> list[dict]:
    """Read the ingest time series: t,site_id,src_id,rate,is_known_good."""
    import csv

    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"t", "site_id", "src_id", "rate", "is_known_good"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise EstimationError(f"ingest CSV needs columns {sorted(required)}")
        for raw in reader:
            rows.append({
                "t": float(raw["t"]),
                "site_id": raw["site_id"],
                "src_id": raw["src_id"],
                "rate": float(raw["rate"]),
                "is_known_good": raw["is_known_good"].strip().lower() in ("1", "true", "yes"),
            })
    return rows


def estimate_from_trace(
    rows: list[dict],
    calibration_end: float,
    window: float = DEFAULT_WINDOW_S,
    step: float = DEFAULT_WINDOW_STEP_S,
) -> list[EstimateResult]:
    """Sliding-window estimates over an ingest series.

    Rows before ``calibration_end`` are attack-free and fix the expected
    known-good rate per site; each later window compares the known-good
    traffic that actually arrived against that expectation.
    """
    if not rows:
        raise EstimationError("empty ingest series")
    sites = sorted({r["site_id"] for r in rows})
    calib = [r for r in rows if r["t"] < calibration_end and r["is_known_good"]]
    if not calib:
        raise EstimationError("no known-good rows before calibration_end")
    expected = {}
    for site in sites:
        site_rows = [r for r in calib if r["site_id"] == site]
        times = sorted({r["t"] for r in site_rows})
        if times:
            expected[site] = sum(r["rate"] for r in site_rows) / len(times)

    t_end = max(r["t"] for r in rows)
    results = []
    start = calibration_end
    while start < t_end:
        stop = start + window
        for site in sites:
            if expected.get(site, 0.0) <= 0:
                continue
            in_win = [
                r for r in rows
                if r["site_id"] == site and start <= r["t"] < stop
            ]
            stamps = sorted({r["t"] for r in in_win})
            if not stamps:
                continue
            observed = sum(r["rate"] for r in in_win) / len(stamps)
            known = sum(
                r["rate"] for r in in_win if r["is_known_good"]
            ) / len(stamps)
            results.append(estimate_offered(EstimatorSample(
                site_id=site,
                window=(start, stop),
                t_observed=observed,
                t_known_observed=min(known, observed),
                t_known_offered=expected[site],
            )))
        start += step
    return results


def seasonal_baseline(
    history: list[tuple[float, float]],
    period_s: float = 24 * 3600.0,
    n_phases: int = 24,
    trim: float = 0.1,
):
    """Trimmed-mean seasonal model of a rate series.

    history is (t_seconds, rate) samples; the period is split into n_phases
    buckets and each bucket's expected rate is the mean of its samples after
    dropping the top and bottom ``trim`` fraction.  Needs at least two full
    periods of coverage.  Returns expected_rate(t) -> float.
    """
    if not history:
        raise EstimationError("empty history")
    times = np.array([t for t, _ in history], dtype=float)
    rates = np.array([r for _, r in history], dtype=float)
    if times.max() - times.min() < 2 * period_s:
        raise EstimationError(
            f"history spans {times.max() - times.min():.0f}s, "
            f"need >= 2 periods ({2 * period_s:.0f}s)"
        )
    phase = ((times % period_s) / period_s * n_phases).astype(int) % n_phases
    table = np.empty(n_phases)
    for p in range(n_phases):
        vals = np.sort(rates[phase == p])
        if vals.size == 0:
            raise EstimationError(f"no history samples in phase bucket {p}")
        k = int(vals.size * trim)
        trimmed = vals[k: vals.size - k] if vals.size - 2 * k > 0 else vals
        table[p] = float(trimmed.mean())

    def expected_rate(t: float) -> float:
        p = int((t % period_s) / period_s * n_phases) % n_phases
        return float(table[p])

    expected_rate.phase_table = table  # exposed for inspection/tests
    return expected_rate
