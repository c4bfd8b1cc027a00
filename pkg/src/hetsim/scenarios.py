"""Seeded case-study experiments.

Three experiments are provided:

* :func:`run_hybrid_vs_digital` -- multiuser massive MIMO over geometric
  channels, comparing fully digital BD with its hybrid analog-digital
  counterpart on identical draws.
* :func:`run_mobile_relay` -- a macro BS serving in-vehicle UEs either
  directly (BD) or through a roof-mounted relay array (SVD beamforming).
* :func:`associate_dual_band` / :func:`sweep_dual_band` -- layered
  mmWave/microwave small-cell association.

Every random quantity is drawn from ``substream(seed, trial, link)``, so
results do not depend on evaluation order or worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ._stats import MonteCarloStats, map_trials
from .beamforming import (InfeasibleError, bd_precoder, hybrid_precoder,
                          leakage_ratios, sum_rate, svd_precoder)
from .channel import (GeometricChannelSpec, LinkBudget, db_to_linear,
                      draw_geometric_channel, draw_rayleigh_channel,
                      link_gain_db, noise_power_w, substream)

__all__ = [
    "HybridCaseConfig",
    "RelayCaseConfig",
    "MmWaveRateModel",
    "DualBandConfig",
    "UeDistribution",
    "AssociationDecision",
    "ScenarioResult",
    "HYBRID_COLUMNS",
    "RELAY_COLUMNS",
    "DUAL_BAND_COLUMNS",
    "run_hybrid_vs_digital",
    "run_mobile_relay",
    "associate_dual_band",
    "region_index",
    "sweep_dual_band",
]

HYBRID_COLUMNS = (
    "snr_db", "digital_sum_rate", "hybrid_sum_rate", "hybrid_sum_rate_no_rx_combining",
    "digital_se", "hybrid_se", "min_paired_ratio", "n",
)
RELAY_COLUMNS = ("M", "direct_rate_bps", "relay_rate_bps", "direct_se", "relay_se", "n")
DUAL_BAND_COLUMNS = (
    "a_m", "b_m", "frac_inner", "frac_middle", "frac_outer",
    "rate_inner_bps", "rate_middle_bps", "rate_outer_bps",
    "macro_interference_mmwave_w", "n",
)


@dataclass
class ScenarioResult:
    """Table rows plus the raw per-trial samples they were reduced from."""

    columns: Tuple[str, ...]
    rows: List[Dict[str, float]]
    samples: Dict[str, np.ndarray] = field(default_factory=dict)
    diagnostics: List[str] = field(default_factory=list)


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Hybrid vs digital xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
@dataclass(frozen=True)
class HybridCaseConfig:
    n_tx: int = 128
    n_rf_tx: int = 64
    n_rx: int = 32
    n_rf_rx: int = 16
    users: int = 4
    streams_per_user: int = 8
    paths: int = 16
    snr_grid_db: Tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = 100

    def validate(self) -> None:
        """Raise :class:`InfeasibleError` naming the first violated constraint."""
        K, S = self.users, self.streams_per_user
        for name in ("n_tx", "n_rf_tx", "n_rx", "n_rf_rx", "users", "streams_per_user", "paths"):
            if getattr(self, name) < 1:
                raise InfeasibleError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.trials < 0:
            raise InfeasibleError(f"trials must be >= 0, got {self.trials}")
        if self.n_rf_tx > self.n_tx:
            raise InfeasibleError(f"n_rf_tx (={self.n_rf_tx}) must not exceed n_tx (={self.n_tx})")
        if K * S > self.n_rf_tx:
            raise InfeasibleError(
                f"users*streams_per_user (={K * S}) must not exceed n_rf_tx (={self.n_rf_tx})")
        if self.n_rf_rx > self.n_rx:
            raise InfeasibleError(f"n_rf_rx (={self.n_rf_rx}) must not exceed n_rx (={self.n_rx})")
        if S > self.n_rf_rx:
            raise InfeasibleError(
                f"streams_per_user (={S}) must not exceed n_rf_rx (={self.n_rf_rx})")
        if self.n_tx - (K - 1) * self.n_rx < S:
            raise InfeasibleError(
                f"digital BD needs n_tx - (users-1)*n_rx >= streams_per_user, got "
                f"{self.n_tx} - {(K - 1) * self.n_rx} < {S}")
        exact = self.n_rf_tx >= 2 * K * S and self.n_rf_rx >= 2 * S
        if not exact and self.n_rf_tx - (K - 1) * self.n_rf_rx < S:
            raise InfeasibleError(
                f"hybrid BD needs n_rf_tx - (users-1)*n_rf_rx >= streams_per_user, got "
                f"{self.n_rf_tx} - {(K - 1) * self.n_rf_rx} < {S}")


def _hybrid_trial(config: HybridCaseConfig, seed: int, trial: int) -> np.ndarray:
    spec = GeometricChannelSpec(config.n_tx, config.n_rx, config.paths)
    Hs = [draw_geometric_channel(spec, substream(seed, trial, k)).matrix
          for k in range(config.users)]
    out = np.empty((len(config.snr_grid_db), 3))
    for i, snr_db in enumerate(config.snr_grid_db):
        power = 10.0 ** (snr_db / 10.0)
        digital, _ = bd_precoder(Hs, config.streams_per_user, power, 1.0)
        hybrid = hybrid_precoder(Hs, config.n_rf_tx, config.streams_per_user, power, 1.0,
                                 n_rf_rx=config.n_rf_rx)
        out[i, 0] = sum_rate(Hs, digital, 1.0).sum_bits_per_s_per_hz
        out[i, 1] = sum_rate(Hs, hybrid, 1.0, combiners=hybrid.combiners).sum_bits_per_s_per_hz
        out[i, 2] = sum_rate(Hs, hybrid, 1.0).sum_bits_per_s_per_hz
    return out


def run_hybrid_vs_digital(config: HybridCaseConfig, seed: int,
                          workers: int = 1) -> ScenarioResult:
    """Paired Monte Carlo comparison of digital BD and hybrid BD.

    SNR is total transmit power over per-antenna noise power. Each trial
    draws one geometric channel per user and feeds it to both designs at
    every SNR point. The hybrid rate is reported with its receive-side
    hybrid combiners and, separately, with ideal receive processing.
    """
    config.validate()
    samples = map_trials(partial(_hybrid_trial, config, seed), config.trials, workers)
    n_snr = len(config.snr_grid_db)
    data = np.stack(samples) if samples else np.zeros((0, n_snr, 3))
    rows = []
    if config.trials > 0:
        for i, snr_db in enumerate(config.snr_grid_db):
            d = MonteCarloStats.from_samples(data[:, i, 0])
            h = MonteCarloStats.from_samples(data[:, i, 1])
            h_norx = MonteCarloStats.from_samples(data[:, i, 2])
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(data[:, i, 0] > 0, data[:, i, 1] / data[:, i, 0], 1.0)
            rows.append({
                "snr_db": float(snr_db),
                "digital_sum_rate": d.mean,
                "hybrid_sum_rate": h.mean,
                "hybrid_sum_rate_no_rx_combining": h_norx.mean,
                "digital_se": d.standard_error,
                "hybrid_se": h.standard_error,
                "min_paired_ratio": float(ratio.min()),
                "n": d.n,
            })
    return ScenarioResult(
        HYBRID_COLUMNS, rows,
        {"digital": data[:, :, 0], "hybrid": data[:, :, 1],
         "hybrid_no_rx_combining": data[:, :, 2]})


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Mobile relay xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
@dataclass(frozen=True)
class RelayCaseConfig:
    """Mobile relay study. The vehicle's long side is perpendicular to the
    BS-vehicle line; the BS sits at the origin."""

    budget: LinkBudget = field(default_factory=LinkBudget)
    bs_distance_m: float = 1000.0
    vehicle_length_m: float = 25.91
    vehicle_width_m: float = 3.10
    ue_antennas: int = 2
    relay_antenna_counts: Tuple[int, ...] = (4, 8, 16)
    bs_antennas: int = 64
    users: int = 4
    trials: int = 100

    def validate(self) -> None:
        if self.users < 1 or self.ue_antennas < 1:
            raise InfeasibleError("users and ue_antennas must be >= 1")
        if self.bs_antennas <= self.users * self.ue_antennas:
            raise InfeasibleError(
                f"bs_antennas (={self.bs_antennas}) must exceed users*ue_antennas "
                f"(={self.users * self.ue_antennas}) for BD")
        if not self.relay_antenna_counts or min(self.relay_antenna_counts) < 1:
            raise InfeasibleError("relay_antenna_counts must be a non-empty list of counts >= 1")
        if self.trials < 0:
            raise InfeasibleError(f"trials must be >= 0, got {self.trials}")
        if not (self.vehicle_length_m > 0 and self.vehicle_width_m > 0):
            raise InfeasibleError("vehicle dimensions must be positive")
        if not self.bs_distance_m > self.vehicle_width_m / 2:
            raise InfeasibleError("the BS must lie outside the vehicle")


def ue_positions(config: RelayCaseConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform UE positions inside the vehicle rectangle (``users x 2``)."""
    dx = rng.uniform(-config.vehicle_width_m / 2, config.vehicle_width_m / 2, config.users)
    dy = rng.uniform(-config.vehicle_length_m / 2, config.vehicle_length_m / 2, config.users)
    return np.column_stack([config.bs_distance_m + dx, dy])


def _relay_trial(config: RelayCaseConfig, seed: int, trial: int):
    budget = config.budget
    noise = noise_power_w(budget)
    power = budget.tx_power_w
    K = config.users

    pos = ue_positions(config, substream(seed, trial, 0))
    gains = db_to_linear(link_gain_db(np.hypot(pos[:, 0], pos[:, 1]), budget))
    Hs = [np.sqrt(gains[k]) * draw_rayleigh_channel(
              config.ue_antennas, config.bs_antennas, substream(seed, trial, 1 + k),
              budget.carrier_hz).matrix
          for k in range(K)]
    direct, _ = bd_precoder(Hs, config.ue_antennas, power, noise)
    direct_rate = sum_rate(Hs, direct, noise).sum_bits_per_s_per_hz
    leak = leakage_ratios(Hs, direct.beams).max() if K > 1 else 0.0

    # nested rows: the M-antenna relay sees the first M rows of one draw
    g_relay = db_to_linear(link_gain_db(config.bs_distance_m, budget))
    G = np.sqrt(g_relay) * draw_rayleigh_channel(
        max(config.relay_antenna_counts), config.bs_antennas,
        substream(seed, trial, 1 + K), budget.carrier_hz).matrix
    relay_rates = np.empty(len(config.relay_antenna_counts))
    for i, M in enumerate(config.relay_antenna_counts):
        precoder, _, _ = svd_precoder(G[:M], power, noise)
        relay_rates[i] = sum_rate([G[:M]], precoder, noise).sum_bits_per_s_per_hz
    return direct_rate, relay_rates, leak


def run_mobile_relay(config: RelayCaseConfig, seed: int, workers: int = 1) -> ScenarioResult:
    """Direct BD service of in-vehicle UEs versus a relay array on the vehicle.

    The in-vehicle mmWave hop is treated as having unlimited capacity, so
    the relay rate is the capacity of the BS-relay link. Rates are in bit/s.
    """
    config.validate()
    out = map_trials(partial(_relay_trial, config, seed), config.trials, workers)
    bw = config.budget.bandwidth_hz
    n_m = len(config.relay_antenna_counts)
    direct = np.array([o[0] for o in out]) * bw
    relay = np.array([o[1] for o in out]).reshape(-1, n_m) * bw
    leak = np.array([o[2] for o in out])
    rows = []
    if config.trials > 0:
        d = MonteCarloStats.from_samples(direct)
        for i, M in enumerate(config.relay_antenna_counts):
            r = MonteCarloStats.from_samples(relay[:, i])
            rows.append({
                "M": int(M),
                "direct_rate_bps": d.mean,
                "relay_rate_bps": r.mean,
                "direct_se": d.standard_error,
                "relay_se": r.standard_error,
                "n": d.n,
            })
    return ScenarioResult(RELAY_COLUMNS, rows,
                          {"direct": direct, "relay": relay, "leakage": leak})


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Dual-band association xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
SMALL_CELL, MACRO = "small_cell", "macro"
MMWAVE, MICROWAVE = "mmwave", "microwave"
_LEGAL_PAIRS = {(SMALL_CELL, MMWAVE), (SMALL_CELL, MICROWAVE), (MACRO, MICROWAVE)}
# region index -> decision
_REGIONS = ((SMALL_CELL, MMWAVE), (SMALL_CELL, MICROWAVE), (MACRO, MICROWAVE))


@dataclass(frozen=True)
class AssociationDecision:
    node: str
    band: str

    def __post_init__(self):
        if (self.node, self.band) not in _LEGAL_PAIRS:
            raise ValueError(f"illegal association ({self.node}, {self.band})")


@dataclass(frozen=True)
class MmWaveRateModel:
    """Fixed spectral efficiency over the mmWave carrier bandwidth."""

    spectral_efficiency: float = 4.0
    bandwidth_hz: float = 500e6

    @property
    def rate_bps(self) -> float:
        return self.spectral_efficiency * self.bandwidth_hz


@dataclass(frozen=True)
class DualBandConfig:
    inner_radius_a_m: float = 50.0
    middle_radius_b_m: float = 150.0
    small_cell_position: Tuple[float, float] = (400.0, 0.0)
    macro_position: Tuple[float, float] = (0.0, 0.0)
    microwave_budget: LinkBudget = field(default_factory=LinkBudget)
    small_cell_tx_power_w: float = 1.0
    mmwave_rate_model: MmWaveRateModel = field(default_factory=MmWaveRateModel)

    def validate(self) -> None:
        a, b = self.inner_radius_a_m, self.middle_radius_b_m
        if not 0 < a < b:
            raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
        if not self.small_cell_tx_power_w >= 0:
            raise ValueError("small_cell_tx_power_w must be non-negative")


@dataclass(frozen=True)
class UeDistribution:
    """UEs uniform on a disc around the small cell, radius ``radius_factor * b``."""

    count: int = 10000
    radius_factor: float = 1.5


def region_index(distance_m, a: float, b: float) -> np.ndarray:
    """0 (inner), 1 (middle) or 2 (outer); boundaries go to the inner region."""
    r = np.asarray(distance_m, dtype=float)
    return np.where(r <= a, 0, np.where(r <= b, 1, 2))


def associate_dual_band(ue_position, config: DualBandConfig) -> AssociationDecision:
    """Layered association by distance ``r`` to the small cell.

    ``r <= a``: small cell on mmWave; ``a < r <= b``: small cell on
    microwave; ``r > b``: macro on microwave.
    """
    config.validate()
    r = math.dist(tuple(ue_position), tuple(config.small_cell_position))
    node, band = _REGIONS[int(region_index(r, config.inner_radius_a_m,
                                           config.middle_radius_b_m))]
    return AssociationDecision(node, band)


def band_overlap(band_a: str, band_b: str) -> float:
    """Fraction of spectrum shared by two bands (they are disjoint or equal)."""
    return 1.0 if band_a == band_b else 0.0


def _sinr_rate(signal_w, interference_w, noise_w, bandwidth_hz):
    # single-antenna case of log2 det(I + Q^{-1} S)
    return bandwidth_hz * np.log2(1.0 + signal_w / (noise_w + interference_w))


def sweep_dual_band(grid: Sequence[Tuple[float, float]], config: DualBandConfig,
                    ue_distribution: UeDistribution, seed: int) -> ScenarioResult:
    """
    Region fractions and per-region mean rates over an ``(a, b)`` grid.

    One set of unit-disc UE samples is drawn from ``substream(seed, 0, 0)``
    and rescaled for every grid point, so grid points are compared on
    paired draws. Middle- and outer-region rates are interference limited:
    the small cell and the macro share the microwave band. The macro
    interference seen by mmWave UEs is evaluated through the band overlap
    and reported as its maximum over those UEs.

    Grid points with ``a >= b`` (or non-positive ``a``) are skipped and a
    message is appended to ``diagnostics``.
    """
    if len(grid) == 0:
        raise ValueError("the (a, b) grid is empty")
    n = int(ue_distribution.count)
    rng = substream(seed, 0, 0)
    unit_r = np.sqrt(rng.uniform(0.0, 1.0, n))
    theta = rng.uniform(0.0, 2.0 * np.pi, n)

    budget = config.microwave_budget
    noise = noise_power_w(budget)
    sc = np.asarray(config.small_cell_position, dtype=float)
    mc = np.asarray(config.macro_position, dtype=float)
    mm_rate = config.mmwave_rate_model.rate_bps

    rows, diagnostics = [], []
    for a, b in grid:
        a, b = float(a), float(b)
        if not 0 < a < b:
            diagnostics.append(f"skipped grid point a={a!r}, b={b!r}: need 0 < a < b")
            continue
        radius = ue_distribution.radius_factor * b
        pos = sc + (radius * unit_r)[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
        d_sc = np.hypot(*(pos - sc).T)
        d_mc = np.hypot(*(pos - mc).T)
        region = region_index(d_sc, a, b)

        # 1 m floor keeps the log-distance model finite at the sites
        g_sc = db_to_linear(link_gain_db(np.maximum(d_sc, 1.0), budget))
        g_mc = db_to_linear(link_gain_db(np.maximum(d_mc, 1.0), budget))
        p_sc = config.small_cell_tx_power_w * g_sc
        p_mc = budget.tx_power_w * g_mc

        macro_into_mmwave = p_mc * band_overlap(MMWAVE, MICROWAVE)
        rate = np.where(
            region == 0, mm_rate,
            np.where(region == 1,
                     _sinr_rate(p_sc, p_mc, noise, budget.bandwidth_hz),
                     _sinr_rate(p_mc, p_sc, noise, budget.bandwidth_hz)))

        row = {"a_m": a, "b_m": b}
        for i, name in enumerate(("inner", "middle", "outer")):
            mask = region == i
            row[f"frac_{name}"] = float(mask.mean()) if n else float("nan")
            row[f"rate_{name}_bps"] = float(rate[mask].mean()) if mask.any() else float("nan")
        inner = region == 0
        row["macro_interference_mmwave_w"] = (
            float(macro_into_mmwave[inner].max()) if inner.any() else 0.0)
        row["n"] = n
        rows.append(row)
    return ScenarioResult(DUAL_BAND_COLUMNS, rows, diagnostics=diagnostics)
