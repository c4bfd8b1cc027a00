"""Channel synthesis and link-budget arithmetic.

Channels are stored as ``n_rx x n_tx`` complex matrices so that the received
signal is ``y = H x + n``. All random draws take an explicit
:class:`numpy.random.Generator`; use :func:`substream` to derive independent,
counter-addressed generators for a given (seed, trial, link).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.constants import Boltzmann

__all__ = [
    "UlaGeometry",
    "GeometricChannelSpec",
    "ChannelRealization",
    "LinkBudget",
    "substream",
    "ula_steering",
    "draw_geometric_channel",
    "draw_rayleigh_channel",
    "path_loss_db",
    "noise_power_dbm",
    "noise_power_w",
    "link_gain_db",
    "db_to_linear",
    "linear_to_db",
]


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(value)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator addressed by ``(seed, *key)``.

    The key is typically ``(trial, link)``. Streams with different keys are
    statistically independent and do not depend on the order in which they
    are created, so trials can be evaluated in any order or in parallel.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Domain types xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
@dataclass(frozen=True)
class UlaGeometry:
    """Uniform linear array with ``elements`` antennas.

    ``spacing_wavelengths`` below one half is accepted but triggers a
    warning, since grating-lobe free operation needs at least 0.5 lambda.
    """

    elements: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if int(self.elements) != self.elements or self.elements < 1:
            raise ValueError(f"elements must be a positive integer, got {self.elements!r}")
        if not self.spacing_wavelengths > 0:
            raise ValueError("spacing_wavelengths must be positive")
        if self.spacing_wavelengths < 0.5:
            warnings.warn(
                f"ULA spacing {self.spacing_wavelengths} wavelengths is below 0.5",
                stacklevel=3,
            )


@dataclass(frozen=True)
class GeometricChannelSpec:
    """Parameters of the L-scatterer geometric channel between two ULAs."""

    n_tx: int
    n_rx: int
    paths: int
    angle_domain: Tuple[float, float] = (-math.pi / 2, math.pi / 2)
    spacing_wavelengths: float = 0.5
    carrier_hz: float = 28e9

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "paths"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        lo, hi = self.angle_domain
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise ValueError(f"invalid angle_domain {self.angle_domain!r}")


@dataclass(frozen=True)
class ChannelRealization:
    matrix: np.ndarray
    carrier_hz: float

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2:
            raise ValueError(f"channel matrix must be 2-D, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("channel matrix has non-finite entries")
        if not self.carrier_hz > 0:
            raise ValueError("carrier_hz must be positive")

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def n_rx(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_tx(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class LinkBudget:
    """Macro-cell link budget. Defaults reproduce the mobile relay study."""

    tx_power_w: float = 5.0
    cell_radius_m: float = 1600.0
    reference_distance_m: float = 1600.0
    path_loss_exponent: float = 3.8
    mean_pl_at_d0_db: float = 134.0
    bandwidth_hz: float = 5e6
    carrier_hz: float = 1.8e9
    noise_figure_db: float = 5.0
    rx_antenna_gain_dbi: float = 10.3
    temperature_k: float = 300.0

    def __post_init__(self):
        # zero transmit power is a legal degenerate budget (all rates are 0)
        if not self.tx_power_w >= 0:
            raise ValueError("tx_power_w must be non-negative")
        for name in ("cell_radius_m", "reference_distance_m", "bandwidth_hz",
                     "carrier_hz", "temperature_k"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Array response and channel draws xxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def ula_steering(geometry: UlaGeometry, angle) -> np.ndarray:
    """
    Array response of a ULA.

    Parameters
    ----------
    geometry : UlaGeometry
        The array.
    angle : float or array_like
        Angle(s) from broadside, in radians.

    Returns
    -------
    np.ndarray
        Vector of length ``elements`` for a scalar angle, otherwise a matrix
        with one unit-norm steering vector per column.
    """
    angle = np.asarray(angle, dtype=float)
    if not np.all(np.isfinite(angle)):
        raise ValueError("angle must be finite")
    m = np.arange(geometry.elements)
    phase = 2.0 * np.pi * geometry.spacing_wavelengths * np.multiply.outer(m, np.sin(angle))
    return np.exp(1j * phase) / np.sqrt(geometry.elements)


def draw_geometric_channel(spec: GeometricChannelSpec,
                           rng: np.random.Generator) -> ChannelRealization:
    """Draw ``H = sqrt(n_tx n_rx / L) sum_l alpha_l a_rx(theta_l) a_tx(phi_l)^H``.

    Path gains are CN(0, 1) and departure/arrival angles are i.i.d. uniform
    over ``spec.angle_domain``, so that ``E ||H||_F^2 = n_tx n_rx``.
    """
    lo, hi = spec.angle_domain
    L = spec.paths
    gains = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2.0)
    aoa = rng.uniform(lo, hi, size=L)
    aod = rng.uniform(lo, hi, size=L)
    a_rx = ula_steering(UlaGeometry(spec.n_rx, spec.spacing_wavelengths), aoa)
    a_tx = ula_steering(UlaGeometry(spec.n_tx, spec.spacing_wavelengths), aod)
    scale = np.sqrt(spec.n_tx * spec.n_rx / L)
    H = scale * (a_rx * gains) @ a_tx.conj().T
    return ChannelRealization(H, spec.carrier_hz)


def draw_rayleigh_channel(n_rx: int, n_tx: int, rng: np.random.Generator,
                          carrier_hz: float = 1.8e9) -> ChannelRealization:
    """I.i.d. CN(0, 1) entries (zero mean, unit variance)."""
    if n_rx < 1 or n_tx < 1:
        raise ValueError("n_rx and n_tx must be >= 1")
    G = (rng.standard_normal((n_rx, n_tx))
         + 1j * rng.standard_normal((n_rx, n_tx))) / np.sqrt(2.0)
    return ChannelRealization(G, carrier_hz)


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Link budget xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def path_loss_db(distance_m, budget: LinkBudget):
    """Log-distance path loss in dB.

    The model is extrapolated below the reference distance as well.
    Accepts scalars or arrays.
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError(f"distance must be strictly positive, got {distance_m!r}")
    pl = budget.mean_pl_at_d0_db + 10.0 * budget.path_loss_exponent * np.log10(
        d / budget.reference_distance_m)
    return float(pl) if pl.ndim == 0 else pl


def noise_power_dbm(budget: LinkBudget) -> float:
    """Thermal noise ``k_B T B`` in dBm plus the receiver noise figure."""
    ktb_mw = Boltzmann * budget.temperature_k * budget.bandwidth_hz / 1e-3
    return 10.0 * math.log10(ktb_mw) + budget.noise_figure_db


def noise_power_w(budget: LinkBudget) -> float:
    return 10.0 ** ((noise_power_dbm(budget) - 30.0) / 10.0)


def link_gain_db(distance_m, budget: LinkBudget):
    """Large-scale power gain of a link: receive antenna gain minus path loss."""
    return budget.rx_antenna_gain_dbi - path_loss_db(distance_m, budget)
