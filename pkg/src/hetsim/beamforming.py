"""Transmit precoders, power allocation and Shannon sum rates.

Conventions
-----------
* A channel ``H_k`` is ``n_rx,k x n_tx``; a precoder for user ``k`` is
  ``n_tx x s_k`` with one column per stream.
* Precoders keep *beams* (unit-norm columns) separate from the per-stream
  powers. ``per_user_matrices`` returns the power-weighted matrices
  ``W_k diag(sqrt(p_k))`` that are actually transmitted, so the radiated
  power is ``sum_k ||W_k diag(sqrt(p_k))||_F^2 = sum(p)``.
* Rates treat residual inter-user leakage as Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .channel import ChannelRealization

__all__ = [
    "BeamformingError",
    "DegenerateChannelError",
    "InfeasibleError",
    "StreamReductionError",
    "PowerAllocation",
    "DigitalPrecoder",
    "HybridPrecoder",
    "RateReport",
    "mrt_precoder",
    "zf_precoder",
    "svd_precoder",
    "waterfill",
    "bd_precoder",
    "hybrid_precoder",
    "sum_rate",
    "leakage_ratios",
    "two_phase_factorization",
]

# singular values below this fraction of the largest are treated as zero
RANK_RTOL = 1e-9
POWER_RTOL = 1e-9

ChannelLike = Union[ChannelRealization, np.ndarray]
# (user index, requested streams, streams actually used)
StreamReduction = Tuple[int, int, int]


class BeamformingError(ValueError):
    """Base class for precoder construction failures."""


class DegenerateChannelError(BeamformingError):
    pass


class InfeasibleError(BeamformingError):
    pass


class StreamReductionError(BeamformingError):
    pass


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Domain types xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
@dataclass
class PowerAllocation:
    per_stream_powers_w: np.ndarray
    total_power_w: float

    def __post_init__(self):
        p = np.asarray(self.per_stream_powers_w, dtype=float).ravel()
        self.per_stream_powers_w = p
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("stream powers must be finite and non-negative")
        if p.sum() > self.total_power_w * (1 + POWER_RTOL) + 1e-300:
            raise ValueError(
                f"allocated power {p.sum()!r} exceeds budget {self.total_power_w!r}")

    def split(self, streams: Sequence[int]) -> List[np.ndarray]:
        """Cut the flat per-stream vector into per-user pieces."""
        if sum(streams) != self.per_stream_powers_w.size:
            raise ValueError("stream counts do not match the allocation size")
        return np.split(self.per_stream_powers_w, np.cumsum(streams)[:-1])

    @classmethod
    def concatenate(cls, parts: Sequence["PowerAllocation"], total_power_w: float):
        if parts:
            p = np.concatenate([a.per_stream_powers_w for a in parts])
        else:
            p = np.zeros(0)
        return cls(p, total_power_w)


def _weighted(beams, powers: PowerAllocation, streams):
    return [b * np.sqrt(p)[None, :] for b, p in zip(beams, powers.split(streams))]


@dataclass
class DigitalPrecoder:
    """Fully digital precoder: unit-norm beams plus a power allocation.

    ``combiners`` optionally holds the matching per-user receive filters
    (``n_rx,k x s_k``, applied as ``C_k^H y``).
    """

    beams: List[np.ndarray]
    powers: PowerAllocation
    combiners: Optional[List[np.ndarray]] = None
    stream_reductions: Tuple[StreamReduction, ...] = ()

    @property
    def streams(self) -> List[int]:
        return [b.shape[1] for b in self.beams]

    @property
    def total_power_w(self) -> float:
        return self.powers.total_power_w

    @property
    def per_user_matrices(self) -> List[np.ndarray]:
        return _weighted(self.beams, self.powers, self.streams)

    def transmit_power(self) -> float:
        return float(sum(np.linalg.norm(w) ** 2 for w in self.per_user_matrices))


@dataclass
class HybridPrecoder:
    """Analog (unit-modulus) stage followed by a per-user digital stage.

    The effective transmit beam of user ``k`` is ``analog_matrix @
    per_user_digital[k]``; those columns have unit norm, so ``powers`` keeps
    its meaning from :class:`DigitalPrecoder`. Receive-side hybrid
    combiners, when designed, are ``rx_analog[k] @ rx_digital[k]``.
    """

    analog_matrix: np.ndarray
    per_user_digital: List[np.ndarray]
    powers: PowerAllocation
    rx_analog: Optional[List[np.ndarray]] = None
    rx_digital: Optional[List[np.ndarray]] = None
    stream_reductions: Tuple[StreamReduction, ...] = ()

    def __post_init__(self):
        n_tx, n_rf = self.analog_matrix.shape
        if n_rf > n_tx:
            raise ValueError(f"n_rf={n_rf} exceeds n_tx={n_tx}")
        if not np.allclose(np.abs(self.analog_matrix), 1.0, rtol=0, atol=1e-12):
            raise ValueError("analog matrix entries must have unit modulus")

    @property
    def n_rf(self) -> int:
        return self.analog_matrix.shape[1]

    @property
    def streams(self) -> List[int]:
        return [d.shape[1] for d in self.per_user_digital]

    @property
    def total_power_w(self) -> float:
        return self.powers.total_power_w

    @property
    def beams(self) -> List[np.ndarray]:
        return [self.analog_matrix @ d for d in self.per_user_digital]

    @property
    def per_user_matrices(self) -> List[np.ndarray]:
        return _weighted(self.beams, self.powers, self.streams)

    @property
    def combiners(self) -> Optional[List[np.ndarray]]:
        if self.rx_digital is None:
            return None
        if self.rx_analog is None:
            return list(self.rx_digital)
        return [a @ d for a, d in zip(self.rx_analog, self.rx_digital)]

    def transmit_power(self) -> float:
        return float(sum(np.linalg.norm(w) ** 2 for w in self.per_user_matrices))


@dataclass
class RateReport:
    per_user_bits_per_s_per_hz: np.ndarray
    sum_bits_per_s_per_hz: float
    sum_bits_per_s: Optional[float] = None
    stream_reductions: Tuple[StreamReduction, ...] = field(default=())


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Helpers xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def _as_matrix(channel: ChannelLike) -> np.ndarray:
    """Channel as a 2-D complex array; a 1-D input is a single-antenna row."""
    H = channel.matrix if isinstance(channel, ChannelRealization) else channel
    H = np.asarray(H, dtype=complex)
    if H.ndim == 1:
        H = H[None, :]
    if H.ndim != 2:
        raise ValueError(f"channel must be 1-D or 2-D, got shape {H.shape}")
    return H


def _as_channels(per_user_channels) -> List[np.ndarray]:
    Hs = [_as_matrix(h) for h in per_user_channels]
    if not Hs:
        raise ValueError("at least one user channel is required")
    n_tx = {H.shape[1] for H in Hs}
    if len(n_tx) != 1:
        raise ValueError(f"users disagree on the number of transmit antennas: {sorted(n_tx)}")
    return Hs


def _broadcast_streams(streams_per_user, K: int) -> List[int]:
    if np.ndim(streams_per_user) == 0:
        return [int(streams_per_user)] * K
    streams = [int(s) for s in streams_per_user]
    if len(streams) != K:
        raise ValueError(f"got {len(streams)} stream counts for {K} users")
    if any(s < 0 for s in streams):
        raise ValueError("stream counts must be non-negative")
    return streams


def _effective_rank(s: np.ndarray, reference: float) -> int:
    if reference <= 0:
        return 0
    return int(np.count_nonzero(s > RANK_RTOL * reference))


def _inv_sqrtm_psd(A: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh(A)
    if w[0] <= 1e-12 * w[-1]:
        raise DegenerateChannelError("analog stage has linearly dependent columns")
    return (Q / np.sqrt(w)) @ Q.conj().T


def _phases(M: np.ndarray) -> np.ndarray:
    return np.exp(1j * np.angle(M))


def _check_noise(noise_w: float) -> None:
    if not noise_w > 0:
        raise ValueError(f"noise_w must be strictly positive, got {noise_w!r}")


def _check_power(power: float) -> None:
    if not (np.isfinite(power) and power >= 0):
        raise ValueError(f"power must be finite and non-negative, got {power!r}")


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Power allocation xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def waterfill(gains, power: float) -> PowerAllocation:
    """
    Capacity-optimal power allocation over parallel Gaussian channels.

    Solves ``max sum_i log2(1 + g_i p_i)`` subject to ``sum_i p_i = power``
    and ``p_i >= 0``; the solution is ``p_i = max(0, mu - 1/g_i)``.

    Parameters
    ----------
    gains : array_like
        Non-negative channel-to-noise ratios ``g_i`` (e.g. ``sigma_i^2 / N0``).
    power : float
        Total power to distribute. Zero yields an all-zero allocation.

    Returns
    -------
    PowerAllocation
        Powers in the same order as ``gains``.
    """
    g = np.asarray(gains, dtype=float).ravel()
    _check_power(power)
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("gains must be finite and non-negative")
    if not np.any(g > 0):
        raise InfeasibleError("water-filling needs at least one positive gain")
    p = np.zeros_like(g)
    if power == 0:
        return PowerAllocation(p, 0.0)

    order = np.flatnonzero(g > 0)
    order = order[np.argsort(-g[order], kind="stable")]
    with np.errstate(over="ignore", divide="ignore"):
        floors = 1.0 / g[order]
    if not np.isfinite(floors[0]):
        # even the strongest gain is subnormal: it takes everything
        p[order[0]] = power
        return PowerAllocation(p, float(power))
    # channels whose inverse gain overflows can never be activated
    order, floors = order[np.isfinite(floors)], floors[np.isfinite(floors)]
    # largest active set whose weakest member still sits below the water level;
    # written with floor differences so that huge 1/g does not swallow `power`
    for n in range(order.size, 0, -1):
        if power > np.sum(floors[n - 1] - floors[:n]):
            break
    active = floors[:n]
    p[order[:n]] = (power + (active[None, :] - active[:, None]).sum(axis=1)) / n
    return PowerAllocation(p, float(power))


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Linear precoders xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def mrt_precoder(channel: ChannelLike, power: float) -> DigitalPrecoder:
    """Matched-filter precoder ``W = sqrt(P) H^H / ||H||_F`` for one user.

    For a single receive antenna the beam is the conjugated, normalized
    channel vector. With several receive antennas each column of ``H^H`` is
    kept as a stream whose power is proportional to its squared norm.
    """
    _check_power(power)
    H = _as_matrix(channel)
    norm = np.linalg.norm(H)
    if norm == 0:
        raise DegenerateChannelError("MRT is undefined for an all-zero channel")
    W = H.conj().T / norm
    col = np.linalg.norm(W, axis=0)
    keep = col > 0
    beams = W[:, keep] / col[keep]
    return DigitalPrecoder([beams], PowerAllocation(power * col[keep] ** 2, power))


def zf_precoder(stacked_channels, power: float) -> DigitalPrecoder:
    """Zero-forcing for ``K`` single-antenna users (rows of ``stacked_channels``).

    ``W = H^H (H H^H)^{-1}`` with normalized columns and ``power / K`` per
    user, so that ``H W`` is diagonal.
    """
    _check_power(power)
    H = _as_matrix(stacked_channels)
    K, n_tx = H.shape
    if K > n_tx:
        raise InfeasibleError(f"ZF needs K <= n_tx, got K={K}, n_tx={n_tx}")
    s = np.linalg.svd(H, compute_uv=False)
    if _effective_rank(s, s[0]) < K:
        raise InfeasibleError("ZF needs a full row rank channel")
    W = np.linalg.solve(H @ H.conj().T, H).conj().T
    W = W / np.linalg.norm(W, axis=0)
    beams = [W[:, [k]] for k in range(K)]
    return DigitalPrecoder(beams, PowerAllocation(np.full(K, power / K), power))


def svd_precoder(channel: ChannelLike, power: float, noise_w: float,
                 max_streams: Optional[int] = None,
                 ) -> Tuple[DigitalPrecoder, np.ndarray, PowerAllocation]:
    """
    Point-to-point eigen-beamforming with water-filled powers.

    Parameters
    ----------
    channel : ChannelRealization or np.ndarray
        The ``n_rx x n_tx`` channel.
    power : float
        Total transmit power.
    noise_w : float
        Noise power per receive antenna.
    max_streams : int, optional
        Keep at most this many eigenmodes.

    Returns
    -------
    precoder : DigitalPrecoder
        Beams are the right singular vectors (descending singular values).
    combiner : np.ndarray
        ``n_rx x r`` matrix of left singular vectors, applied as ``C^H y``.
    powers : PowerAllocation
        Water-filling over ``sigma_i^2 / noise_w``.
    """
    _check_power(power)
    _check_noise(noise_w)
    H = _as_matrix(channel)
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise DegenerateChannelError("SVD beamforming is undefined for an all-zero channel")
    r = _effective_rank(s, s[0])
    if max_streams is not None:
        r = min(r, int(max_streams))
    alloc = waterfill(s[:r] ** 2 / noise_w, power)
    combiner = U[:, :r]
    precoder = DigitalPrecoder([Vh[:r].conj().T], alloc, combiners=[combiner])
    return precoder, combiner, alloc


def bd_precoder(per_user_channels, streams_per_user, power: float, noise_w: float,
                reduce_streams: bool = True) -> Tuple[DigitalPrecoder, PowerAllocation]:
    """
    Multiuser block diagonalization.

    Each user's beams are confined to the null space of the stacked channels
    of all other users and, inside it, follow the strongest singular
    directions of the projected channel ``H_k V_null``. The total power is
    split equally between users and water-filled over each user's streams.

    Parameters
    ----------
    per_user_channels : sequence
        ``n_rx,k x n_tx`` channel of every user.
    streams_per_user : int or sequence of int
        Requested number of streams.
    power, noise_w : float
        Total transmit power and per-antenna noise power.
    reduce_streams : bool
        When a projected channel has fewer significant singular values than
        requested streams, use fewer streams and record the reduction in
        ``stream_reductions`` (default) instead of raising
        :class:`StreamReductionError`.

    Returns
    -------
    (DigitalPrecoder, PowerAllocation)
        The precoder carries the matching receive combiners (left singular
        vectors of each projected channel).
    """
    _check_power(power)
    _check_noise(noise_w)
    Hs = _as_channels(per_user_channels)
    K = len(Hs)
    n_tx = Hs[0].shape[1]
    streams = _broadcast_streams(streams_per_user, K)
    n_rx = [H.shape[0] for H in Hs]

    for k in range(K):
        others = sum(n_rx) - n_rx[k]
        if n_tx <= others:
            raise InfeasibleError(
                f"user {k}: BD needs n_tx > {others} (receive antennas of the other "
                f"users), got n_tx={n_tx}")

    beams, combiners, allocs, reductions = [], [], [], []
    for k in range(K):
        Hk = Hs[k]
        if K > 1:
            others = np.vstack([Hs[j] for j in range(K) if j != k])
            _, s, Vh = np.linalg.svd(others, full_matrices=True)
            r = _effective_rank(s, s[0] if s.size else 0.0)
            V0 = Vh[r:].conj().T
        else:
            V0 = np.eye(n_tx, dtype=complex)
        if streams[k] > min(n_rx[k], V0.shape[1]):
            raise InfeasibleError(
                f"user {k}: {streams[k]} streams exceed min(n_rx={n_rx[k]}, "
                f"null-space dimension={V0.shape[1]})")
        U, s, Vh1 = np.linalg.svd(Hk @ V0, full_matrices=False)
        ref = np.linalg.norm(Hk, 2) if Hk.size else 0.0
        used = min(streams[k], _effective_rank(s, ref))
        if used < streams[k]:
            if not reduce_streams:
                raise StreamReductionError(
                    f"user {k}: projected channel supports {used} of {streams[k]} streams")
            reductions.append((k, streams[k], used))
        beams.append(V0 @ Vh1[:used].conj().T)
        combiners.append(U[:, :used])
        if used:
            allocs.append(waterfill(s[:used] ** 2 / noise_w, power / K))
        else:
            allocs.append(PowerAllocation(np.zeros(0), power / K))

    alloc = PowerAllocation.concatenate(allocs, power)
    return DigitalPrecoder(beams, alloc, combiners, tuple(reductions)), alloc


def leakage_ratios(per_user_channels, beams) -> np.ndarray:
    """``||H_j W_k||_F / (||H_j||_F ||W_k||_F)`` for every ordered pair.

    The diagonal is zero. Pairs with a zero norm report zero.
    """
    Hs = _as_channels(per_user_channels)
    K = len(Hs)
    out = np.zeros((K, K))
    for j in range(K):
        for k in range(K):
            if j == k:
                continue
            denom = np.linalg.norm(Hs[j]) * np.linalg.norm(beams[k])
            if denom > 0:
                out[j, k] = np.linalg.norm(Hs[j] @ beams[k]) / denom
    return out


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Hybrid analog-digital xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def two_phase_factorization(W: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exact factorization ``W = F D`` with unit-modulus ``F``.

    Every entry ``|w| e^{j theta}`` with ``|w| <= 2c`` equals
    ``c (e^{j a} + e^{j b})`` for ``a, b = theta +- arccos(|w| / 2c)``.
    ``F`` therefore has twice as many columns as ``W`` and
    ``D = [diag(c); diag(c)]``.
    """
    W = np.asarray(W, dtype=complex)
    n = W.shape[1]
    c = np.abs(W).max(axis=0) / 2.0
    c[c == 0] = 1.0
    theta = np.angle(W)
    delta = np.arccos(np.clip(np.abs(W) / (2.0 * c), 0.0, 1.0))
    F = np.hstack([np.exp(1j * (theta + delta)), np.exp(1j * (theta - delta))])
    D = np.vstack([np.diag(c), np.diag(c)]).astype(complex)
    return F, D


def _pad_analog(F: np.ndarray, D: np.ndarray, n_rf: int, directions: np.ndarray):
    """Fill unused RF chains with phase-only beams that carry no data."""
    extra = n_rf - F.shape[1]
    if extra <= 0:
        return F, D
    pad = _phases(directions[:, :extra])
    return np.hstack([F, pad]), np.vstack([D, np.zeros((extra, D.shape[1]), complex)])


def hybrid_precoder(per_user_channels, n_rf: int, streams_per_user, power: float,
                    noise_w: float, n_rf_rx: Optional[int] = None,
                    reduce_streams: bool = True) -> HybridPrecoder:
    """
    Hybrid analog-digital precoder (multiuser BD or single-user SVD).

    Two constructions are used depending on the RF budget:

    * ``n_rf >= 2 * total streams`` (and, with receive combining,
      ``n_rf_rx >= 2 * streams`` per user): the fully digital solution is
      computed first and then realized exactly by
      :func:`two_phase_factorization`, so hybrid and digital coincide.
    * otherwise the analog stage is the phase of the top ``n_rf`` right
      singular directions of the stacked multiuser channel. The receive
      analog stage (if ``n_rf_rx`` is given) is the phase of each user's top
      ``n_rf_rx`` left singular directions. BD (or SVD for one user) is
      then solved on the whitened effective channels.

    Raises
    ------
    InfeasibleError
        If ``n_rf`` is below the total number of streams or above ``n_tx``,
        or if ``n_rf_rx`` is below a user's stream count.
    """
    _check_power(power)
    _check_noise(noise_w)
    Hs = _as_channels(per_user_channels)
    K = len(Hs)
    n_tx = Hs[0].shape[1]
    streams = _broadcast_streams(streams_per_user, K)
    total = sum(streams)
    if n_rf > n_tx:
        raise InfeasibleError(f"n_rf={n_rf} exceeds n_tx={n_tx}")
    if n_rf < total:
        raise InfeasibleError(f"n_rf={n_rf} is below the total number of streams {total}")
    if n_rf_rx is not None:
        for k, H in enumerate(Hs):
            if n_rf_rx < streams[k]:
                raise InfeasibleError(
                    f"user {k}: n_rf_rx={n_rf_rx} is below its {streams[k]} streams")
            if n_rf_rx > H.shape[0]:
                raise InfeasibleError(
                    f"user {k}: n_rf_rx={n_rf_rx} exceeds its {H.shape[0]} antennas")

    _, _, Vh = np.linalg.svd(np.vstack(Hs), full_matrices=True)
    stacked_dirs = Vh.conj().T

    exact = n_rf >= 2 * total and (n_rf_rx is None or n_rf_rx >= 2 * max(streams))
    if exact:
        return _hybrid_exact(Hs, n_rf, streams, power, noise_w, n_rf_rx,
                             reduce_streams, stacked_dirs)

    F = _phases(stacked_dirs[:, :n_rf])
    T = _inv_sqrtm_psd(F.conj().T @ F)
    FT = F @ T
    rx_analog, rx_white = None, None
    eff = [H @ FT for H in Hs]
    if n_rf_rx is not None:
        rx_analog, rx_white = [], []
        for k, H in enumerate(Hs):
            U, _, _ = np.linalg.svd(H, full_matrices=True)
            R = _phases(U[:, :n_rf_rx])
            Tr = _inv_sqrtm_psd(R.conj().T @ R)
            rx_analog.append(R)
            rx_white.append(Tr)
            eff[k] = (R @ Tr).conj().T @ eff[k]

    if K == 1:
        digital, _, alloc = svd_precoder(eff[0], power, noise_w, max_streams=streams[0])
        reductions = ()
        if digital.streams[0] < streams[0]:
            if not reduce_streams:
                raise StreamReductionError(
                    f"user 0: effective channel supports {digital.streams[0]} "
                    f"of {streams[0]} streams")
            reductions = ((0, streams[0], digital.streams[0]),)
    else:
        digital, alloc = bd_precoder(eff, streams, power, noise_w, reduce_streams)
        reductions = digital.stream_reductions

    D = [T @ b for b in digital.beams]
    if rx_analog is not None:
        rx_digital = [Tr @ c for Tr, c in zip(rx_white, digital.combiners)]
    else:
        rx_digital = list(digital.combiners)
    return HybridPrecoder(F, D, alloc, rx_analog, rx_digital, tuple(reductions))


def _hybrid_exact(Hs, n_rf, streams, power, noise_w, n_rf_rx, reduce_streams,
                  stacked_dirs) -> HybridPrecoder:
    K = len(Hs)
    if K == 1:
        digital, _, alloc = svd_precoder(Hs[0], power, noise_w, max_streams=streams[0])
        reductions = ()
        if digital.streams[0] < streams[0]:
            if not reduce_streams:
                raise StreamReductionError(
                    f"user 0: channel supports {digital.streams[0]} of {streams[0]} streams")
            reductions = ((0, streams[0], digital.streams[0]),)
    else:
        digital, alloc = bd_precoder(Hs, streams, power, noise_w, reduce_streams)
        reductions = digital.stream_reductions

    used = digital.streams
    F, D = two_phase_factorization(np.hstack(digital.beams))
    F, D = _pad_analog(F, D, n_rf, stacked_dirs)
    D_users = np.split(D, np.cumsum(used)[:-1], axis=1)

    rx_analog, rx_digital = None, list(digital.combiners)
    if n_rf_rx is not None:
        rx_analog, rx_digital = [], []
        for H, C in zip(Hs, digital.combiners):
            U, _, _ = np.linalg.svd(H, full_matrices=True)
            R, Dr = two_phase_factorization(C)
            R, Dr = _pad_analog(R, Dr, n_rf_rx, U)
            rx_analog.append(R)
            rx_digital.append(Dr)
    return HybridPrecoder(F, list(D_users), alloc, rx_analog, rx_digital, tuple(reductions))


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxx Rates xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def _log2det_gain(Q: np.ndarray, S: np.ndarray) -> float:
    """``log2 det(I + Q^{-1} S)`` for Hermitian PD ``Q`` and PSD ``S``."""
    if Q.shape[0] == 0:
        return 0.0
    L = cholesky(Q, lower=True)
    A = solve_triangular(L, S, lower=True)
    A = solve_triangular(L, A.conj().T, lower=True)
    lam = np.linalg.eigvalsh((A + A.conj().T) / 2.0)
    return float(np.sum(np.log2(1.0 + np.clip(lam, 0.0, None))))


def sum_rate(per_user_channels, precoder, noise_w: float,
             combiners: Optional[Sequence[Optional[np.ndarray]]] = None,
             bandwidth_hz: Optional[float] = None,
             powers: Optional[PowerAllocation] = None) -> RateReport:
    """
    Shannon sum rate with inter-user leakage treated as noise.

    ``R_k = log2 det(I + Q_k^{-1} H_k W_k W_k^H H_k^H)`` where
    ``Q_k = N0 I + sum_{j != k} H_k W_j W_j^H H_k^H``. With a combiner
    ``C_k`` both terms are projected, and the noise term becomes
    ``N0 C_k^H C_k``.

    Parameters
    ----------
    per_user_channels : sequence
        Channel of each user.
    precoder : DigitalPrecoder, HybridPrecoder or sequence of np.ndarray
        For a plain sequence the matrices are taken as power-weighted,
        unless ``powers`` is given, in which case they are beams and the
        allocation is applied on top.
    noise_w : float
        Noise power per receive antenna, strictly positive.
    combiners : sequence, optional
        Per-user receive filters; ``None`` entries mean no combining.
    bandwidth_hz : float, optional
        When given, ``sum_bits_per_s`` is filled in.
    """
    _check_noise(noise_w)
    Hs = _as_channels(per_user_channels)
    reductions = ()
    if isinstance(precoder, (DigitalPrecoder, HybridPrecoder)):
        Ws = precoder.per_user_matrices
        reductions = precoder.stream_reductions
    else:
        Ws = [np.asarray(w, dtype=complex) for w in precoder]
        Ws = [w[:, None] if w.ndim == 1 else w for w in Ws]
        if powers is not None:
            Ws = _weighted(Ws, powers, [w.shape[1] for w in Ws])
    if len(Ws) != len(Hs):
        raise ValueError(f"{len(Ws)} precoders for {len(Hs)} users")
    n_tx = Hs[0].shape[1]
    for k, W in enumerate(Ws):
        if W.shape[0] != n_tx:
            raise ValueError(f"user {k}: precoder has {W.shape[0]} rows, expected {n_tx}")
    if combiners is not None and len(combiners) != len(Hs):
        raise ValueError(f"{len(combiners)} combiners for {len(Hs)} users")

    K = len(Hs)
    rates = np.zeros(K)
    for k, H in enumerate(Hs):
        C = None if combiners is None else combiners[k]
        if C is not None:
            C = np.asarray(C, dtype=complex)
            C = C[:, None] if C.ndim == 1 else C
            if C.shape[0] != H.shape[0]:
                raise ValueError(f"user {k}: combiner has {C.shape[0]} rows, "
                                 f"expected {H.shape[0]}")
            G = [C.conj().T @ (H @ W) for W in Ws]
            noise = noise_w * (C.conj().T @ C)
        else:
            G = [H @ W for W in Ws]
            noise = noise_w * np.eye(H.shape[0])
        S = G[k] @ G[k].conj().T
        Q = noise + sum((G[j] @ G[j].conj().T for j in range(K) if j != k),
                        np.zeros_like(noise))
        rates[k] = _log2det_gain(Q, S)

    total = float(rates.sum())
    absolute = None if bandwidth_hz is None else total * float(bandwidth_hz)
    return RateReport(rates, total, absolute, tuple(reductions))
