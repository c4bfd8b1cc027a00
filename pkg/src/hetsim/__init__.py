"""Link-level Monte Carlo simulator for 5G massive MIMO / mmWave HetNet studies.

Subpackages
-----------
channel
    ULA steering vectors, geometric and Rayleigh channel draws, link budgets.
beamforming
    MRT, ZF, SVD, block diagonalization and hybrid analog-digital precoders,
    water-filling and Shannon sum rates.
scenarios
    Hybrid-vs-digital, mobile relay and dual-band association experiments.
harness
    Config parsing, deterministic trial execution and CSV output (see also
    the ``hetsim`` command line tool).
"""

from .channel import (
    ChannelRealization,
    GeometricChannelSpec,
    LinkBudget,
    UlaGeometry,
    draw_geometric_channel,
    draw_rayleigh_channel,
    noise_power_dbm,
    path_loss_db,
    substream,
    ula_steering,
)
from .beamforming import (
    BeamformingError,
    DegenerateChannelError,
    DigitalPrecoder,
    HybridPrecoder,
    InfeasibleError,
    PowerAllocation,
    RateReport,
    StreamReductionError,
    bd_precoder,
    hybrid_precoder,
    mrt_precoder,
    sum_rate,
    svd_precoder,
    waterfill,
    zf_precoder,
)

__version__ = "0.1.0"
