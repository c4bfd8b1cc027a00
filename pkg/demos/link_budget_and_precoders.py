"""
Link budget and single-cell precoders
=====================================

Walks through the default macro link budget, then compares MRT, ZF,
SVD and block diagonalization on one Rayleigh draw at the cell edge.

Run with ``python3 demos/link_budget_and_precoders.py``.
"""
import numpy as np

from hetsim import (LinkBudget, bd_precoder, mrt_precoder, substream, sum_rate,
                    svd_precoder, zf_precoder)
from hetsim.channel import (db_to_linear, draw_rayleigh_channel, link_gain_db,
                            noise_power_dbm, noise_power_w, path_loss_db)

budget = LinkBudget()
print(f"noise floor        {noise_power_dbm(budget):8.2f} dBm")
for d in (100.0, 1000.0, 1600.0):
    print(f"path loss @ {d:6.0f} m {path_loss_db(d, budget):8.2f} dB")

# %%
# A 64-antenna base station serves four single-antenna users at 1 km.
# Channels are scaled by the large-scale gain so that the noise power is
# the physical one.
rng = substream(7)
gain = np.sqrt(db_to_linear(link_gain_db(1000.0, budget)))
users = [gain * draw_rayleigh_channel(1, 64, rng).matrix for _ in range(4)]
noise = noise_power_w(budget)
P = budget.tx_power_w

# MRT for the first user alone, then ZF across all four.
mrt = sum_rate(users[:1], mrt_precoder(users[0], P), noise)
print(f"MRT  user 0   {mrt.sum_bits_per_s_per_hz:6.2f} b/s/Hz")
zf = sum_rate(users, zf_precoder(np.vstack(users), P), noise,
              bandwidth_hz=budget.bandwidth_hz)
print(f"ZF   sum rate {zf.sum_bits_per_s_per_hz:6.2f} b/s/Hz  ({zf.sum_bits_per_s / 1e6:.1f} Mb/s)")

bd, _ = bd_precoder(users, 1, P, noise)
print(f"BD   sum rate {sum_rate(users, bd, noise).sum_bits_per_s_per_hz:6.2f} b/s/Hz")

# %%
# Point to point: a 4-antenna UE, SVD beams with water-filled powers.
H = gain * draw_rayleigh_channel(4, 64, rng).matrix
pre, combiner, alloc = svd_precoder(H, P, noise)
print("SVD stream powers (W):", np.round(alloc.per_stream_powers_w, 3))
print(f"SVD rate      {sum_rate([H], pre, noise).sum_bits_per_s_per_hz:6.2f} b/s/Hz")
