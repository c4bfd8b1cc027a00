"""
Dual-band layered association
=============================

UEs within ``a`` of the small cell use mmWave, those between ``a`` and
``b`` use the small cell's microwave carrier, and the rest attach to the
macro. The mmWave band is disjoint from the macro's, so the inner users
never see macro interference; the middle and outer rings are
interference limited.
"""
from hetsim.scenarios import DualBandConfig, UeDistribution, associate_dual_band, sweep_dual_band

cell = DualBandConfig()
for point in [(400.0, 0.0), (480.0, 0.0), (400.0, 300.0)]:
    print(point, "->", associate_dual_band(point, cell))

result = sweep_dual_band([(25.0, 100.0), (50.0, 150.0), (75.0, 200.0)], cell,
                         UeDistribution(count=20_000), seed=0)
print(f"\n{'a':>4} {'b':>4} {'inner':>6} {'middle':>7} {'outer':>6}"
      f" {'mid Mb/s':>9} {'out Mb/s':>9}")
for r in result.rows:
    print(f"{r['a_m']:4.0f} {r['b_m']:4.0f} {r['frac_inner']:6.3f} {r['frac_middle']:7.3f}"
          f" {r['frac_outer']:6.3f} {r['rate_middle_bps'] / 1e6:9.2f}"
          f" {r['rate_outer_bps'] / 1e6:9.2f}")
