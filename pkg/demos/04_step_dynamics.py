# Pressure dynamics: how fast the rendered shape actually changes.
#
# Each chamber fills and vents through a proportional valve (ISO 6358
# flow law) chasing a commanded setpoint.  The chamber heights are
# solved quasi-statically from the gas masses at every step, so the
# morphing side rises as gas arrives rather than jumping to its final
# equilibrium.

import numpy as np

from afpa_sim import default_config_path, load_config, resample_16hz, rise_time_90, step_simulate

config = load_config(default_config_path())

# Inflation from flat: command P2 0 -> 90 kPa at t = 0.5 s.
series = step_simulate(
    config.rig, config.valves,
    [(0.0, 0.0, 0.0), (0.5, 0.0, 90.0)],
    config.step.dt, config.step.t_end,
)
print("P2 step 0 -> 90 kPa:")
print(f"  height {series[0, 4]:.1f} -> {series[-1, 4]:.1f} mm")

# Rise time measured on the post-step portion of the series.
post = series[series[:, 0] >= 0.5]
print(f"  90% rise time: {rise_time_90(post):.2f} s")

# Deflation by antagonist: P1 10 -> 90 kPa at fixed P2 squashes the
# morphing side down within a couple of seconds as well.
squash = step_simulate(
    config.rig, config.valves,
    [(0.0, 10.0, 10.0), (0.5, 90.0, 10.0)],
    config.step.dt, config.step.t_end,
)
print(f"\nP1 step 10 -> 90 kPa at P2 = 10 kPa:")
print(f"  height {squash[0, 4]:.1f} -> {squash[-1, 4]:.1f} mm")

# Logged data is resampled onto the acquisition grid.
log = resample_16hz(series)
print(f"\n16 Hz log: {log.shape[0]} rows over {log[-1, 0]:.1f} s")
print("  t_s    p1_kPa  p2_kPa  h2_mm")
for row in log[:: len(log) // 8]:
    print(f"  {row[0]:5.2f}  {row[1]:6.1f}  {row[2]:6.1f}  {row[4]:5.1f}")
