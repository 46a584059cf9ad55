# Pouch stack basics: how a flat fabric pouch turns pressure into force.
#
# A stack of n flat pouches bulges into circular arcs when pressurized.
# The plates stay in contact with a shrinking flat strip until the stack
# reaches its free height 2nW/pi, where the bulges are full semicircles
# and the contact force drops to zero.  The force at any height follows
# from virtual work: F = P * dV/dH.

import numpy as np

from afpa_sim import PouchStackSpec, contact_force, cross_section, free_height, volume

spec = PouchStackSpec(flat_width=59.6, flat_length=108.8, pouch_count=3)
hf = free_height(spec)
print(f"flat size {spec.flat_width} x {spec.flat_length} mm, {spec.pouch_count} pouches")
print(f"free height: {hf:.1f} mm")

# Sweep the stack height and watch the contact strip shrink while the
# enclosed volume grows.
print("\n height_mm  contact_mm  volume_cm3  force_at_90kPa_N")
for frac in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
    h = frac * hf
    cs = cross_section(spec, h)
    f = contact_force(spec, 90.0, h)
    print(f"  {h:8.1f}  {cs.contact_width:9.1f}  {volume(spec, h) / 1e3:9.1f}  {f:15.1f}")

# The end-cap correction matters most near the free height: the rounded
# caps stop transmitting force smoothly instead of with a hard edge.
flat = PouchStackSpec(flat_width=59.6, flat_length=108.8, pouch_count=3,
                      end_cap_correction=False)
print("\nforce near the free height (90 kPa), corrected vs idealized:")
for h in np.linspace(0.8 * hf, hf, 5):
    print(f"  H={h:6.1f} mm  corrected {contact_force(spec, 90.0, h):7.2f} N"
          f"  idealized {contact_force(flat, 90.0, h):7.2f} N")
