# Antagonistic coupling: two stacks fighting through crossed belts.
#
# The modulating stack (pressure P1) pulls the morphing stack (P2) down
# through an inextensible crossed belt: h1 + h2 <= C.  Raising P1 at
# fixed P2 squashes the morphing side, which is how the rig renders
# different sizes; the user only ever touches the morphing side.

import numpy as np

from afpa_sim import default_config_path, load_config, solve_equilibrium, stiffness

config = load_config(default_config_path())
rig = config.rig
print(f"belt span C = {rig.belt_span:.1f} mm")

print("\nsize modulation at P2 = 90 kPa:")
print(" p1_kPa  h2_mm  taut")
for p1 in np.linspace(0.0, 100.0, 11):
    eq = solve_equilibrium(rig, p1, 90.0)
    print(f" {p1:6.0f}  {eq.h2:5.1f}  {eq.taut}")

# Because both side forces scale linearly with pressure, the equilibrium
# height depends only on the ratio P1/P2 while the felt stiffness scales
# with the absolute pressure level.  This is the decoupling the planner
# exploits.
print("\nsame ratio, different levels:")
for scale in (0.5, 1.0, 2.0):
    p1, p2 = 10.0 * scale, 30.0 * scale
    eq = solve_equilibrium(rig, p1, p2)
    k = stiffness(rig, p1, p2, eq.h2 - 5.0)
    print(f" ({p1:5.1f}, {p2:5.1f}) kPa -> h2 = {eq.h2:.2f} mm, k = {k:.3f} N/mm")
