# Inverse planning: pick pressures for a target (size, stiffness) pair.
#
# The planner inverts the forward map (p1, p2) -> (h2, k).  It exploits
# the ratio/scale structure of the rig: first match the height with a
# 1-D root on the pressure ratio, then scale both pressures to match
# the stiffness, then polish with a damped Newton iteration.

from afpa_sim import (
    HapticTarget,
    constant_stiffness_path,
    default_config_path,
    load_config,
    plan_state,
    state_table,
)

config = load_config(default_config_path())
rig = config.rig

# A single target.
plan = plan_state(rig, HapticTarget(target_height=70.0, target_stiffness=0.2))
print(f"target (70 mm, 0.2 N/mm) -> p1 = {plan.p1:.2f} kPa, p2 = {plan.p2:.2f} kPa")
print(f"achieved: {plan.achieved_height:.2f} mm, {plan.achieved_stiffness:.4f} N/mm")

# Holding stiffness constant while morphing through very different sizes
# is the signature capability: the same 0.1 N/mm at 52, 73 and 96 mm.
print("\nconstant-stiffness morphing path (k* = 0.1 N/mm):")
for p in constant_stiffness_path(rig, 0.1, [52.0, 73.0, 96.0]):
    print(f"  h2 = {p.achieved_height:5.1f} mm: p1 = {p.p1:6.2f}, p2 = {p.p2:6.2f} kPa"
          f"  (k = {p.achieved_stiffness:.4f})")

# Targets outside the reachable envelope come back with a reason instead
# of a wrong answer.
bad = plan_state(rig, HapticTarget(target_height=100.0, target_stiffness=4.0))
print(f"\n(100 mm, 4 N/mm) feasible: {bad.feasible} -> {bad.reason}")

# The 3x3 study grid: three sizes crossed with three stiffness levels.
print("\nstate table:")
for s in state_table(rig, config.study.sizes, config.study.stiffnesses):
    print(f"  state {s.id}: {s.size_class:6s}/{s.stiffness_class:6s}"
          f"  p=({s.p1:7.2f},{s.p2:7.2f}) kPa  h2={s.height:5.1f} mm  k={s.stiffness:.3f}")
