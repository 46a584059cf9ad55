"""Coupled equilibrium of two opposed pouch stacks under a crossing-belt tie.

The belt constrains h1 + h2 <= belt_span (plus elastic stretch when a
compliance is set) and can only pull.  The taut equilibrium solves the
force balance F_mod(p1, h1) = F_morph(p2, h2) with a bracketed root
finder; the residual is strictly monotone in h2, so the root is unique.
Probe operations re-equilibrate the modulating side while the morphing
side is held at a forced height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from scipy.optimize import brentq, least_squares

from .pouch import (
    KPA_MM2_TO_N,
    PouchDomainError,
    PouchStackSpec,
    contact_force,
    free_height,
)

PRESSURE_MAX_KPA = 150.0
STIFFNESS_EPS_MM = 0.05
ROOT_XTOL_MM = 1e-7


class RigDomainError(ValueError):
    """Invalid pressures or probe heights."""


class EquilibriumError(RuntimeError):
    """Root finder failed; should not happen for valid inputs."""


class CalibrationError(ValueError):
    """Anchor set cannot determine the rig parameters."""


@dataclass(frozen=True)
class RigSpec:
    """Two opposed actuators tied by crossing belts."""

    modulating: PouchStackSpec  # P1 side
    morphing: PouchStackSpec  # P2 side, the touched surface
    belt_span: float  # C, mm: max taut value of h1 + h2
    belt_compliance: float = 0.0  # mm/N
    friction_force: float = 0.0  # N, Coulomb branch offset
    deflated_floor: float = 10.0  # mm, reported height floor when deflated

    def __post_init__(self) -> None:
        if not (self.belt_span > 0 and math.isfinite(self.belt_span)):
            raise ValueError(f"belt_span must be positive, got {self.belt_span}")
        if self.belt_compliance < 0:
            raise ValueError("belt_compliance must be >= 0")
        if self.friction_force < 0:
            raise ValueError("friction_force must be >= 0")
        if self.deflated_floor < 0:
            raise ValueError("deflated_floor must be >= 0")


@dataclass(frozen=True)
class EquilibriumState:
    h1: float  # mm
    h2: float  # mm
    belt_tension: float  # N
    taut: bool


def _check_pressure(p: float, name: str) -> float:
    if not math.isfinite(p) or p < 0.0 or p > PRESSURE_MAX_KPA:
        raise RigDomainError(f"{name} must be in [0, {PRESSURE_MAX_KPA}] kPa, got {p}")
    return float(p)


def _side_force(spec: PouchStackSpec, pressure: float, height: float) -> float:
    """Contact force of one side, 0 outside the compressed range."""
    hf = free_height(spec)
    if height >= hf:
        return 0.0
    if height <= 0.0:
        height = 1e-9
    return contact_force(spec, pressure, height)


def solve_equilibrium(rig: RigSpec, p1: float, p2: float) -> EquilibriumState:
    """Equilibrium heights and belt tension at the given gauge pressures."""
    p1 = _check_pressure(p1, "p1")
    p2 = _check_pressure(p2, "p2")
    x1 = free_height(rig.modulating)
    x2 = free_height(rig.morphing)
    c = rig.belt_span
    if x1 + x2 <= c:
        return EquilibriumState(h1=x1, h2=x2, belt_tension=0.0, taut=False)

    def g(h2: float) -> float:
        # taut residual; with compliance the belt stretches under the
        # morphing-side force (equal to the tension at equilibrium)
        t_est = _side_force(rig.morphing, p2, h2)
        h1 = c + rig.belt_compliance * t_est - h2
        return _side_force(rig.modulating, p1, h1) - t_est

    lo = max(1e-9, c - x1)
    hi = min(x2, c)
    g_lo, g_hi = g(lo), g(hi)
    if g_hi <= 0.0:
        # morphing side dominates everywhere: ride the belt (or free height)
        h2 = hi
        tension = _side_force(rig.morphing, p2, h2) if h2 < x2 else 0.0
        h1 = min(x1, c + rig.belt_compliance * tension - h2)
        taut = h1 + h2 >= c - 1e-9
        return EquilibriumState(h1=h1, h2=h2, belt_tension=tension if taut else 0.0, taut=taut)
    if g_lo >= 0.0:
        # modulating side dominates: morphing side squashed to the bracket floor
        h2 = lo
        h1 = c - h2
        tension = _side_force(rig.modulating, p1, h1)
        return EquilibriumState(h1=h1, h2=h2, belt_tension=tension, taut=True)
    try:
        h2 = brentq(g, lo, hi, xtol=ROOT_XTOL_MM)
    except Exception as exc:  # pragma: no cover - guarded by the bracket check
        raise EquilibriumError(f"equilibrium root finding failed: {exc}") from exc
    tension = _side_force(rig.morphing, p2, h2)
    h1 = c + rig.belt_compliance * tension - h2
    return EquilibriumState(h1=h1, h2=h2, belt_tension=tension, taut=True)


def probe_force(
    rig: RigSpec, p1: float, p2: float, h2_forced: float
) -> tuple[float, float, float]:
    """Force on a probe holding the morphing side at ``h2_forced``.

    Returns (force N, belt_tension N, h1 mm).  The modulating side
    re-equilibrates against the belt; the belt goes slack once the
    modulating side reaches its free height.
    """
    p1 = _check_pressure(p1, "p1")
    p2 = _check_pressure(p2, "p2")
    eq = solve_equilibrium(rig, p1, p2)
    if h2_forced > eq.h2 + 1e-9:
        raise RigDomainError(
            f"h2_forced {h2_forced} mm above equilibrium {eq.h2:.6g} mm (probe not in contact)"
        )
    if h2_forced <= 0.0:
        raise RigDomainError("h2_forced must be positive")
    x1 = free_height(rig.modulating)
    c = rig.belt_span
    tension = 0.0
    for _ in range(8):  # fixed point on belt stretch; exact when compliance = 0
        h1 = min(x1, c + rig.belt_compliance * tension - h2_forced)
        new_tension = _side_force(rig.modulating, p1, h1) if h1 + h2_forced >= c - 1e-9 else 0.0
        if abs(new_tension - tension) < 1e-10:
            tension = new_tension
            break
        tension = new_tension
    h1 = min(x1, c + rig.belt_compliance * tension - h2_forced)
    force = max(0.0, _side_force(rig.morphing, p2, h2_forced) - tension)
    return force, tension, h1


def force_displacement_curve(
    rig: RigSpec,
    p1: float,
    p2: float,
    max_depth: float,
    step: float,
    with_friction: bool = True,
) -> list[tuple[float, float]]:
    """Loading then unloading (depth, force) samples from the equilibrium height."""
    if step <= 0:
        raise RigDomainError("step must be positive")
    eq = solve_equilibrium(rig, p1, p2)
    if max_depth >= eq.h2:
        raise RigDomainError(f"max_depth {max_depth} mm exceeds equilibrium height {eq.h2:.6g} mm")
    n = int(round(max_depth / step))
    depths = [i * step for i in range(n + 1)]
    f = rig.friction_force if with_friction else 0.0
    samples: list[tuple[float, float]] = []
    for d in depths:
        base, _, _ = probe_force(rig, p1, p2, eq.h2 - d)
        samples.append((d, max(0.0, base + f)))
    for d in reversed(depths):
        base, _, _ = probe_force(rig, p1, p2, eq.h2 - d)
        samples.append((d, max(0.0, base - f)))
    return samples


def stiffness(rig: RigSpec, p1: float, p2: float, h2: float) -> float:
    """Probe stiffness dF/d(depth) at height h2, by central difference (N/mm)."""
    eps = STIFFNESS_EPS_MM
    eq = solve_equilibrium(rig, p1, p2)
    if h2 + eps > eq.h2 + 1e-9 or h2 - eps <= 0.0:
        raise RigDomainError(
            f"h2 {h2} mm not interior to the probe range (0, {eq.h2:.6g} - {eps}] mm"
        )
    f_lo, _, _ = probe_force(rig, p1, p2, h2 - eps)
    f_hi, _, _ = probe_force(rig, p1, p2, h2 + eps)
    return max(0.0, (f_lo - f_hi) / (2.0 * eps))


def _friction_equilibrium(rig: RigSpec, p1: float, p2: float, direction: float) -> float:
    """Equilibrium h2 with the Coulomb offset applied for the given motion sign.

    direction < 0: h2 moving down (friction holds it high); > 0: moving up.
    """
    f = rig.friction_force
    if f == 0.0 or direction == 0.0:
        return solve_equilibrium(rig, p1, p2).h2
    offset = f if direction < 0 else -f

    def g(h2: float) -> float:
        t_est = _side_force(rig.morphing, p2, h2)
        h1 = rig.belt_span + rig.belt_compliance * t_est - h2
        return _side_force(rig.modulating, p1, h1) - t_est - offset

    x1 = free_height(rig.modulating)
    x2 = free_height(rig.morphing)
    c = rig.belt_span
    if x1 + x2 <= c:
        return x2
    lo = max(1e-9, c - x1)
    hi = min(x2, c)
    if g(hi) <= 0.0:
        return hi
    if g(lo) >= 0.0:
        return lo
    return brentq(g, lo, hi, xtol=ROOT_XTOL_MM)


def size_pressure_sweep(
    rig: RigSpec, p2_fixed: float, p1_path: Sequence[float]
) -> list[tuple[float, float]]:
    """(p1, h2) samples along an ordered p1 path, with Coulomb hysteresis."""
    samples: list[tuple[float, float]] = []
    prev_h2: float | None = None
    for p1 in p1_path:
        h2_free = solve_equilibrium(rig, p1, p2_fixed).h2
        if prev_h2 is None:
            direction = 0.0
        else:
            direction = math.copysign(1.0, h2_free - prev_h2) if h2_free != prev_h2 else 0.0
        h2 = _friction_equilibrium(rig, p1, p2_fixed, direction)
        samples.append((float(p1), h2))
        prev_h2 = h2
    return samples


# --- calibration -----------------------------------------------------------

@dataclass(frozen=True)
class Anchor:
    """One observed operating point used to fit the rig geometry.

    kind: 'height'    -> observed = equilibrium h2 (mm) at (p1, p2)
          'force'     -> observed = probe force (N) at (p1, p2, h2)
          'stiffness' -> observed = probe stiffness (N/mm) at (p1, p2, h2)
    """

    kind: str
    p1: float
    p2: float
    observed: float
    h2: float | None = None


@dataclass
class CalibrationResult:
    rig: RigSpec
    residuals: list[float] = field(default_factory=list)
    anchors: list[Anchor] = field(default_factory=list)


_FIT_PARAMS = ("modulating.flat_width", "modulating.flat_length",
               "morphing.flat_width", "morphing.flat_length", "belt_span")


def _rig_from_vector(x: Sequence[float], template: RigSpec) -> RigSpec:
    w1, l1, w2, l2, c = x
    return RigSpec(
        modulating=PouchStackSpec(
            flat_width=w1, flat_length=l1,
            pouch_count=template.modulating.pouch_count,
            end_cap_correction=template.modulating.end_cap_correction,
        ),
        morphing=PouchStackSpec(
            flat_width=w2, flat_length=l2,
            pouch_count=template.morphing.pouch_count,
            end_cap_correction=template.morphing.end_cap_correction,
        ),
        belt_span=c,
        belt_compliance=template.belt_compliance,
        friction_force=template.friction_force,
        deflated_floor=template.deflated_floor,
    )


def _predict(rig: RigSpec, anchor: Anchor) -> float:
    if anchor.kind == "height":
        return solve_equilibrium(rig, anchor.p1, anchor.p2).h2
    if anchor.kind == "force":
        assert anchor.h2 is not None
        force, _, _ = probe_force(rig, anchor.p1, anchor.p2, anchor.h2)
        return force
    if anchor.kind == "stiffness":
        assert anchor.h2 is not None
        return stiffness(rig, anchor.p1, anchor.p2, anchor.h2)
    raise ValueError(f"unknown anchor kind {anchor.kind!r}")


def calibrate_rig(
    anchors: Sequence[Anchor],
    start: RigSpec,
    weights: Sequence[float] | None = None,
) -> CalibrationResult:
    """Least-squares fit of the five geometry parameters to the anchors.

    Residuals are normalized by the observed values; the fit is a damped
    Gauss-Newton (trust-region) descent from the given starting rig and
    is deterministic.
    """
    anchors = list(anchors)
    if len(anchors) < len(_FIT_PARAMS) - 1:
        raise CalibrationError(
            f"need at least {len(_FIT_PARAMS) - 1} independent anchors to constrain "
            f"parameters {', '.join(_FIT_PARAMS)}; got {len(anchors)}"
        )
    for a in anchors:
        if a.kind in ("force", "stiffness") and a.h2 is None:
            raise CalibrationError(f"{a.kind} anchor requires an h2 value")
        if a.observed <= 0:
            raise CalibrationError("anchor observations must be positive")
    if weights is None:
        weights = [1.0] * len(anchors)

    x0 = [
        start.modulating.flat_width, start.modulating.flat_length,
        start.morphing.flat_width, start.morphing.flat_length,
        start.belt_span,
    ]

    def residuals(x):
        try:
            rig = _rig_from_vector(x, start)
        except ValueError:
            return [1e3] * len(anchors)
        out = []
        for w, a in zip(weights, anchors):
            try:
                pred = _predict(rig, a)
            except (RigDomainError, PouchDomainError):
                pred = 0.0
            out.append(w * (pred - a.observed) / a.observed)
        return out

    sol = least_squares(
        residuals, x0, method="trf",
        bounds=([1.0, 1.0, 1.0, 1.0, 10.0], [500.0, 2000.0, 500.0, 2000.0, 500.0]),
        xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=400,
    )
    rig = _rig_from_vector(sol.x, start)
    return CalibrationResult(rig=rig, residuals=list(sol.fun), anchors=anchors)
