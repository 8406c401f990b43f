"""Closed-form capacitance models.

Lengths in µm, capacitance in aF.  The line-over-plane forms use the
classical Sakurai coefficients; out-of-window geometry triggers a
:class:`ModelValidityWarning` and the value is still returned.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

EPS0 = 8.854  # aF / µm
VALID = (0.3, 30.0)
EXP = 0.222


class ModelValidityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class WireGeometry:
    w: float
    t: float
    h: float
    length: float
    s: float | None = None

    def __post_init__(self):
        for name in ("w", "t", "h", "length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"wire geometry: {name} must be > 0")
        if self.s is not None and not self.s > 0:
            raise ValueError("wire geometry: s must be > 0")

    @classmethod
    def from_nm(cls, w, t, h, length, s=None) -> "WireGeometry":
        return cls(w / 1000, t / 1000, h / 1000, length / 1000, None if s is None else s / 1000)


def _check_window(g: WireGeometry) -> bool:
    lo, hi = VALID
    ok = lo <= g.w / g.h <= hi and lo <= g.t / g.h <= hi
    if not ok:
        warnings.warn(
            f"closed form used outside its window: w/h={g.w / g.h:.3g}, t/h={g.t / g.h:.3g}",
            ModelValidityWarning,
            stacklevel=3,
        )
    return ok


def cap_parallel_plate(area: float, d: float, k: float) -> float:
    """``k * eps0 * area / d``."""
    if area < 0 or d <= 0:
        raise ValueError("plate: need area >= 0 and d > 0")
    return k * EPS0 * area / d


def sakurai_total_per_length(w_h: float, t_h: float) -> float:
    """Normalized ground capacitance ``C / (k eps0 L)`` of an isolated line."""
    return 1.15 * w_h + 2.80 * t_h**EXP


def sakurai_coupling_per_length(w_h: float, t_h: float, s_h: float) -> float:
    """Normalized line-to-line coupling ``Cc / (k eps0 L)``."""
    return (0.03 * w_h + 0.83 * t_h - 0.07 * t_h**EXP) * s_h**-1.34


def cap_sakurai_total(g: WireGeometry, k: float) -> float:
    _check_window(g)
    return k * EPS0 * sakurai_total_per_length(g.w / g.h, g.t / g.h) * g.length


def cap_sakurai_coupling(g: WireGeometry, k: float) -> float:
    if g.s is None:
        raise ValueError("coupling needs a neighbour spacing s")
    _check_window(g)
    return k * EPS0 * sakurai_coupling_per_length(g.w / g.h, g.t / g.h, g.s / g.h) * g.length


def cap_plate_with_fringe(a: float, b: float, d: float, t: float, k: float) -> float:
    """Plate of sides ``a x b`` at gap ``d`` plus an edge fringe along its perimeter.

    Each edge carries half of the line-over-plane fringe term, i.e.
    ``1.40 (t/d)^0.222`` per unit length, where ``t`` is the conductor
    thickness normal to the plate.
    """
    if a <= 0 or b <= 0 or d <= 0 or t <= 0:
        raise ValueError("plate with fringe: all dimensions must be > 0")
    return k * EPS0 * (a * b / d + 1.40 * (t / d) ** EXP * 2 * (a + b))


def plate_vs_full(a: float, b: float, d: float, t: float, k: float) -> tuple:
    """``(plate, full)`` capacitances of an ``a x b`` plate pair at gap ``d``."""
    return cap_parallel_plate(a * b, d, k), cap_plate_with_fringe(a, b, d, t, k)
