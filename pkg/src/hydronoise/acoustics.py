"""Sound propagation math kernel.

Implements the sonar-equation pieces used by the noise engine:

* source level with the speed correction above a reference speed and a
  fishing-gear increment,
* transmission loss as a hybrid of spherical spreading (20 log10 r) within
  the transition range and mode stripping (15 log10 r + 5 log10 r_trans)
  beyond it, plus linear absorption alpha * r,
* received level RL = SL - TL_tot - AN (excess over ambient),
* the closed-form propagation radius at which RL reaches zero when
  absorption is ignored (a safe overestimate),
* incoherent summation of levels in intensity space.

All functions are pure, accept scalars or numpy arrays (broadcasting), and
return a float for all-scalar input. dB arithmetic is double precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "FrequencyParams",
    "SoundContext",
    "DEFAULT_FREQUENCIES",
    "DEFAULT_CONTEXT",
    "source_level",
    "transmission_loss",
    "received_level",
    "propagation_radius",
    "sum_levels",
]

_FISHING_INCREMENTS = (5.0, 10.0, 15.0)
_TRANSITION_MULTIPLIERS = (10.0, 4.0, 2.0)


@dataclass(frozen=True)
class FrequencyParams:
    """Per-frequency model constants.

    ``anchor_sl0`` is the base source level of the 835 Hp reference vessel,
    ``fishing_inc`` the dB increment radiated while fishing, ``trans_mult``
    the water-depth multiplier giving the spherical-to-mode-stripping
    transition range, and ``alpha`` the absorption coefficient in dB/m.
    """

    f: int
    anchor_sl0: float
    fishing_inc: float
    trans_mult: float
    alpha: float

    def __post_init__(self) -> None:
        if self.fishing_inc not in _FISHING_INCREMENTS:
            raise ValueError(f"fishing_inc must be one of {_FISHING_INCREMENTS}")
        if self.trans_mult not in _TRANSITION_MULTIPLIERS:
            raise ValueError(f"trans_mult must be one of {_TRANSITION_MULTIPLIERS}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class SoundContext:
    """Speed-law constants: reference speed v0 (knots) and dB coefficient."""

    v0: float = 3.9
    speed_coeff: float = 15.39

    def __post_init__(self) -> None:
        if not self.v0 > 0:
            raise ValueError("v0 must be positive")


DEFAULT_CONTEXT = SoundContext()

DEFAULT_FREQUENCIES: Mapping[int, FrequencyParams] = {
    63: FrequencyParams(63, 136.0, 5.0, 10.0, 1e-6),
    125: FrequencyParams(125, 133.0, 10.0, 4.0, 1e-6),
    400: FrequencyParams(400, 126.0, 15.0, 4.0, 1e-5),
    4000: FrequencyParams(4000, 123.0, 15.0, 2.0, 1e-4),
}


def _as_result(x: np.ndarray, *scalar_inputs) -> float | np.ndarray:
    if all(np.ndim(v) == 0 for v in scalar_inputs):
        return float(x)
    return x


def source_level(sl0, speed, fishing, fp: FrequencyParams,
                 ctx: SoundContext = DEFAULT_CONTEXT):
    """Source level in dB at speed (knots) with optional fishing increment.

    Below the reference speed the base level applies unchanged; above it the
    level grows by speed_coeff * log10(speed / v0). ``fishing`` is 0 or 1
    (or an array of them) and switches the per-frequency increment on.
    """
    sl0 = np.asarray(sl0, dtype=np.float64)
    speed = np.asarray(speed, dtype=np.float64)
    fishing = np.asarray(fishing, dtype=np.float64)
    if np.any(speed < 0):
        raise ValueError("speed must be non-negative")
    # maximum() keeps log10 away from zero speeds; the where() picks the branch
    boost = ctx.speed_coeff * np.log10(np.maximum(speed, ctx.v0) / ctx.v0)
    sl = sl0 + np.where(speed > ctx.v0, boost, 0.0) + fishing * fp.fishing_inc
    return _as_result(sl, sl0, speed, fishing)


def transmission_loss(dist, r_trans, alpha):
    """Total transmission loss in dB over ``dist`` metres.

    Spherical spreading up to the transition range, mode stripping beyond,
    continuous at the handover; absorption alpha * dist added on top.
    """
    dist = np.asarray(dist, dtype=np.float64)
    r_trans = np.asarray(r_trans, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(dist <= 0):
        raise ValueError("dist must be positive")
    if np.any(r_trans <= 0):
        raise ValueError("r_trans must be positive")
    spherical = 20.0 * np.log10(dist)
    stripped = 15.0 * np.log10(dist) + 5.0 * np.log10(r_trans)
    tl = np.where(dist <= r_trans, spherical, stripped) + alpha * dist
    return _as_result(tl, dist, r_trans, alpha)


def received_level(sl, dist, r_trans, alpha, ambient):
    """Received level above ambient: SL - TL_tot - AN, in dB."""
    sl = np.asarray(sl, dtype=np.float64)
    ambient = np.asarray(ambient, dtype=np.float64)
    rl = sl - transmission_loss(dist, r_trans, alpha) - ambient
    return _as_result(rl, sl, dist, r_trans, alpha, ambient)


def propagation_radius(sl, r_trans, ambient):
    """Distance in metres beyond which the received level drops below zero.

    Closed form from the mode-stripping branch with absorption ignored,
    which overestimates the true radius and is therefore safe as a search
    cutoff. The result may come out smaller than r_trans for weak sources;
    callers use it as is.
    """
    sl = np.asarray(sl, dtype=np.float64)
    r_trans = np.asarray(r_trans, dtype=np.float64)
    ambient = np.asarray(ambient, dtype=np.float64)
    if np.any(r_trans <= 0):
        raise ValueError("r_trans must be positive")
    r = 10.0 ** ((sl - 5.0 * np.log10(r_trans) - ambient) / 15.0)
    return _as_result(r, sl, r_trans, ambient)


def sum_levels(levels: Iterable[float]) -> float:
    """Incoherent sum of dB levels: intensities add, then back to dB."""
    arr = np.asarray(list(levels) if not isinstance(levels, np.ndarray) else levels,
                     dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot sum an empty sequence of levels")
    return float(10.0 * np.log10(np.sum(10.0 ** (arr / 10.0))))
