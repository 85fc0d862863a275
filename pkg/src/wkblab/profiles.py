"""Smooth compactly supported amplitude profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class Profile:
    """``amplitude * exp(1 - 1/(1 - r^2))`` with ``r = (x - center)/half_width`` on a periodic line."""

    center: float = 0.0
    half_width: float = 0.5
    amplitude: float = 1.0
    kind: str = "bump"

    def __post_init__(self):
        if self.kind != "bump":
            raise ValueError(f"unsupported profile kind {self.kind!r}")
        if not 0.0 < self.half_width < math.pi / 2:
            raise ValueError("half_width must lie in (0, pi/2)")
        if not self.amplitude > 0.0:
            raise ValueError("amplitude must be positive")

    def __call__(self, x, deriv: int = 0, period: float = 2 * math.pi) -> np.ndarray:
        return kernels.bump(x, self.center, self.half_width, self.amplitude, period, deriv)

    def scaled(self, factor: float) -> "Profile":
        return Profile(self.center, self.half_width, self.amplitude * factor, self.kind)

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.half_width, self.center + self.half_width)
