"""Uniform periodic grids for one-dimensional continuous quantum systems.

Positions span [-L/2, L/2) with N points; the conjugate momentum grid is
the FFT wavenumber grid scaled by ℏ, spanning [-πℏN/L, πℏN/L).  The
momentum operator is realized pseudospectrally as P = -iℏ d/dq, i.e. a
forward transform, a diagonal multiply by ℏk, and an inverse transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import LocalizationError

#: Minimum number of grid points per position standard deviation.
POINTS_PER_SIGMA = 4.0

#: Number of standard deviations that must fit between a mean and the grid edge.
EDGE_SIGMAS = 6.0


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridSpec:
    """Discretization of a 1D continuous degree of freedom.

    Attributes:
        n_points: number of grid points; a power of two, at least 8.
        length: spatial extent L; positions span [-L/2, L/2).
        hbar: value of ℏ carried by this representation (default 1).
    """

    n_points: int
    length: float
    hbar: float = 1.0

    def __post_init__(self) -> None:
        n = self.n_points
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"n_points must be a power of two >= 8, got {n}")
        if not (self.length > 0):
            raise ValueError(f"length must be positive, got {self.length}")
        if not (self.hbar > 0):
            raise ValueError(f"hbar must be positive, got {self.hbar}")

    @property
    def spacing(self) -> float:
        """Position-grid spacing Δq = L/N."""
        return self.length / self.n_points

    @property
    def momentum_spacing(self) -> float:
        """Momentum-grid spacing Δp = 2πℏ/L."""
        return 2.0 * np.pi * self.hbar / self.length

    @property
    def momentum_extent(self) -> float:
        """Largest representable |p| = πℏN/L (the grid spans [-p_max, p_max))."""
        return np.pi * self.hbar * self.n_points / self.length

    @cached_property
    def positions(self) -> np.ndarray:
        """Position values q_j = -L/2 + j Δq."""
        return _frozen(-0.5 * self.length + self.spacing * np.arange(self.n_points))

    @cached_property
    def fft_momenta(self) -> np.ndarray:
        """Momentum values ℏk in FFT storage order (for transform-side multiplies)."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)
        return _frozen(self.hbar * k)

    def check_localization(self, mean_q: float, sigma_q: float, mean_p: float = 0.0) -> None:
        """Validate that a Gaussian of the given moments is representable.

        Raises LocalizationError naming the violated margin.  The guard
        requires σ_q >= 4 Δq, the interval mean_q ± 6σ_q inside the grid,
        and the momentum analogue |mean_p| + 6σ_p inside the momentum grid.
        """
        if sigma_q < POINTS_PER_SIGMA * self.spacing:
            raise LocalizationError(
                f"sigma_q={sigma_q:g} under-resolved: requires at least "
                f"{POINTS_PER_SIGMA:g} grid spacings ({POINTS_PER_SIGMA * self.spacing:g})"
            )
        lo, hi = -0.5 * self.length, 0.5 * self.length
        if mean_q - EDGE_SIGMAS * sigma_q < lo or mean_q + EDGE_SIGMAS * sigma_q > hi:
            raise LocalizationError(
                f"position margin violated: mean_q={mean_q:g} ± "
                f"{EDGE_SIGMAS:g}·sigma_q={EDGE_SIGMAS * sigma_q:g} exceeds "
                f"[{lo:g}, {hi:g})"
            )
        sigma_p = 0.5 * self.hbar / sigma_q
        if abs(mean_p) + EDGE_SIGMAS * sigma_p > self.momentum_extent:
            raise LocalizationError(
                f"momentum margin violated: |mean_p|={abs(mean_p):g} + "
                f"{EDGE_SIGMAS:g}·sigma_p={EDGE_SIGMAS * sigma_p:g} exceeds "
                f"p_max={self.momentum_extent:g}"
            )
