"""The uniform law on the ellipse with semi-axes (1 + tau, 1 - tau).

Sampling, the real-part marginal, its tail mass, and the quantile of the
tail mass. The marginal of the uniform law over the vertical chord at
abscissa s has density 2 sqrt((1+tau)^2 - s^2) / (pi (1+tau)^2): the chord
height scaled by the ellipse area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SamplerError

_REJECTION_CAP = 10**6


@dataclass(frozen=True)
class EllipseParams:
    """Shape parameter of the ellipse; semi-axes are (1 + tau, 1 - tau)."""

    tau: float

    def __post_init__(self):
        if not -1.0 < self.tau < 1.0:
            raise DomainError(f"EllipseParams requires -1 < tau < 1, got {self.tau}")

    @property
    def semi_axis_x(self) -> float:
        return 1.0 + self.tau

    @property
    def semi_axis_y(self) -> float:
        return 1.0 - self.tau

    @property
    def area(self) -> float:
        return math.pi * self.semi_axis_x * self.semi_axis_y


def sample_uniform_ellipse(params: EllipseParams, rng: np.random.Generator, size: int | None = None):
    """Uniform points on the ellipse by rejection from its bounding box.

    Returns an (x, y) tuple when ``size`` is None, else an (size, 2) array.
    Acceptance probability is pi/4; the attempt budget (10^6 per requested
    point) only trips on a broken generator.
    """
    want = 1 if size is None else int(size)
    if want < 1:
        raise DomainError(f"size must be >= 1 when given, got {size}")
    ax, ay = params.semi_axis_x, params.semi_axis_y
    out = np.empty((want, 2))
    filled = 0
    attempts = 0
    while filled < want:
        chunk = max(16, int(1.4 * (want - filled)))
        attempts += chunk
        if attempts > _REJECTION_CAP * want:
            raise SamplerError(
                f"ellipse rejection sampler exceeded {attempts} attempts for {want} points"
            )
        xs = rng.uniform(-ax, ax, size=chunk)
        ys = rng.uniform(-ay, ay, size=chunk)
        keep = (xs / ax) ** 2 + (ys / ay) ** 2 <= 1.0
        got = int(keep.sum())
        take = min(got, want - filled)
        out[filled : filled + take, 0] = xs[keep][:take]
        out[filled : filled + take, 1] = ys[keep][:take]
        filled += take
    if size is None:
        return float(out[0, 0]), float(out[0, 1])
    return out


def real_marginal_density(s, tau: float):
    """Density of the real part of a uniform point on the ellipse.

    2 sqrt((1+tau)^2 - s^2) / (pi (1+tau)^2) on |s| <= 1+tau, zero outside.
    Accepts scalars or arrays.
    """
    if not -1.0 < tau < 1.0:
        raise DomainError(f"real_marginal_density requires -1 < tau < 1, got tau={tau}")
    a = 1.0 + tau
    s_arr = np.asarray(s, dtype=float)
    inside = np.abs(s_arr) <= a
    dens = np.zeros_like(s_arr)
    dens[inside] = 2.0 * np.sqrt(a * a - s_arr[inside] ** 2) / (math.pi * a * a)
    if np.isscalar(s) or s_arr.ndim == 0:
        return float(dens)
    return dens


def tail_mass(s, tau: float):
    """Mass of {Re z >= s} under the uniform law on the ellipse.

    Closed form on |s| <= 1+tau:

        1/2 - [ s sqrt((1+tau)^2 - s^2) / (pi (1+tau)^2) + arcsin(s/(1+tau)) / pi ]

    clamped to 1 below the support and 0 above it. Strictly decreasing on the
    support; accepts scalars or arrays.
    """
    if not -1.0 < tau < 1.0:
        raise DomainError(f"tail_mass requires -1 < tau < 1, got tau={tau}")
    a = 1.0 + tau
    s_arr = np.asarray(s, dtype=float)
    clipped = np.clip(s_arr, -a, a)
    mass = 0.5 - (
        clipped * np.sqrt(np.maximum(a * a - clipped**2, 0.0)) / (math.pi * a * a)
        + np.arcsin(clipped / a) / math.pi
    )
    mass = np.where(s_arr <= -a, 1.0, np.where(s_arr >= a, 0.0, mass))
    if np.isscalar(s) or s_arr.ndim == 0:
        return float(mass)
    return mass


def tail_quantile(gamma: float, tau: float, tol: float = 1e-12) -> float:
    """The abscissa s with tail_mass(s, tau) = gamma, by bisection.

    The tail mass is strictly decreasing on (-(1+tau), 1+tau), so the root is
    unique. gamma = 1/2 returns exactly 0.0 (the marginal is even). The search
    interval is clamped a relative 1e-14 inside the support so the vanishing
    density at the edges cannot stall the bracket; iteration stops once the
    bracket is narrower than tol * (1+tau).
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"tail_quantile requires 0 < gamma < 1, got {gamma}")
    if not tol > 0.0:
        raise DomainError(f"tol must be > 0, got {tol}")
    if not -1.0 < tau < 1.0:
        raise DomainError(f"tail_quantile requires -1 < tau < 1, got tau={tau}")
    if gamma == 0.5:
        return 0.0
    a = 1.0 + tau
    lo = -a * (1.0 - 1e-14)
    hi = a * (1.0 - 1e-14)
    for _ in range(200):
        if hi - lo <= tol * a:
            break
        mid = 0.5 * (lo + hi)
        if tail_mass(mid, tau) > gamma:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
