"""Thin-film Cahn-Hilliard physics on a periodic grid.

The height h and concentration c obey

    h_t + J_x = 0,
    (c h)_t + (J c)_x = (h mu_x)_x,

with the depth-integrated flux

    J  = h^2 sigma_x / 2 - h^3 B / 3,
    B  = d/dx(-h_xx / C + phi) + (r / h) d/dx(h c_x^2),
    mu = c^3 - c - (Cn^2 / h) d/dx(h c_x),

and the body potential phi = A h^(-n).  A < 0 is the repulsive branch.
"""
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate as _quad

from .grid import Grid, check_finite, integrate


class NonPositiveHeightError(ValueError):
    """Raised when a height field touches or crosses zero."""


def _require_positive(h):
    if np.min(h) <= 0:
        raise NonPositiveHeightError(f"film height must stay positive (min h = {np.min(h):.3g})")


@dataclass(frozen=True)
class Params:
    """Dimensionless model constants.

    ``sigma`` is an optional static surface-tension profile: ``None`` for a
    uniform tension, a callable of x, or an array sampled on the grid.
    """

    C: float
    Cn: float
    r: float = 0.0
    A: float = -1.0
    n_vdw: int = 3
    sigma: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("capillary number C must be positive")
        if not self.Cn > 0:
            raise ValueError("Cahn number Cn must be positive")
        if self.r < 0:
            raise ValueError("backreaction r must be nonnegative")
        if int(self.n_vdw) != self.n_vdw or self.n_vdw < 1:
            raise ValueError("n_vdw must be a positive integer")

    @property
    def A_abs(self):
        return abs(self.A)

    @property
    def repulsive(self):
        return self.A <= 0

    def sigma_x(self, grid):
        if self.sigma is None:
            return np.zeros(grid.n)
        prof = self.sigma(grid.x) if callable(self.sigma) else self.sigma
        prof = check_finite(prof, "sigma")
        if prof.shape != (grid.n,):
            raise ValueError("sigma profile does not match the grid")
        return _d(np.fft.rfft(prof), grid, 1)

    def replace(self, **changes):
        kw = dict(C=self.C, Cn=self.Cn, r=self.r, A=self.A, n_vdw=self.n_vdw, sigma=self.sigma)
        kw.update(changes)
        return Params(**kw)


@dataclass(frozen=True)
class State:
    grid: Grid
    h: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        h = check_finite(self.h, "h").copy()
        c = check_finite(self.c, "c").copy()
        if h.shape != (self.grid.n,) or c.shape != (self.grid.n,):
            raise ValueError("h and c must both be sampled on the grid")
        _require_positive(h)
        h.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "c", c)

    @classmethod
    def uniform(cls, grid, h=1.0, c=0.0):
        return cls(grid, grid.full(h), grid.full(c))

    @property
    def h_min(self):
        return float(np.min(self.h))

    @property
    def volume(self):
        return integrate(self.h, self.grid)

    @property
    def mass(self):
        return integrate(self.c * self.h, self.grid)


class EnergyBreakdown(NamedTuple):
    F1: float
    F2: float
    D_film: float
    D_diff: float
    certified: bool

    @property
    def F(self):
        return self.F1 + self.F2

    @property
    def dissipation(self):
        return self.D_film + self.D_diff


class Tendencies(NamedTuple):
    dh_dt: np.ndarray
    dch_dt: np.ndarray
    dc_dt: np.ndarray


def _d(fh, grid, order):
    return np.fft.irfft(grid.ik_power(order) * fh, n=grid.n)


def vdw_potential(h, p):
    h = check_finite(h, "h")
    _require_positive(h)
    return p.A * h ** (-float(p.n_vdw))


def vdw_energy_density(h, p):
    """Potential V(h) with V'(h) = phi(h); equals |A|/(2h^2) for the cubic repulsive case."""
    n = p.n_vdw
    if n == 1:
        return -p.A * np.log(h)
    return -p.A * h ** (1.0 - n) / (n - 1)


class _Terms(NamedTuple):
    hx: np.ndarray
    cx: np.ndarray
    B: np.ndarray
    J: np.ndarray
    mu: np.ndarray
    mux: np.ndarray


def _terms(s, p):
    g = s.grid
    h, c = s.h, s.c
    hh, ch = np.fft.rfft(h), np.fft.rfft(c)
    hx, hxx = _d(hh, g, 1), _d(hh, g, 2)
    cx = _d(ch, g, 1)
    pressure = -hxx / p.C + p.A * h ** (-float(p.n_vdw))
    B = _d(np.fft.rfft(pressure), g, 1)
    if p.r:
        B = B + p.r / h * _d(np.fft.rfft(h * cx * cx), g, 1)
    J = -(h**3) * B / 3.0
    if p.sigma is not None:
        J = J + 0.5 * h * h * p.sigma_x(g)
    mu = c**3 - c - p.Cn**2 / h * _d(np.fft.rfft(h * cx), g, 1)
    mux = _d(np.fft.rfft(mu), g, 1)
    return _Terms(hx, cx, B, J, mu, mux)


def chemical_potential(s, p):
    g = s.grid
    cx = _d(np.fft.rfft(s.c), g, 1)
    return s.c**3 - s.c - p.Cn**2 / s.h * _d(np.fft.rfft(s.h * cx), g, 1)


def flux(s, p):
    """Depth-integrated volume flux J (Marangoni, capillary + VdW, backreaction)."""
    return _terms(s, p).J


flux_J = flux


def rhs(s, p):
    """Time derivatives of h, c*h and c for the conservative system."""
    g = s.grid
    t = _terms(s, p)
    dh = -_d(np.fft.rfft(t.J), g, 1)
    dch = _d(np.fft.rfft(s.h * t.mux - t.J * s.c), g, 1)
    dc = (dch - s.c * dh) / s.h
    return Tendencies(dh, dch, dc)


def energy(s, p):
    """Lyapunov functional F = F1 + F2 and the two dissipation integrals.

    ``certified`` is False when the decay identity dF/dt = -(D_film + D_diff)
    is not guaranteed: attractive VdW (A > 0) or a non-uniform surface tension.
    """
    g = s.grid
    t = _terms(s, p)
    F1 = integrate(t.hx**2 / (2.0 * p.C) + vdw_energy_density(s.h, p), g)
    w = 0.25 * (s.c**2 - 1.0) ** 2 + 0.5 * p.Cn**2 * t.cx**2
    F2 = p.r / p.Cn**2 * integrate(s.h * w, g)
    D_film = integrate(s.h**3 * t.B**2, g) / 3.0
    D_diff = p.r / p.Cn**2 * integrate(s.h * t.mux**2, g)
    return EnergyBreakdown(F1, F2, D_film, D_diff, bool(p.repulsive and p.sigma is None))


@dataclass(frozen=True)
class VelocityProfile:
    """Lubrication velocity U0(x, z) sampled on ``nz`` levels per column."""

    z: np.ndarray
    u: np.ndarray

    def depth_integral(self):
        return _quad.simpson(self.u, x=self.z, axis=1)


def reconstruct_velocity(s, p, nz=64):
    """Horizontal velocity inside the film, zero at the substrate.

    U0 = z sigma_x + (z^2/2 - h z) B, so that the depth integral returns J.
    """
    if nz < 2:
        raise ValueError("need at least two vertical samples")
    t = _terms(s, p)
    z = s.h[:, None] * np.linspace(0.0, 1.0, nz)[None, :]
    u = (0.5 * z * z - s.h[:, None] * z) * t.B[:, None]
    if p.sigma is not None:
        u = u + z * p.sigma_x(s.grid)[:, None]
    return VelocityProfile(z, u)


def linear_growth_rates(p, k):
    """Decoupled linear rates of a mode exp(ikx) about (h, c) = (1, 0)."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("wavenumbers must be nonnegative")
    k2 = k * k
    lam_c = k2 - p.Cn**2 * k2 * k2
    lam_h = -k2 * k2 / (3.0 * p.C) + p.n_vdw * p.A / 3.0 * k2
    return lam_h, lam_c
