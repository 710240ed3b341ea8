"""Uniform periodic grid, derivatives, quadrature and norms.

Fields are plain 1-D numpy arrays sampled at ``Grid.x``; every operator
here takes the array together with the grid it lives on.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np


def check_finite(f, name="field"):
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{name} contains non-finite entries")
    return f


@dataclass(frozen=True)
class Grid:
    """Periodic grid on [0, length) with ``n`` equispaced samples."""

    length: float
    n: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("grid length must be positive")
        if self.n < 8 or self.n % 2:
            raise ValueError("grid needs an even number of points, n >= 8")

    @property
    def dx(self):
        return self.length / self.n

    @cached_property
    def x(self):
        return np.arange(self.n) * self.dx

    @cached_property
    def k(self):
        """Angular wavenumbers matching ``np.fft.rfft`` ordering."""
        return 2 * np.pi * np.fft.rfftfreq(self.n, d=self.dx)

    def ik_power(self, order):
        """Fourier multiplier (ik)**order with the odd-order Nyquist entry zeroed."""
        mult = (1j * self.k) ** order
        if order % 2:
            mult[-1] = 0.0
        return mult

    def zeros(self):
        return np.zeros(self.n)

    def full(self, value):
        return np.full(self.n, float(value))


_FD_STENCILS = {
    # weights for f[i + p], p = -3..3
    1: (np.array([0, 1, -8, 0, 8, -1, 0]) / 12.0),
    2: (np.array([0, -1, 16, -30, 16, -1, 0]) / 12.0),
    3: (np.array([1, -8, 13, 0, -13, 8, -1]) / 8.0),
    4: (np.array([-1, 12, -39, 56, -39, 12, -1]) / 6.0),
}


def deriv(f, grid, order=1, method="spectral"):
    """Periodic derivative of ``f`` of the given order (1 to 4).

    ``method="spectral"`` differentiates in Fourier space; ``"fd"`` uses
    7-point centered stencils that are 4th-order accurate.
    """
    if order not in (1, 2, 3, 4):
        raise ValueError("derivative order must be 1, 2, 3 or 4")
    f = check_finite(f)
    if method == "spectral":
        return np.fft.irfft(grid.ik_power(order) * np.fft.rfft(f), n=grid.n)
    if method == "fd":
        out = np.zeros_like(f)
        for w, p in zip(_FD_STENCILS[order], range(-3, 4)):
            if w:
                out += w * np.roll(f, -p)
        return out / grid.dx**order
    raise ValueError(f"unknown derivative method {method!r}")


def integrate(f, grid):
    """Periodic rectangle rule, exact for trigonometric polynomials below Nyquist."""
    return float(np.sum(check_finite(f)) * grid.dx)


def norm(f, grid, p=2):
    f = check_finite(f)
    if p == 1:
        return float(np.sum(np.abs(f)) * grid.dx)
    if p == 2:
        return float(np.sqrt(np.sum(f * f) * grid.dx))
    if p in (np.inf, "inf"):
        return float(np.max(np.abs(f)))
    raise ValueError("p must be 1, 2 or inf")


def spectral_tail(f, grid):
    """Largest Fourier amplitude above n/4, relative to the peak amplitude."""
    fh = np.abs(np.fft.rfft(check_finite(f)))
    peak = fh.max()
    if peak == 0:
        return 0.0
    return float(fh[grid.n // 4 + 1:].max() / peak)


def fourier_interpolate(f, grid, factor=8):
    """Band-limited interpolant of ``f`` on a grid ``factor`` times finer."""
    fh = np.fft.rfft(f)
    m = grid.n * factor
    padded = np.zeros(m // 2 + 1, dtype=complex)
    padded[: fh.size] = fh
    padded[grid.n // 2] *= 0.5  # old Nyquist becomes an ordinary two-sided mode
    return np.fft.irfft(padded, n=m) * factor


@dataclass(frozen=True)
class SobolevSlack:
    """Slacks of the two periodic embedding inequalities (nonnegative when they hold)."""

    sup_bound: float
    sup_value: float
    grad_bound: float
    grad_value: float
    reliable: bool

    @property
    def sup_slack(self):
        return self.sup_bound - self.sup_value

    @property
    def grad_slack(self):
        return self.grad_bound - self.grad_value


def check_sobolev_inequalities(f, grid):
    """Evaluate both sides of

        sup|f|      <= |f|_2 / sqrt(L) + sqrt(L) |f_x|_2
        |f_x|_2^2   <= L |f_xx|_1^2 + (4/L) |f|_1 |f_xx|_1

    The supremum is taken on an 8x Fourier-refined grid so the left side is
    not underestimated by sampling.
    """
    f = check_finite(f)
    L = grid.length
    fx = deriv(f, grid, 1)
    fxx = deriv(f, grid, 2)
    sup = float(np.max(np.abs(fourier_interpolate(f, grid))))
    sup = max(sup, float(np.max(np.abs(f))))
    n2, nx2 = norm(f, grid, 2), norm(fx, grid, 2)
    n1, nxx1 = norm(f, grid, 1), norm(fxx, grid, 1)
    return SobolevSlack(
        sup_bound=n2 / np.sqrt(L) + np.sqrt(L) * nx2,
        sup_value=sup,
        grad_bound=L * nxx1**2 + 4.0 / L * n1 * nxx1,
        grad_value=nx2**2,
        reliable=spectral_tail(f, grid) <= 1e-3,
    )


def random_trig_polynomial(grid, degree, rng, amplitude=1.0):
    """Random real trigonometric polynomial of the given degree sampled on ``grid``.

    Returns the samples and the coefficient vector (a0, a1, b1, ..., ad, bd).
    """
    if degree >= grid.n // 2:
        raise ValueError("degree must stay below the Nyquist index")
    coef = amplitude * rng.standard_normal(2 * degree + 1)
    x = grid.x
    kk = 2 * np.pi / grid.length
    f = np.full(grid.n, coef[0])
    for m in range(1, degree + 1):
        f += coef[2 * m - 1] * np.cos(m * kk * x) + coef[2 * m] * np.sin(m * kk * x)
    return f, coef
