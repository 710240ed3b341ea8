"""A-priori lower bounds on the film height.

Two closed forms share the bracket  b(Q) = sqrt(e^Q / (e^Q - 1)) - 1:

    analysis form   M = k1 sqrt(L) b(k4 k1^2)
    physical form   M = sqrt(2 C L E) b(4 C E^2 / |A|),   E = F0 + F1 |A|

b(Q) ~ e^-Q / 2 underflows for Q above roughly 745, so every bound also has
a log-space evaluation that stays finite.
"""
from dataclasses import dataclass

import numpy as np

from .grid import integrate
from .model import energy


class DegenerateBoundError(ValueError):
    """The bound is undefined (for example k1 = 0 from zero initial energy)."""


class BoundViolation(AssertionError):
    """A simulated minimum height fell below the certified floor."""


@dataclass(frozen=True)
class BoundInputs:
    k1: float
    k4: float
    L: float
    F0: float
    F1: float
    C: float
    A_abs: float

    @property
    def degenerate(self):
        return not (self.k1 > 0 and self.k4 > 0)

    @property
    def E(self):
        """Initial energy in the recombined form F0 + F1 |A|."""
        return self.F0 + self.F1 * self.A_abs


def constants_from_initial_data(s0, p):
    """Bound constants from the initial state.

    k1 = sqrt(2 C F(0)) bounds ||h_x||_2 because the capillary term
    h_x^2 / (2C) is one of the nonnegative pieces of F; k4 = F(0) bounds the
    G integral the same way.  F0 excludes the VdW part of F(0).
    """
    if p.A > 0:
        raise ValueError("bounds need a nonattractive VdW term (A <= 0)")
    if s0.h_min <= 0:
        raise ValueError("initial height must be positive")
    F = energy(s0, p).F
    F1 = 0.5 * integrate(s0.h**-2.0, s0.grid)
    return BoundInputs(
        k1=float(np.sqrt(2.0 * p.C * max(F, 0.0))),
        k4=float(F),
        L=s0.grid.length,
        F0=float(F - p.A_abs * F1),
        F1=float(F1),
        C=p.C,
        A_abs=p.A_abs,
    )


def bracket(Q):
    """sqrt(e^Q / (e^Q - 1)) - 1, evaluated without cancellation."""
    Q = np.asarray(Q, dtype=float)
    if np.any(Q <= 0):
        raise ValueError("Q must be positive")
    with np.errstate(over="ignore"):
        x = 1.0 / np.expm1(Q)  # exactly 0 once expm1 overflows; see log_bracket
    return x / (np.sqrt(1.0 + x) + 1.0)


def log_bracket(Q):
    Q = np.asarray(Q, dtype=float)
    if np.any(Q <= 0):
        raise ValueError("Q must be positive")
    # log x with x = 1 / expm1(Q), safe at both ends
    big = Q > 30.0
    Qs = np.where(big, 1.0, Q)
    logx = np.where(big, -Q - np.log1p(-np.exp(-np.where(big, Q, 30.0))), -np.log(np.expm1(Qs)))
    # log(sqrt(1 + x) + 1) = logaddexp(log1p(x) / 2, 0)
    return logx - np.logaddexp(0.5 * np.logaddexp(0.0, logx), 0.0)


def _check(b):
    if b.degenerate:
        raise DegenerateBoundError(f"bound undefined for k1={b.k1}, k4={b.k4}")
    if not b.L > 0:
        raise ValueError("L must be positive")


def min_height_bound_analysis(b):
    """M = k1 sqrt(L) (sqrt(1 + 1/(e^{k4 k1^2} - 1)) - 1); may underflow to 0."""
    _check(b)
    return float(b.k1 * np.sqrt(b.L) * bracket(b.k4 * b.k1**2))


def log_min_height_bound_analysis(b):
    _check(b)
    return float(np.log(b.k1) + 0.5 * np.log(b.L) + log_bracket(b.k4 * b.k1**2))


def _physical_parts(b):
    if not (b.C > 0 and b.L > 0 and b.A_abs > 0):
        raise ValueError("C, L and |A| must be positive")
    E = b.E
    if not E > 0:
        raise DegenerateBoundError("F0 + F1 |A| must be positive")
    return 2.0 * b.C * b.L * E, 4.0 * b.C * E * E / b.A_abs


def min_height_bound_physical(b):
    """M(|A|, C) written in terms of F0, F1 and the physical parameters."""
    pre, Q = _physical_parts(b)
    return float(np.sqrt(pre) * bracket(Q))


def log_min_height_bound_physical(b):
    pre, Q = _physical_parts(b)
    return float(0.5 * np.log(pre) + log_bracket(Q))


def m_curve(A_abs, F0=0.5, F1=0.5, C=1.0, L=1.0):
    """M over an array of |A| at fixed F0, F1, C, L."""
    A_abs = np.asarray(A_abs, dtype=float)
    E = F0 + F1 * A_abs
    return np.sqrt(2.0 * C * L * E) * bracket(4.0 * C * E * E / A_abs)


@dataclass(frozen=True)
class BoundReport:
    h_min_observed: float
    M: float
    log_M: float
    form: str

    @property
    def slack(self):
        return self.h_min_observed - self.M

    @property
    def holds(self):
        return self.h_min_observed >= self.M

    @property
    def ratio(self):
        """h_min / M, computed in log space so it survives an underflowed M."""
        return float(np.exp(min(np.log(self.h_min_observed) - self.log_M, 700.0)))


def bound_vs_simulation(traj, b, form="analysis", strict=True):
    """Compare the smallest height seen in ``traj`` with the bound.

    Raises BoundViolation if ``strict`` and the observed minimum is below M.
    """
    if form == "analysis":
        M, log_M = min_height_bound_analysis(b), log_min_height_bound_analysis(b)
    elif form == "physical":
        M, log_M = min_height_bound_physical(b), log_min_height_bound_physical(b)
    else:
        raise ValueError("form must be 'analysis' or 'physical'")
    h_obs = min(traj.h_min) if traj.h_min else float("inf")
    h_obs = min(h_obs, getattr(traj, "h_min_overall", h_obs))
    rep = BoundReport(float(h_obs), M, log_M, form)
    if strict and not rep.holds:
        raise BoundViolation(f"observed h_min {rep.h_min_observed:.6g} below bound {M:.6g}")
    return rep
