"""Single-front equilibria on a truncated line (lengths scaled by Cn).

Solves

    h'' / C = |A| Cn^2 (1 - h^-3) + r [ (c^2 - 1)^2 / 4 + c'^2 / 2 ],
    c''     = c^3 - c - (h' / h) c',

on [-X, X] with h(+-X) = 1, c(-X) = -1, c(X) = 1, by damped Newton on
centred finite differences (order 2, 4 or 6) with an analytic sparse
Jacobian.  The front position is a near-null mode on a long domain, so the
Newton system is bordered by the phase condition c(0) = 0 and a multiplier
on c' that must come out at zero.
"""
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

log = logging.getLogger(__name__)


class BvpDivergence(RuntimeError):
    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class BvpConfig:
    half_width: float = 20.0
    n_points: int = 1201
    newton_tol: float = 1e-12
    max_iter: int = 50
    continuation: Optional[Sequence[float]] = None
    order: int = 6

    def __post_init__(self):
        if self.order not in _D1:
            raise ValueError("order must be 2, 4 or 6")
        if self.half_width < 10:
            raise ValueError("half_width must be at least 10 interface widths")
        if self.n_points < 201:
            raise ValueError("n_points must be at least 201")

    @property
    def x(self):
        return np.linspace(-self.half_width, self.half_width, self.n_points)


@dataclass(frozen=True)
class EquilibriumProfile:
    x: np.ndarray
    h: np.ndarray
    c: np.ndarray
    residual_norm: float
    iterations: int
    end_slopes: tuple = field(default=(0.0, 0.0))
    phase_multiplier: float = 0.0

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    @property
    def h_min(self):
        return float(np.min(self.h))

    @property
    def max_grad_c(self):
        return float(np.max(np.abs(np.gradient(self.c, self.dx))))

    @property
    def interface_width(self):
        """Distance over which c rises from -0.9 to 0.9."""
        i_lo = np.flatnonzero(self.c >= -0.9)[0]
        i_hi = np.flatnonzero(self.c >= 0.9)[0]

        def cross(i, level):
            c0, c1 = self.c[i - 1], self.c[i]
            return self.x[i - 1] + (level - c0) / (c1 - c0) * self.dx

        return float(cross(i_hi, 0.9) - cross(i_lo, -0.9))


def _check_params(p):
    if not p.A < 0:
        raise ValueError("equilibrium solver needs a repulsive VdW term (A < 0)")
    if p.r < 0:
        raise ValueError("r must be nonnegative")


_D1 = {
    2: [-1 / 2, 0.0, 1 / 2],
    4: [1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12],
    6: [-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60],
}
_D2 = {
    2: [1.0, -2.0, 1.0],
    4: [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12],
    6: [1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90],
}


def _pad(f, k):
    # ghost nodes beyond +-X carry the far-field values; the neglected tail is O(exp(-X))
    return np.concatenate([np.full(k - 1, f[0]), f, np.full(k - 1, f[-1])])


def _apply(weights, f, dx, power):
    """Centred difference at the interior nodes of ``f`` (boundary nodes included)."""
    k = len(weights) // 2
    P = _pad(f, k)
    m = f.size - 2
    out = np.zeros(m)
    for j, w in enumerate(weights):
        if w:
            out += w * P[j: j + m]
    return out / dx**power


def _matrix(weights, m, dx, power):
    k = len(weights) // 2
    offs = [j - k for j in range(len(weights)) if weights[j]]
    ws = [weights[j] / dx**power for j in range(len(weights)) if weights[j]]
    return sp.diags(ws, offs, shape=(m, m), format="csr")


def _centre_weights(x):
    """Row vector selecting c(0) from the interior unknowns."""
    xi = x[1:-1]
    e = np.zeros(xi.size)
    j = np.searchsorted(xi, 0.0)
    if np.isclose(xi[j], 0.0, atol=1e-12 * (x[-1] - x[0])):
        e[j] = 1.0
    else:
        t = (0.0 - xi[j - 1]) / (xi[j] - xi[j - 1])
        e[j - 1], e[j] = 1.0 - t, t
    return e


def residual(h, c, p, dx, order=2, nu=0.0):
    """Interior residuals (R_h, R_c) of the discretised equilibrium equations.

    ``nu`` multiplies an extra c' term in the c equation; it is the Lagrange
    multiplier of the phase condition c(0) = 0 and vanishes at a true solution.
    """
    a = p.A_abs * p.Cn**2
    hi, ci = h[1:-1], c[1:-1]
    d2h = _apply(_D2[order], h, dx, 2)
    d2c = _apply(_D2[order], c, dx, 2)
    dh = _apply(_D1[order], h, dx, 1)
    dc = _apply(_D1[order], c, dx, 1)
    Rh = d2h / p.C - a * (1 - hi**-3) - p.r * (0.25 * (ci**2 - 1) ** 2 + 0.5 * dc**2)
    Rc = d2c - (ci**3 - ci) + dh * dc / hi + nu * dc
    return Rh, Rc


def _jacobian(h, c, nu, p, dx, order):
    a = p.A_abs * p.Cn**2
    m = h.size - 2
    hi, ci = h[1:-1], c[1:-1]
    D1 = _matrix(_D1[order], m, dx, 1)
    D2 = _matrix(_D2[order], m, dx, 2)
    dh = _apply(_D1[order], h, dx, 1)
    dc = _apply(_D1[order], c, dx, 1)
    diag = sp.diags
    Jhh = D2 / p.C - diag(3 * a * hi**-4)
    Jhc = -diag(p.r * (ci**2 - 1) * ci) - diag(p.r * dc) @ D1
    Jcc = D2 - diag(3 * ci**2 - 1) + diag(dh / hi + nu) @ D1
    Jch = diag(dc / hi) @ D1 - diag(dh * dc / hi**2)
    return sp.bmat([[Jhh, Jhc], [Jch, Jcc]], format="csc"), dc


def _newton(p, cfg, h, c):
    x = cfg.x
    dx = x[1] - x[0]
    order = cfg.order
    h, c = h.copy(), c.copy()
    h[0] = h[-1] = 1.0
    c[0], c[-1] = -1.0, 1.0
    m = x.size - 2
    e = _centre_weights(x)
    nu = 0.0

    def res_vec(h, c, nu):
        Rh, Rc = residual(h, c, p, dx, order, nu)
        return np.concatenate([Rh, Rc, [e @ c[1:-1]]])

    R = res_vec(h, c, nu)
    rn = np.max(np.abs(R))
    # rounding floor of the second-difference residual; a stalled line search
    # below it counts as converged even if newton_tol is out of reach
    floor = max(cfg.newton_tol, 64 * np.finfo(float).eps * max(1.0 / p.C, 1.0) / dx**2)
    for it in range(cfg.max_iter + 1):
        if rn <= cfg.newton_tol:
            return h, c, nu, rn, it
        if it == cfg.max_iter:
            break
        J, dc = _jacobian(h, c, nu, p, dx, order)
        # bordered system: translation multiplier nu and the phase row c(0) = 0
        col = sp.csc_matrix(np.concatenate([np.zeros(m), dc])[:, None])
        row = sp.csr_matrix(np.concatenate([np.zeros(m), e])[None, :])
        K = sp.bmat([[J, col], [row, None]], format="csc")
        delta = spsolve(K, -R)
        lam = 1.0
        while lam > 1e-4:
            h_t = h.copy()
            c_t = c.copy()
            h_t[1:-1] += lam * delta[:m]
            c_t[1:-1] += lam * delta[m:2 * m]
            nu_t = nu + lam * delta[-1]
            if np.min(h_t) > 0:
                R_t = res_vec(h_t, c_t, nu_t)
                rn_t = np.max(np.abs(R_t))
                if np.isfinite(rn_t) and rn_t < (1 - 1e-4 * lam) * rn:
                    break
            lam *= 0.5
        else:
            if rn <= floor:
                return h, c, nu, rn, it
            raise BvpDivergence(f"line search stalled at residual {rn:.3g}", (h, c))
        h, c, nu, R, rn = h_t, c_t, nu_t, R_t, rn_t
    raise BvpDivergence(f"no convergence in {cfg.max_iter} iterations (residual {rn:.3g})", (h, c))


def _profile(p, cfg, h, c, nu, rn, it):
    x = cfg.x
    dx = x[1] - x[0]
    # one-sided second-order end slopes, checked a posteriori
    slope = lambda f: max(abs(-3 * f[0] + 4 * f[1] - f[2]), abs(3 * f[-1] - 4 * f[-2] + f[-3])) / (2 * dx)
    return EquilibriumProfile(x, h, c, float(rn), it, (slope(h), slope(c)), float(nu))


def _continuation_path(r):
    if r <= 10:
        return list(np.linspace(0.0, r, 6)[1:])
    steps = int(np.ceil((r - 10) / 5.0))
    return list(np.linspace(0.0, 10.0, 6)[1:]) + list(np.linspace(10.0, r, steps + 1)[1:])


def solve_bvp(p, cfg=None, guess=None):
    """Solve for the single-front equilibrium.

    ``guess`` is an optional profile to warm-start from.  Without one the
    solver starts from h = 1, c = tanh(x / sqrt 2) and, if Newton diverges,
    falls back to continuation in r from the decoupled r = 0 solution.
    """
    _check_params(p)
    cfg = cfg or BvpConfig()
    x = cfg.x
    if guess is not None:
        h0 = np.interp(x, guess.x, guess.h)
        c0 = np.interp(x, guess.x, guess.c)
    else:
        h0 = np.ones_like(x)
        c0 = np.tanh(x / np.sqrt(2.0))
    path = list(cfg.continuation) if cfg.continuation else None
    if path is None:
        try:
            return _profile(p, cfg, *_newton(p, cfg, h0, c0))
        except BvpDivergence as exc:
            log.info("direct Newton failed (%s); continuing in r", exc)
        path = _continuation_path(p.r)
        h0 = np.ones_like(x)
        c0 = np.tanh(x / np.sqrt(2.0))
    if not path or path[-1] != p.r:
        path = list(path) + [p.r]
    h, c = h0, c0
    for r in path:
        h, c, nu, rn, it = _newton(p.replace(r=r), cfg, h, c)
    return _profile(p, cfg, h, c, nu, rn, it)


def forces(prof, p):
    """Backreaction force -r h^-1 (h c_x^2)_x and VdW force |A| (h^-3)_x."""
    dx = prof.dx
    cx = np.gradient(prof.c, dx, edge_order=2)
    F_cap = -p.r / prof.h * np.gradient(prof.h * cx * cx, dx, edge_order=2)
    F_vdw = p.A_abs * np.gradient(prof.h**-3.0, dx, edge_order=2)
    return F_cap, F_vdw


class SweepRow(NamedTuple):
    value: float
    h_min: float
    residual: float
    iterations: int
    ok: bool
    message: str = ""


def sweep_dip(p_base, parameter, values, cfg=None):
    """h_min along a sweep of ``parameter`` ("A" for |A|, or "r").

    Points are visited in the given order, each warm-started from the last
    converged profile.  A failed point is flagged and the sweep moves on.
    """
    if parameter not in ("A", "r"):
        raise ValueError("parameter must be 'A' or 'r'")
    cfg = cfg or BvpConfig()
    rows = []
    guess = None
    for v in values:
        v = float(v)
        if v <= 0 and parameter == "A":
            raise ValueError("|A| values must be positive")
        p = p_base.replace(A=-v) if parameter == "A" else p_base.replace(r=v)
        try:
            try:
                prof = solve_bvp(p, cfg, guess)
            except BvpDivergence:
                if guess is None:
                    raise
                prof = solve_bvp(p, cfg)
        except BvpDivergence as exc:
            rows.append(SweepRow(v, float("nan"), float("nan"), 0, False, str(exc)))
            continue
        guess = prof
        rows.append(SweepRow(v, prof.h_min, prof.residual_norm, prof.iterations, True))
    return rows


def is_monotone(values, increasing=True):
    d = np.diff(np.asarray(values, dtype=float))
    return bool(np.all(d > 0) if increasing else np.all(d < 0))
