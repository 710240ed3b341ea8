"""Regularised mobility functions used by the Galerkin system.

``g`` equals ``s + eps`` for s >= 0 and is continued to s < 0 by a C^3,
strictly positive, rational tail that levels off at eps/2.  ``f = g**3`` and ``G`` is
the positive, decreasing antiderivative pair with ``G'' = 1/(f g)``.
"""
from dataclasses import dataclass

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class RegularizedFamily:
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    # tail: g = (eps/2) (1 + 1/Q(u)), u = -2 s / eps, Q(u) = 2 + 2u^2 - 1/(1 + u)
    # Q(0) = 1, Q'(0) = 1, Q''(0) = 2, Q'''(0) = 6 give a C^3 joint with s + eps.
    # The excess over eps/2 decays like eps / (4 u^2), slowly enough to stay
    # representable far out (an exponential tail underflows to exactly eps/2).

    def _tail(self, s):
        u = -2.0 * s / self.eps
        w = 1.0 / (1.0 + u)
        Q = 2.0 + 2.0 * u * u - w
        Q1 = 4.0 * u + w * w
        Q2 = 4.0 - 2.0 * w**3
        g = 0.5 * self.eps * (1.0 + 1.0 / Q)
        g1 = Q1 / Q**2
        g2 = (Q2 / Q**2 - 2.0 * Q1 * Q1 / Q**3) * (-2.0 / self.eps)
        return g, g1, g2

    def g(self, s):
        s = np.asarray(s, dtype=float)
        neg = np.minimum(s, 0.0)
        return np.where(s >= 0, s + self.eps, self._tail(neg)[0])

    def g_prime(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0, 1.0, self._tail(np.minimum(s, 0.0))[1])

    def g_second(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0, 0.0, self._tail(np.minimum(s, 0.0))[2])

    def f(self, s):
        return self.g(s) ** 3

    def G_second(self, s):
        return 1.0 / self.g(s) ** 4

    def G_prime(self, s):
        """First derivative of G (negative everywhere)."""
        return self._G_pair(s)[1]

    def G(self, s):
        return self._G_pair(s)[0]

    def _G_pair(self, s):
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        val = np.empty_like(s)
        der = np.empty_like(s)
        eps = self.eps
        pos = s >= 0
        val[pos] = 1.0 / (6.0 * (s[pos] + eps) ** 2)
        der[pos] = -1.0 / (3.0 * (s[pos] + eps) ** 3)
        G0 = 1.0 / (6.0 * eps**2)
        dG0 = -1.0 / (3.0 * eps**3)
        for i in np.flatnonzero(~pos):
            si = s[i]
            # G(s) = G(0) + s G'(0) + int_s^0 (t - s) G''(t) dt
            # the integrand changes over a width ~eps next to 0; tell quad where
            pts = [-k * eps for k in (1.0, 10.0, 100.0, 1e4) if -k * eps > si] or None
            i1, e1 = integrate.quad(lambda t: (t - si) * self.G_second(t), si, 0.0,
                                    epsabs=0.0, epsrel=1e-13, limit=400, points=pts)
            i0, e0 = integrate.quad(self.G_second, si, 0.0,
                                    epsabs=0.0, epsrel=1e-13, limit=400, points=pts)
            if e1 > 1e-9 * max(abs(i1), 1.0) or e0 > 1e-9 * max(abs(i0), 1.0):
                raise QuadratureError(f"G_eps quadrature did not converge at s={si}")
            val[i] = G0 + si * dG0 + i1
            der[i] = dG0 - i0
        if scalar:
            return val[0], der[0]
        return val, der
