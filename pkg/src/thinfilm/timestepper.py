"""Time integration of the periodic thin-film system.

Both schemes advance the conserved pair (h, q = c h) in flux-divergence
form, so the discrete volume and mass only drift by rounding.

``semi_implicit``
    First order.  The constant-coefficient fourth-order parts
    (a_h d4 h with a_h = max(h^3)/(3C), and a_q d4 q with a_q >= Cn^2)
    are implicit in Fourier space, everything else explicit.
``fully_implicit``
    Variable-step BDF2 solved by Newton-Krylov (GMRES with the
    fourth-order Fourier operator as preconditioner).
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .model import NonPositiveHeightError, State, energy, rhs

log = logging.getLogger(__name__)

SCHEMES = ("semi_implicit", "fully_implicit")


class StepRejected(RuntimeError):
    pass


@dataclass
class SolverConfig:
    t_end: float
    dt_init: float = 1e-3
    dt_min: float = 1e-9
    dt_max: float = 0.05
    newton_tol: float = 1e-10
    newton_max_iter: int = 20
    record_every: float = 1.0
    scheme: str = "semi_implicit"
    energy_guard: bool = True
    energy_slack: float = 1e-8
    max_change: float = 0.05
    growth: float = 1.2

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if not self.record_every > 0:
            raise ValueError("record_every must be positive")


@dataclass
class TrajectoryRecord:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    h_min: list = field(default_factory=list)
    volume: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    accepted: int = 0
    rejected: int = 0
    h_min_overall: float = math.inf
    status: str = "running"
    message: str = ""
    extras: dict = field(default_factory=dict)

    def add(self, t, s, e):
        self.times.append(float(t))
        self.states.append(s)
        self.energies.append(e)
        self.h_min.append(s.h_min)
        self.volume.append(s.volume)
        self.mass.append(s.mass)

    @property
    def final(self):
        return self.states[-1]

    @property
    def free_energy(self):
        return np.array([e.F for e in self.energies])

    @property
    def dissipation(self):
        return np.array([e.dissipation for e in self.energies])

    def drift(self):
        """Largest relative change of volume and mass over the run."""
        v = np.asarray(self.volume)
        m = np.asarray(self.mass)
        dv = np.max(np.abs(v - v[0])) / abs(v[0])
        dm = np.max(np.abs(m - m[0])) / max(abs(m[0]), abs(v[0]))
        return float(dv), float(dm)


def _pack(h, q):
    return np.concatenate([h, q])


def _state_from(grid, u):
    n = grid.n
    h = u[:n]
    if not np.all(np.isfinite(u)):
        raise StepRejected("non-finite values")
    if np.min(h) <= 0:
        raise StepRejected(f"height became nonpositive (min h = {np.min(h):.3g})")
    return State(grid, h, u[n:] / h)


def _f(grid, p, u):
    s = _state_from(grid, u)
    t = rhs(s, p)
    return _pack(t.dh_dt, t.dch_dt)


def _stiff_coefficients(s, p):
    a_h = np.max(s.h) ** 3 / (3.0 * p.C)
    a_q = p.Cn**2 * np.max(s.h) / np.min(s.h)
    return a_h, a_q


def _semi_implicit(s, p, dt):
    g = s.grid
    t = rhs(s, p)
    a_h, a_q = _stiff_coefficients(s, p)
    k4 = g.k**4
    out = []
    for u, du, a in ((s.h, t.dh_dt, a_h), (s.c * s.h, t.dch_dt, a_q)):
        incr = np.fft.rfft(du) * dt / (1.0 + dt * a * k4)
        incr[0] = 0.0
        out.append(u + np.fft.irfft(incr, n=g.n))
    return _state_from(g, _pack(*out)), 1


def _bdf2(s, p, dt, cfg, previous):
    g = s.grid
    n = g.n
    u_n = _pack(s.h, s.c * s.h)
    if previous is None:
        a0, hist = 1.0, -u_n
        guess = u_n + dt * _f(g, p, u_n)
    else:
        s_prev, dt_prev = previous
        w = dt / dt_prev
        u_p = _pack(s_prev.h, s_prev.c * s_prev.h)
        a0 = (1 + 2 * w) / (1 + w)
        hist = -(1 + w) * u_n + w * w / (1 + w) * u_p
        guess = u_n + w * (u_n - u_p)
        if np.min(guess[:n]) <= 0:
            guess = u_n.copy()

    a_h, a_q = _stiff_coefficients(s, p)
    k4 = g.k**4
    prec_h = 1.0 / (a0 + dt * a_h * k4)
    prec_q = 1.0 / (a0 + dt * a_q * k4)

    def precondition(v):
        vh = np.fft.irfft(np.fft.rfft(v[:n]) * prec_h, n=n)
        vq = np.fft.irfft(np.fft.rfft(v[n:]) * prec_q, n=n)
        return np.concatenate([vh, vq])

    M = LinearOperator((2 * n, 2 * n), matvec=precondition)

    def residual(u):
        return a0 * u + hist - dt * _f(g, p, u)

    u = guess
    R = residual(u)
    for it in range(1, cfg.newton_max_iter + 1):
        if np.max(np.abs(R)) <= cfg.newton_tol:
            return _state_from(g, u), it - 1
        unorm = np.linalg.norm(u)

        def jv(v, u=u, R=R, unorm=unorm):
            vn = np.linalg.norm(v)
            if vn == 0:
                return np.zeros_like(v)
            eps = 1e-7 * (1.0 + unorm) / vn
            try:
                return (residual(u + eps * v) - R) / eps
            except StepRejected:
                eps *= 1e-3
                return (residual(u + eps * v) - R) / eps

        J = LinearOperator((2 * n, 2 * n), matvec=jv)
        delta, info = gmres(J, -R, M=M, rtol=1e-6, atol=0.0, restart=40, maxiter=10)
        # the operator preserves means exactly; pin them so mass is not left to GMRES
        delta[:n] += -R[:n].mean() / a0 - delta[:n].mean()
        delta[n:] += -R[n:].mean() / a0 - delta[n:].mean()
        lam = 1.0
        for _ in range(8):
            trial = u + lam * delta
            try:
                R_trial = residual(trial)
            except StepRejected:
                lam *= 0.5
                continue
            if np.max(np.abs(R_trial)) < np.max(np.abs(R)) or lam < 0.1:
                break
            lam *= 0.5
        else:
            raise StepRejected("Newton line search failed")
        u, R = trial, R_trial
    if np.max(np.abs(R)) <= cfg.newton_tol:
        return _state_from(g, u), cfg.newton_max_iter
    raise StepRejected(f"Newton did not converge (residual {np.max(np.abs(R)):.3g})")


def step(s, p, dt, cfg, previous=None):
    """Advance one step of size ``dt``.

    ``previous`` is the pair (state, dt) of the step before, used by BDF2;
    without it the implicit scheme falls back to backward Euler.
    Raises ``StepRejected`` on Newton failure or loss of positivity.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if cfg.scheme == "semi_implicit":
        new, _ = _semi_implicit(s, p, dt)
    else:
        new, _ = _bdf2(s, p, dt, cfg, previous)
    return new


def _step_with_info(s, p, dt, cfg, previous):
    if cfg.scheme == "semi_implicit":
        return _semi_implicit(s, p, dt)
    return _bdf2(s, p, dt, cfg, previous)


def evolve(s0, p, cfg, callback=None):
    """Integrate from ``s0`` to ``cfg.t_end`` with adaptive steps.

    Steps are rejected (and dt halved) on solver failure, loss of positivity,
    per-step changes above ``cfg.max_change``, or, for certified energies,
    an increase of F beyond ``cfg.energy_slack``.  The record is returned
    with ``status == "aborted"`` if dt falls below ``cfg.dt_min``.
    """
    rec = TrajectoryRecord()
    s = s0
    e = energy(s, p)
    guard = cfg.energy_guard and e.certified
    rec.add(0.0, s, e)
    rec.h_min_overall = s.h_min
    t = 0.0
    dt = cfg.dt_init
    previous = None
    n_rec = 1
    next_record = min(cfg.record_every, cfg.t_end)
    while t < cfg.t_end * (1 - 1e-14):
        h_step = min(dt, next_record - t)
        try:
            new, iters = _step_with_info(s, p, h_step, cfg, previous)
            change = max(np.max(np.abs(new.h - s.h)), np.max(np.abs(new.c - s.c)))
            if change > cfg.max_change:
                raise StepRejected(f"change {change:.3g} above max_change")
            e_new = energy(new, p)
            if guard and e_new.F > e.F + cfg.energy_slack:
                raise StepRejected(f"energy increased by {e_new.F - e.F:.3g}")
        except (StepRejected, NonPositiveHeightError) as exc:
            rec.rejected += 1
            dt = h_step / 2
            if dt < cfg.dt_min:
                rec.status = "aborted"
                rec.message = f"dt underflow at t={t:.6g}: {exc}"
                log.warning(rec.message)
                return rec
            continue
        rec.accepted += 1
        previous = (s, h_step)
        s, e = new, e_new
        t += h_step
        rec.h_min_overall = min(rec.h_min_overall, s.h_min)
        if t >= next_record * (1 - 1e-12):
            t = next_record
            rec.add(t, s, e)
            n_rec += 1
            next_record = min((n_rec) * cfg.record_every, cfg.t_end)
            if callback is not None:
                callback(t, s, e)
        easy = change <= 0.5 * cfg.max_change and iters <= 4
        if easy and h_step >= dt * (1 - 1e-12):
            dt = min(dt * cfg.growth, cfg.dt_max)
    rec.status = "completed"
    return rec


def perturbed_uniform_state(grid, amplitude=0.01, seed=0, h=1.0, c=0.0):
    """Flat film with a zero-mean uniform random perturbation of c in [-a, a]."""
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-amplitude, amplitude, grid.n)
    noise -= noise.mean()
    return State(grid, grid.full(h), c + noise)


@dataclass(frozen=True)
class DecayCertificate:
    times: np.ndarray
    dF_dt: np.ndarray
    dissipation: np.ndarray

    @property
    def rel_error(self):
        return np.abs(-self.dF_dt - self.dissipation) / np.abs(self.dissipation)

    @property
    def max_rel_error(self):
        return float(np.max(self.rel_error))


def certify_energy_decay(s, p, dt=1e-4, steps=6, cfg=None):
    """Compare centred differences of F along a short BDF2 run with -(D_film + D_diff)."""
    cfg = cfg or SolverConfig(t_end=steps * dt, dt_init=dt, dt_min=dt, dt_max=dt,
                              scheme="fully_implicit", newton_tol=1e-12)
    states = [s]
    previous = None
    for _ in range(steps):
        new = step(states[-1], p, dt, cfg, previous)
        previous = (states[-1], dt)
        states.append(new)
    es = [energy(x, p) for x in states]
    F = np.array([x.F for x in es])
    D = np.array([x.dissipation for x in es])
    # skip the backward-Euler start-up step
    dF = (F[3:] - F[1:-2]) / (2 * dt)
    return DecayCertificate(dt * np.arange(2, steps), dF, D[2:-1])


def measure_growth_rate(p, grid, mode, field="c", amplitude=1e-6, t_end=0.5, dt=1e-3):
    """Seed one Fourier mode about (1, 0) and fit its exponential rate.

    The log-amplitude of the seeded coefficient is fitted by least squares
    over a fixed-step BDF2 run, leaving out the start-up step.
    """
    k = 2 * np.pi * mode / grid.length
    pert = amplitude * np.cos(k * grid.x)
    if field == "c":
        s = State(grid, grid.full(1.0), pert)
    elif field == "h":
        s = State(grid, 1.0 + pert, grid.zeros())
    else:
        raise ValueError("field must be 'h' or 'c'")
    cfg = SolverConfig(t_end=t_end, dt_init=dt, dt_min=dt, dt_max=dt,
                       scheme="fully_implicit", newton_tol=1e-13)

    def amp(state):
        v = state.c if field == "c" else state.h - 1.0
        return abs(np.fft.rfft(v)[mode])

    nsteps = max(int(round(t_end / dt)), 4)
    logs = [math.log(amp(s))]
    previous = None
    for _ in range(nsteps):
        new = step(s, p, dt, cfg, previous)
        previous = (s, dt)
        s = new
        logs.append(math.log(amp(s)))
    t = dt * np.arange(nsteps + 1)
    slope = np.polyfit(t[1:], np.array(logs[1:]), 1)[0]
    return float(slope)
