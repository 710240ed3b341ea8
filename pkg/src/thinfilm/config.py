"""Flat ``section.key = value`` run configuration.

See docs/config.md for the grammar.  Every key has a type and a default, so
a parsed config is always complete; ``RunConfig.to_mapping`` returns the
full typed mapping, which ``RunConfig.from_mapping`` accepts unchanged.
"""
import math
import re
from dataclasses import dataclass, field

from .equilibrium import BvpConfig
from .grid import Grid
from .model import Params
from .timestepper import SCHEMES, SolverConfig

MODES = ("evolve", "bvp", "sweep", "bound", "galerkin", "check-inequalities")


class ConfigError(ValueError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


def _float(text):
    t = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"([-+]?[0-9.]*(?:e[-+]?\d+)?)\*?pi", t)
    if m:
        coef = m.group(1)
        v = (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    else:
        v = float(t)
    if not math.isfinite(v):
        raise ValueError(f"not a finite number: {text.strip()!r}")
    return v


def _int(text):
    return int(text.strip())


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    t = text.strip()
    if not t:
        return ()
    return tuple(_float(v) for v in t.split(","))


def _str(text):
    return text.strip()


def _choice(*options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return t

    return parse


def _optional(parse):
    def inner(text):
        t = text.strip()
        return None if t.lower() in ("", "none") else parse(t)

    return inner


# key -> (parser, default)
SCHEMA = {
    "mode": (_choice(*MODES), "evolve"),
    "seed": (_int, 0),
    "output_dir": (_str, "out"),
    "emit_plots": (_bool, False),
    "params.C": (_float, 1.0 / 3.0),
    "params.Cn": (_float, 1.0),
    "params.r": (_float, 1.0),
    "params.A": (_float, -1.0),
    "params.n_vdw": (_int, 3),
    "grid.length": (_float, 16 * math.pi),
    "grid.n": (_int, 256),
    "init.kind": (_choice("perturbed", "flat", "cosine"), "perturbed"),
    "init.amplitude": (_float, 0.01),
    "init.h0": (_float, 1.0),
    "init.c0": (_float, 0.0),
    "init.mode": (_int, 1),
    "solver.t_end": (_float, 100.0),
    "solver.dt_init": (_float, 1e-3),
    "solver.dt_min": (_float, 1e-9),
    "solver.dt_max": (_float, 0.05),
    "solver.newton_tol": (_float, 1e-10),
    "solver.newton_max_iter": (_int, 20),
    "solver.record_every": (_float, 1.0),
    "solver.scheme": (_choice(*SCHEMES), "semi_implicit"),
    "solver.energy_guard": (_bool, True),
    "solver.energy_slack": (_float, 1e-8),
    "solver.max_change": (_float, 0.05),
    "check.drift_tol": (_float, 1e-8),
    "bvp.half_width": (_float, 20.0),
    "bvp.n_points": (_int, 1201),
    "bvp.newton_tol": (_float, 1e-12),
    "bvp.max_iter": (_int, 50),
    "bvp.order": (_int, 6),
    "bvp.continuation": (_optional(_floats), None),
    "sweep.parameter": (_choice("A", "r"), "r"),
    "sweep.values": (_floats, ()),
    "sweep.start": (_float, 0.1),
    "sweep.stop": (_float, 50.0),
    "sweep.count": (_int, 9),
    "sweep.spacing": (_choice("log", "linear"), "log"),
    "sweep.workers": (_int, 1),
    "bound.F0": (_float, 0.5),
    "bound.F1": (_float, 0.5),
    "bound.C": (_float, 1.0),
    "bound.L": (_float, 1.0),
    "bound.A_start": (_float, 0.1),
    "bound.A_stop": (_float, 10.0),
    "bound.A_count": (_int, 101),
    "galerkin.n_modes": (_int, 33),
    "galerkin.eps": (_float, 1e-6),
    "galerkin.n_quad": (_optional(_int), None),
    "galerkin.rtol": (_float, 1e-9),
    "galerkin.atol": (_float, 1e-9),
    "galerkin.compare": (_bool, True),
    "inequalities.trials": (_int, 1000),
    "inequalities.degree": (_int, 8),
    "inequalities.n": (_int, 128),
    "inequalities.length": (_float, 2 * math.pi),
}


def parse_text(text):
    """Parse config text into a dict of typed values (only keys present)."""
    out = {}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError("unknown key", lineno, key)
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", lineno, key)
        seen[key] = lineno
        try:
            out[key] = SCHEMA[key][0](value)
        except ValueError as exc:
            raise ConfigError(str(exc) or f"bad value {value!r}", lineno, key) from None
    return out


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return str(value)


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        full = {k: d for k, (_, d) in SCHEMA.items()}
        for k, v in self.values.items():
            if k not in SCHEMA:
                raise ConfigError("unknown key", key=k)
            full[k] = v
        self.values = full
        self.validate()

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def from_text(cls, text, overrides=None):
        vals = parse_text(text)
        vals.update(overrides or {})
        return cls(vals)

    @classmethod
    def from_file(cls, path, overrides=None):
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), overrides)

    @classmethod
    def from_mapping(cls, mapping):
        """Inverse of ``to_mapping`` (lists from JSON are turned back into tuples)."""
        vals = {}
        for k, v in mapping.items():
            if k not in SCHEMA:
                raise ConfigError("unknown key", key=k)
            vals[k] = tuple(v) if isinstance(v, list) else v
        return cls(vals)

    def to_mapping(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.values.items()}

    def to_text(self):
        return "".join(f"{k} = {_format(v)}\n" for k, v in self.values.items())

    def with_overrides(self, **kw):
        vals = dict(self.values)
        vals.update({k.replace("__", "."): v for k, v in kw.items()})
        return RunConfig(vals)

    # builders; each one raises ConfigError naming the offending field group

    def _build(self, group, factory):
        try:
            return factory()
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), key=group) from None

    @property
    def mode(self):
        return self.values["mode"]

    def params(self):
        v = self.values
        return self._build("params", lambda: Params(C=v["params.C"], Cn=v["params.Cn"], r=v["params.r"],
                                                    A=v["params.A"], n_vdw=v["params.n_vdw"]))

    def grid(self):
        v = self.values
        return self._build("grid", lambda: Grid(v["grid.length"], v["grid.n"]))

    def solver(self):
        v = self.values
        kw = {k.split(".", 1)[1]: v[k] for k in v if k.startswith("solver.")}
        return self._build("solver", lambda: SolverConfig(**kw))

    def bvp(self):
        v = self.values
        kw = {k.split(".", 1)[1]: v[k] for k in v if k.startswith("bvp.")}
        return self._build("bvp", lambda: BvpConfig(**kw))

    def sweep_values(self):
        v = self.values
        if v["sweep.values"]:
            vals = list(v["sweep.values"])
        else:
            n, a, b = v["sweep.count"], v["sweep.start"], v["sweep.stop"]
            if n < 1:
                raise ConfigError("must be at least 1", key="sweep.count")
            if v["sweep.spacing"] == "log":
                if not (a > 0 and b > 0):
                    raise ConfigError("log spacing needs positive start and stop", key="sweep.start")
                vals = list(math.exp(math.log(a) + i * (math.log(b) - math.log(a)) / max(n - 1, 1))
                            for i in range(n))
                vals[0] = a
                if n > 1:
                    vals[-1] = b
            else:
                vals = [a + i * (b - a) / max(n - 1, 1) for i in range(n)]
        return vals

    def validate(self):
        v = self.values
        if v["seed"] < 0 or v["seed"] >= 2**64:
            raise ConfigError("must be a 64-bit unsigned integer", key="seed")
        if v["init.amplitude"] < 0:
            raise ConfigError("must be nonnegative", key="init.amplitude")
        if v["sweep.workers"] < 1:
            raise ConfigError("must be at least 1", key="sweep.workers")
        if v["inequalities.trials"] < 1:
            raise ConfigError("must be at least 1", key="inequalities.trials")
        if v["bound.A_count"] < 2:
            raise ConfigError("must be at least 2", key="bound.A_count")
        if not 0 < v["bound.A_start"] < v["bound.A_stop"]:
            raise ConfigError("need 0 < A_start < A_stop", key="bound.A_start")
