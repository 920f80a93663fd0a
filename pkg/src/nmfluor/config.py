"""Run configuration: ``key = value`` text parsed into a validated :class:`RunConfig`.

All rates are in units of the Born-Markov decay rate ``gamma`` and all times
in units of ``1/gamma``.
"""

import os
import re
from dataclasses import dataclass, fields

from .kernels import BandgapKernel, CavityKernel, FlatKernel, beta_for_rate

EXPERIMENTS = ("decay", "driven", "correlation", "spectrum", "validate-cavity",
               "validate-decay", "markov-limit", "convergence")
KERNELS = ("cavity", "bandgap", "flat")
MEMORY_CAP_ENV = "NMFLUOR_MEMORY_CAP"
DEFAULT_MEMORY_CAP = 2 * 1024**3


class ConfigError(ValueError):
    pass


class MemoryCapError(ConfigError):
    pass


def _float_list(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_bytes(text):
    """``"2G"``, ``"512M"``, ``"1048576"`` -> bytes."""
    m = re.fullmatch(r"\s*([0-9.]+(?:[eE][+-]?[0-9]+)?)\s*([kKmMgGtT]?)i?[bB]?\s*", str(text))
    if not m:
        raise ValueError(f"not a byte size: {text!r}")
    scale = {"": 1, "k": 1024, "m": 1024**2, "g": 1024**3, "t": 1024**4}[m.group(2).lower()]
    return int(float(m.group(1)) * scale)


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    kernel: str
    M: int
    dt: float
    gamma: float = 1.0
    detuning: float | None = None
    kappa2: float | None = None
    beta: float | None = None
    lam: float | None = None
    delta: float | None = None
    deltas: tuple = ()
    omega: float = 0.0
    initial: str = "excited"
    n_steps: int | None = None
    t_max: float = 8.0
    record_every: int = 1
    steady_tol: float = 1e-4
    steady_window: float = 1.0
    steady_max_time: float = 200.0
    tau_max: float = 25.0
    omega_max: float | None = None
    resolution: float | None = None
    n_fock: int = 8
    levels: int = 2
    diagonal_on_closures: bool = False
    memory_cap: int | None = None
    output: str = "."

    @property
    def steps(self):
        return self.n_steps if self.n_steps is not None else int(round(self.t_max / self.dt))

    @property
    def detuning_sweep(self):
        if self.kernel != "bandgap":
            return (None,)
        return self.deltas if self.deltas else (self.delta,)

    def kernel_spec(self, delta=None):
        if self.kernel == "cavity":
            return CavityKernel(self.gamma, self.detuning, self.kappa2)
        if self.kernel == "flat":
            return FlatKernel(self.gamma)
        d = self.delta if delta is None else delta
        beta = self.beta if self.beta is not None else beta_for_rate(self.gamma, self.lam)
        return BandgapKernel(beta, self.lam, d)

    def spectral_grid(self):
        """``(omega_max, resolution)``; resolution defaults to ``omega / 40``."""
        wmax = self.omega_max if self.omega_max is not None else max(4 * abs(self.omega), 10.0)
        res = self.resolution
        if res is None:
            res = abs(self.omega) / 40 if self.omega else 0.05
        return wmax, res

    def as_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["deltas"] = list(self.deltas)
        return d


_CONVERTERS = {
    "experiment": str, "kernel": str, "M": int, "dt": float, "gamma": float,
    "detuning": float, "kappa2": float, "beta": float, "lam": float, "delta": float,
    "deltas": _float_list, "omega": float, "initial": str, "n_steps": int, "t_max": float,
    "record_every": int, "steady_tol": float, "steady_window": float,
    "steady_max_time": float, "tau_max": float, "omega_max": float, "resolution": float,
    "n_fock": int, "levels": int, "diagonal_on_closures": _bool, "memory_cap": parse_bytes,
    "output": str,
}
_ALIASES = {"lambda": "lam", "Omega": "omega", "kappa_sq": "kappa2", "steps": "n_steps"}
_REQUIRED = ("experiment", "kernel", "M", "dt")


def memory_estimate(M):
    """Bytes needed to step an ensemble of window ``M``: state, output and per-slot temporaries."""
    return 16 * 4 * 3**M * (M + 4)


def memory_cap(cfg=None, environ=None):
    if cfg is not None and cfg.memory_cap is not None:
        return cfg.memory_cap
    env = (os.environ if environ is None else environ).get(MEMORY_CAP_ENV)
    if env:
        try:
            return parse_bytes(env)
        except ValueError as exc:
            raise ConfigError(f"{MEMORY_CAP_ENV}: {exc}") from None
    return DEFAULT_MEMORY_CAP


def _split_lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        yield lineno, key, value


def _assign(values, key, value, where):
    key = _ALIASES.get(key, key)
    if key == "beta_lambda_delta":
        parts = _float_list(value)
        if len(parts) != 3:
            raise ConfigError(f"{where}: beta_lambda_delta needs three numbers")
        values["beta"], values["lam"], values["delta"] = parts
        return
    if key not in _CONVERTERS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        values[key] = _CONVERTERS[key](value)
    except ValueError:
        raise ConfigError(f"{where}: bad value {value!r} for {key!r}") from None


def parse_config(text, overrides=(), environ=None):
    """Parse configuration text into a validated :class:`RunConfig`.

    Parameters
    ----------
    text : str
        ``key = value`` lines; ``#`` starts a comment.
    overrides : iterable of str
        Extra ``key=value`` items applied after the file.
    environ : mapping, optional
        Environment used to look up the memory cap (``os.environ`` by default).

    Raises
    ------
    ConfigError
        Unknown key, missing required key, bad value or inconsistent settings.
    MemoryCapError
        If the ensemble for ``M`` would exceed the memory cap.
    """
    values = {}
    for lineno, key, value in _split_lines(text):
        _assign(values, key, value, f"line {lineno}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        _assign(values, key, value, "override")
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    cfg = RunConfig(**values)
    validate(cfg, environ)
    return cfg


def validate(cfg, environ=None):
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
    if cfg.kernel not in KERNELS:
        raise ConfigError(f"kernel must be one of {', '.join(KERNELS)}")
    if cfg.M < 1 or cfg.dt <= 0:
        raise ConfigError("need M >= 1 and dt > 0")
    if cfg.initial not in ("excited", "ground"):
        raise ConfigError("initial must be 'excited' or 'ground'")
    if cfg.gamma <= 0:
        raise ConfigError("gamma must be positive")
    if cfg.kernel == "cavity" and (cfg.detuning is None or cfg.kappa2 is None):
        raise ConfigError("cavity kernel needs detuning and kappa2")
    if cfg.kernel == "bandgap":
        if cfg.lam is None:
            raise ConfigError("bandgap kernel needs lam (or beta_lambda_delta)")
        if cfg.delta is None and not cfg.deltas:
            raise ConfigError("bandgap kernel needs delta or deltas")
    if cfg.kernel in ("cavity", "bandgap") and cfg.M < 2:
        raise ConfigError("structured kernels need M >= 2")
    if cfg.experiment == "validate-cavity" and cfg.kernel != "cavity":
        raise ConfigError("validate-cavity needs kernel = cavity")
    if cfg.experiment == "markov-limit" and cfg.kernel == "cavity":
        raise ConfigError("markov-limit compares band-gap or flat kernels with the Markov rate")
    if cfg.experiment in ("decay", "validate-decay", "markov-limit") and cfg.omega != 0:
        raise ConfigError(f"{cfg.experiment} is undriven; omega must be 0")
    if cfg.levels < 2:
        raise ConfigError("levels must be at least 2")
    if cfg.record_every < 1:
        raise ConfigError("record_every must be >= 1")
    try:
        for d in cfg.detuning_sweep:
            cfg.kernel_spec(d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    # the convergence ladder halves dt at fixed window, so its largest M matters
    M_max = cfg.M
    if cfg.experiment == "convergence":
        M_max = (cfg.M - 1) * 2 ** (cfg.levels - 1) + 1
    cap = memory_cap(cfg, environ)
    need = memory_estimate(M_max)
    if need > cap:
        raise MemoryCapError(f"M={M_max} needs about {need / 1024**2:.0f} MiB "
                             f"(3**{M_max} members), above the cap of {cap / 1024**2:.0f} MiB")
    return cfg


def config_text(cfg):
    """Configuration text that parses back to ``cfg`` (used in metadata sidecars)."""
    lines = []
    for key, value in cfg.as_dict().items():
        if value is None or (key == "deltas" and not value):
            continue
        if key == "deltas":
            value = ",".join(repr(float(v)) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
