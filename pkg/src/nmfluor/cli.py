"""Command-line experiment runner.

    nmfluor run CONFIG [--out DIR] [--override key=value]...

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, config_text, memory_estimate, parse_config
from .core import EXCITED, GROUND
from .ensemble import build_evolution_operator, propagate
from .experiments import (cavity_comparison, cavity_convergence, fit_decay_rate,
                          observed_orders, self_convergence, steady_spectrum)
from .kernels import sample_kernel, truncation_level
from .observables import NotConverged
from .oracles.decay import decay_amplitude, single_excitation_sector
from .oracles.discrete_modes import KernelFitError
from .oracles.lindblad import FockCutoffError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def format_csv(header, columns):
    """CSV text with shortest round-trip float formatting (locale independent)."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


class _Output:
    """Collects data files and their metadata sidecars."""

    def __init__(self, cfg, out_dir):
        self.cfg = cfg
        self.dir = Path(out_dir)
        self.files = []

    def suffix(self, delta):
        return "" if delta is None or len(self.cfg.detuning_sweep) == 1 else f"_delta{delta:+g}"

    def write(self, name, header, columns, delta=None, **meta):
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        path.write_text(format_csv(header, columns), encoding="utf-8")
        cfg = self.cfg if delta is None else replace(self.cfg, delta=delta, deltas=())
        spec = cfg.kernel_spec(cfg.detuning_sweep[0])
        side = {
            "file": name,
            "columns": list(header),
            "config": cfg.as_dict(),
            "config_text": config_text(cfg),
            "kernel_truncation": truncation_level(spec, cfg.dt, cfg.M),
            "memory_estimate_bytes": memory_estimate(cfg.M),
            "version": __version__,
        }
        side.update(meta)
        self.files.append((path, side))
        return path

    def finish(self, wall_time):
        for path, side in self.files:
            side["wall_time_s"] = wall_time
            meta_path = path.with_suffix(".meta.json")
            meta_path.write_text(json.dumps(side, indent=2, sort_keys=True, default=_jsonable)
                                 + "\n", encoding="utf-8")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(repr(x))


def _trace_drift(traj):
    return float(np.max(np.abs(traj.traces - 1.0)))


def _operator(cfg, delta):
    spec = cfg.kernel_spec(delta)
    return build_evolution_operator(sample_kernel(spec, cfg.dt, cfg.M), cfg.omega,
                                    diagonal_on_closures=cfg.diagonal_on_closures)


def _rho0(cfg):
    return EXCITED if cfg.initial == "excited" else GROUND


def _run_decay(cfg, out):
    for d in cfg.detuning_sweep:
        tr = propagate(_rho0(cfg), _operator(cfg, d), cfg.steps, cfg.record_every)
        P = tr.populations
        sfx = out.suffix(d)
        drift = _trace_drift(tr)
        out.write(f"decay{sfx}.csv", ("t", "P"), (tr.times, P), d, trace_drift=drift)
        with np.errstate(divide="ignore", invalid="ignore"):
            logP = np.log(P)
        out.write(f"decay{sfx}_log.csv", ("t", "logP"), (tr.times, logP), d, trace_drift=drift)


def _run_driven(cfg, out):
    for d in cfg.detuning_sweep:
        tr = propagate(_rho0(cfg), _operator(cfg, d), cfg.steps, cfg.record_every)
        coh = tr.coherences
        out.write(f"trajectory{out.suffix(d)}.csv", ("t", "P", "Re_coh", "Im_coh", "trace"),
                  (tr.times, tr.populations, coh.real, coh.imag, tr.traces), d,
                  trace_drift=_trace_drift(tr))


def _run_correlation(cfg, out, with_spectrum):
    wmax, res = cfg.spectral_grid()
    for d in cfg.detuning_sweep:
        run = steady_spectrum(cfg.kernel_spec(d), cfg.omega, cfg.dt, cfg.M, cfg.tau_max, wmax,
                              res, _rho0(cfg), cfg.steady_tol, cfg.steady_window,
                              cfg.steady_max_time,
                              diagonal_on_closures=cfg.diagonal_on_closures)
        ss = run.steady
        meta = dict(trace_drift=_trace_drift(ss.trajectory),
                    steady_state_time=float(ss.trajectory.times[ss.index]),
                    steady_state_excited_population=run.P_ss)
        C = run.correlation
        sfx = out.suffix(d)
        out.write(f"correlation{sfx}.csv", ("tau", "ReC", "ImC"),
                  (C.tau, C.values.real, C.values.imag), d, **meta)
        if with_spectrum:
            out.write(f"spectrum{sfx}.csv", ("omega", "S"), (run.spectrum.omega, run.spectrum.S),
                      d, **meta)


def _run_validate_cavity(cfg, out):
    cmp = cavity_comparison(cfg.kernel_spec(), cfg.omega, cfg.dt, cfg.M, cfg.steps * cfg.dt,
                            _rho0(cfg), cfg.n_fock,
                            diagonal_on_closures=cfg.diagonal_on_closures)
    out.write("validate_cavity.csv", ("t", "P_alg", "P_ref"), (cmp.times, cmp.P_alg, cmp.P_ref),
              max_deviation=cmp.max_dev)
    print(f"max |P_alg - P_ref| = {cmp.max_dev:.3e}")


def _run_validate_decay(cfg, out):
    for d in cfg.detuning_sweep:
        samples = sample_kernel(cfg.kernel_spec(d), cfg.dt, cfg.M)
        D = build_evolution_operator(samples, 0.0, diagonal_on_closures=cfg.diagonal_on_closures)
        tr = propagate(EXCITED, D, cfg.steps)
        amp = decay_amplitude(samples, cfg.steps)
        _, P_sector = single_excitation_sector(samples, cfg.steps)
        dev = float(np.max(np.abs(tr.populations - amp.populations)))
        dev_sector = float(np.max(np.abs(tr.populations - P_sector)))
        out.write(f"validate_decay{out.suffix(d)}.csv", ("t", "P_alg", "P_ref"),
                  (tr.times, tr.populations, amp.populations), d,
                  max_deviation=dev, max_deviation_single_excitation=dev_sector,
                  trace_drift=_trace_drift(tr))
        print(f"delta={d}: max |P_alg - |a|^2| = {dev:.3e}, "
              f"single-excitation recursion {dev_sector:.3e}")


def _run_markov_limit(cfg, out):
    deltas, rates, r2s = [], [], []
    t_fit = max(2 * (cfg.M - 1) * cfg.dt, 0.5 / cfg.gamma)
    for d in cfg.detuning_sweep:
        tr = propagate(EXCITED, _operator(cfg, d), cfg.steps)
        rate, r2 = fit_decay_rate(tr.times, tr.populations, t_fit)
        deltas.append(0.0 if d is None else d)
        rates.append(rate)
        r2s.append(r2)
        print(f"delta={d}: fitted rate {rate:.5f} (R^2 = {r2:.6f}), Markov rate {cfg.gamma}")
    out.write("markov_limit.csv", ("delta", "rate", "markov_rate"),
              (deltas, rates, np.full(len(rates), cfg.gamma)), fit_start=t_fit, r_squared=r2s)


def _run_convergence(cfg, out):
    d = cfg.detuning_sweep[0]
    spec = cfg.kernel_spec(d)
    t_max = cfg.steps * cfg.dt
    if cfg.kernel == "cavity":
        rows = cavity_convergence(spec, cfg.omega, cfg.dt, cfg.M, t_max, cfg.levels, _rho0(cfg),
                                  cfg.n_fock)
        reference = "master equation"
        used = rows
    else:
        rows = self_convergence(spec, cfg.omega, cfg.dt, cfg.M, t_max, cfg.levels, _rho0(cfg))
        reference = "finest rung"
        used = rows[:-1]
    h, m, e = (np.array(c) for c in zip(*rows))
    orders = observed_orders([r[0] for r in used], [r[2] for r in used]) if len(used) > 1 else []
    out.write("convergence.csv", ("dt", "M", "max_dev"), (h, m, e), d, reference=reference,
              observed_orders=list(orders))
    for row in rows:
        print(f"dt={row[0]:.6g} M={row[1]} max_dev={row[2]:.3e}")


RUNNERS = {
    "decay": _run_decay,
    "driven": _run_driven,
    "correlation": lambda cfg, out: _run_correlation(cfg, out, False),
    "spectrum": lambda cfg, out: _run_correlation(cfg, out, True),
    "validate-cavity": _run_validate_cavity,
    "validate-decay": _run_validate_decay,
    "markov-limit": _run_markov_limit,
    "convergence": _run_convergence,
}


def run(cfg, out_dir=None):
    """Run one experiment and write its data files; returns the written paths."""
    out = _Output(cfg, out_dir if out_dir is not None else cfg.output)
    start = time.perf_counter()
    RUNNERS[cfg.experiment](cfg, out)
    out.finish(time.perf_counter() - start)
    return [p for p, _ in out.files]


def _parser():
    p = argparse.ArgumentParser(prog="nmfluor", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config", help="key = value configuration file")
    r.add_argument("--out", help="output directory (default: the config's 'output' key)")
    r.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="override a configuration key; may be repeated")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text, args.override)
    except (OSError, UnicodeDecodeError, ConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{cfg.experiment}: M={cfg.M}, {3**cfg.M} members, "
          f"memory estimate {memory_estimate(cfg.M) / 1024**2:.1f} MiB", file=sys.stderr)
    try:
        paths = run(cfg, args.out)
    except NotConverged as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (FockCutoffError, KernelFitError, MemoryError, FloatingPointError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
