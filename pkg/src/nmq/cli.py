"""Command-line frontend: ``nmq <task> --config <file> [--out <path>] [--jobs N]``.

The config is one JSON document::

    {
      "model": {"preset": "trigonometric", "gamma": 1.0, "phi": 1.0},
      "grid": {"t_max": 10.0, "steps": 1001},
      "output": {"path": "rates.csv", "format": "csv"},
      "seed": 0
    }

Models are a named preset, an explicit constant rate table
(``{"rates": {"3": 0.5}, "n": 1}``), a hidden model
(``{"hidden": {"n", "states", "transitions", "q0"}}``) or memory kernels
(``{"kernels": {"n": 1, "k": {"3": {"type": "exponential", ...}}}}``).
See README.md for every preset and task option.

Exit codes: 0 ok, 1 config error, 2 domain error, 3 CP violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import channel, cpf, incoherent, kernels, models
from .errors import (
    ConditioningError,
    ConfigError,
    DomainError,
    LogDomainError,
    NMQError,
    PoleError,
)
from .pauli import PauliIndex, pauli

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_CP = 0, 1, 2, 3
TASKS = ("rates", "probs", "evolve", "cp-check", "cpf", "figure1", "figure2", "validate")
PRESETS = ("hyperbolic", "trigonometric", "markov", "classical-me", "stochastic", "mixture",
           "exponential-mixture", "bipartite", "tripartite", "translational")
POLE = "POLE"
COLUMN_LIMIT = 3   # emit every Pauli column up to this many qubits


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


# -- model resolution -------------------------------------------------------

@dataclass
class ModelHandle:
    n: int
    name: str
    rates: Optional[Callable] = None         # t -> (4**N,)
    probs: Optional[Callable] = None         # t -> (4**N,) or grid -> (T, 4**N)
    profile: Optional[channel.RateProfile] = None
    hidden: Optional[incoherent.HiddenModel] = None
    poles: Callable = lambda t_max: np.array([])
    kernel: Optional[kernels.KernelVector] = None
    notes: list = field(default_factory=list)


def _label_vector(n, table, what="rates") -> np.ndarray:
    vec = np.zeros(4 ** n)
    if not isinstance(table, dict):
        raise ConfigError(f"{what} must be an object mapping Pauli labels to numbers")
    for key, v in table.items():
        try:
            vec[pauli(str(key), n).flat] = float(v)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad {what} entry {key!r}: {exc}") from None
    return vec


def _num(spec, key, default=None, positive=False):
    if key not in spec:
        if default is None:
            raise ConfigError(f"model needs parameter {key!r}")
        return default
    try:
        v = float(spec[key])
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {key!r} must be a number") from None
    if positive and not v > 0:
        raise ConfigError(f"parameter {key!r} must be positive")
    return v


def _pair_spec(spec) -> models.EternalPairSpec:
    n = int(spec.get("n", 1))
    gamma = _num(spec, "gamma", positive=True)
    phi = _num(spec, "phi", gamma, positive=True)
    a = spec.get("a", "1" + "0" * (n - 1))
    b = spec.get("b", "2" + "0" * (n - 1))
    try:
        return models.EternalPairSpec(n, pauli(str(a), n), pauli(str(b), n), gamma, phi)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _from_hidden(model: incoherent.HiddenModel, name: str) -> ModelHandle:
    pp = incoherent.probability_profile(model)
    return ModelHandle(model.n, name, rates=lambda t: channel.rates_from_probabilities(pp, t),
                       probs=pp, hidden=model)


def _from_profile(profile: channel.RateProfile, name: str, hidden=None) -> ModelHandle:
    return ModelHandle(profile.n, name, rates=profile.rates,
                       probs=lambda t: channel.probabilities_from_rates(profile, t),
                       profile=profile, hidden=hidden)


def _parse_hidden(spec) -> incoherent.HiddenModel:
    try:
        n = int(spec["n"])
        trans = [incoherent.Transition(str(tr["from"]), str(tr["to"]), float(tr["rate"]),
                                       pauli(str(tr["string"]), n))
                 for tr in spec["transitions"]]
        return incoherent.HiddenModel(n, tuple(spec["states"]), tuple(trans),
                                      tuple(spec["q0"]), name=spec.get("name", "hidden"))
    except KeyError as exc:
        raise ConfigError(f"hidden model is missing {exc}") from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"hidden model: {exc}") from None


def resolve_model(spec: dict) -> ModelHandle:
    if not isinstance(spec, dict):
        raise ConfigError("'model' must be an object")
    if "hidden" in spec:
        return _from_hidden(_parse_hidden(spec["hidden"]), "hidden")
    if "kernels" in spec:
        ks = spec["kernels"]
        try:
            n = int(ks["n"])
            kv = kernels.KernelVector(n, {str(k): kernels.kernel_from_spec(v)
                                          for k, v in ks["k"].items()})
        except KeyError as exc:
            raise ConfigError(f"kernel model is missing {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return ModelHandle(n, "kernels", kernel=kv)
    if "rates" in spec and "preset" not in spec:
        n = int(spec.get("n", 1))
        g = _label_vector(n, spec["rates"])
        return _from_profile(channel.RateProfile.constant(channel.complete_rates(g)), "rates",
                             hidden=models.markov_model(g) if np.all(g[1:] >= 0) else None)
    preset = spec.get("preset")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; known: {', '.join(PRESETS)}")
    try:
        return _resolve_preset(preset, spec)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, NMQError):
            raise
        raise ConfigError(f"preset {preset!r}: {exc}") from None


def _resolve_preset(preset, spec) -> ModelHandle:
    if preset in ("hyperbolic", "trigonometric"):
        ps = _pair_spec(spec)
        if preset == "hyperbolic":
            hidden = models.hyperbolic_model(ps)
            if ps.phi == ps.gamma:
                h = _from_profile(models.hyperbolic_profile(ps), preset, hidden)
                h.probs = lambda t: models.hyperbolic_probabilities(ps, t)
                return h
            return _from_hidden(hidden, preset)
        hidden = models.trigonometric_model(ps)
        pp = (models.trig_probability_profile(ps) if ps.phi == ps.gamma
              else incoherent.probability_profile(hidden))
        return ModelHandle(ps.n, preset, rates=lambda t: models.trig_rates(ps, t), probs=pp,
                           hidden=hidden, poles=lambda t_max: models.trig_pole_times(ps, t_max))
    if preset == "markov":
        n = int(spec.get("n", 1))
        g = _label_vector(n, spec.get("rates", {}))
        return _from_profile(channel.RateProfile.constant(channel.complete_rates(g)), preset,
                             models.markov_model(g) if np.all(g[1:] >= 0) else None)
    if preset == "classical-me":
        n = int(spec.get("n", 1))
        x = _label_vector(n, spec.get("weights", {}), "weights")
        phi_out = _num(spec, "phi_out", positive=True)
        phi_back = _num(spec, "phi_back", positive=True)
        Phi, p_inf = models.hub_stationary(n, phi_out, phi_back, x)
        hidden = (incoherent.classical_me_embedding(incoherent.hub_rates(n, phi_out, phi_back, x), n)
                  if n <= 3 else None)
        return ModelHandle(n, preset, rates=lambda t: models.classical_me_rates(Phi, p_inf, t),
                           probs=lambda t: models.classical_me_probabilities(Phi, p_inf, t),
                           hidden=hidden)
    if preset == "stochastic":
        n = int(spec.get("n", 1))
        noise = models.NoiseSpec(n, spec.get("kind", "white"),
                                 tuple(_label_vector(n, spec.get("weights", {}), "weights")),
                                 Phi=float(spec.get("Phi", 0.0)), A=float(spec.get("A", 0.0)),
                                 eta=float(spec.get("eta", 0.0)))
        pp = models.stochastic_hamiltonian_profile(noise)
        return ModelHandle(n, preset, rates=lambda t: channel.rates_from_probabilities(pp, t),
                           probs=pp)
    if preset == "mixture":
        n = int(spec.get("n", 1))
        comps = tuple((float(c["weight"]), _label_vector(n, c["rates"]))
                      for c in spec.get("components", []))
        if not comps:
            raise ConfigError("mixture needs at least one component")
        mix = models.MixtureSpec(comps)
        return ModelHandle(n, preset, rates=lambda t: models.mixture_rates(mix, t),
                           probs=lambda t: models.mixture_probabilities(mix, t),
                           hidden=models.mixture_model(mix))
    if preset == "exponential-mixture":
        n = int(spec.get("n", 1))
        em = models.ExponentialMixtureSpec(n, {str(k): float(v) for k, v in spec.get("taus", {}).items()})
        em.tau_vector()
        return ModelHandle(n, preset, rates=lambda t: models.exponential_mixture_rates(em, t),
                           probs=lambda t: models.exponential_mixture_probabilities(em, t))
    if preset in ("bipartite", "tripartite"):
        gamma = _num(spec, "gamma", positive=True)
        return _from_profile(models.mixture_preset_profile(preset, gamma), preset,
                             models.mixture_model(models.mixture_preset_components(preset, gamma)))
    if preset == "translational":
        n = int(spec.get("n", 2))
        prof = models.translational_composite(n, spec.get("gammas", 1.0), spec.get("f", "-tanh"),
                                              bool(spec.get("periodic", True)),
                                              float(spec.get("f_const", 1.0)))
        return _from_profile(prof, preset)
    raise ConfigError(f"unknown preset {preset!r}")


# -- validation -------------------------------------------------------------

def validate(config) -> list:
    """Diagnostics ``[{"level": "error"|"warning", "message": str}]``; never raises."""
    out = []

    def err(msg):
        out.append({"level": "error", "message": msg})

    def warn(msg):
        out.append({"level": "warning", "message": msg})

    if not isinstance(config, dict):
        err("config must be a JSON object")
        return out
    task = config.get("task")
    if task is not None and task not in TASKS:
        err(f"unknown task {task!r}")
    grid = config.get("grid", {})
    if not isinstance(grid, dict):
        err("'grid' must be an object")
    else:
        steps = grid.get("steps", 2)
        t_max = grid.get("t_max", 1.0)
        if not isinstance(steps, int) or isinstance(steps, bool) or steps < 2:
            err(f"grid.steps must be an integer >= 2, got {steps!r}")
        if not isinstance(t_max, (int, float)) or isinstance(t_max, bool) or not t_max > 0:
            err(f"grid.t_max must be > 0, got {t_max!r}")
    output = config.get("output", {})
    if isinstance(output, dict) and output.get("format", "csv") not in ("csv", "json"):
        err(f"output.format must be csv or json, got {output.get('format')!r}")
    model = config.get("model")
    if model is None:
        if task not in ("figure1", "figure2"):
            err("missing 'model'")
        return out
    try:
        resolve_model(model)
    except NMQError as exc:
        err(str(exc))
        return out
    except Exception as exc:  # schema problems surface as diagnostics
        err(f"model: {exc}")
        return out
    if isinstance(model, dict) and model.get("preset") == "trigonometric":
        gamma = float(model.get("gamma", 1.0))
        phi = float(model.get("phi", gamma))
        if models.classify_divergence(phi / gamma) == "divergent":
            warn(f"rates divergent in interval: phi/gamma = {phi / gamma:g} lies inside "
                 f"(3 - sqrt 8, 3 + sqrt 8); rate output will contain {POLE} rows")
    return out


# -- output -----------------------------------------------------------------

def write_table(header, rows, path: Optional[str], fmt_name: str = "csv"):
    if fmt_name == "json":
        body = json.dumps({"columns": list(header),
                           "rows": [[r if isinstance(r, str) else float(r) for r in row]
                                    for row in rows]}, indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
        body = buf.getvalue()
    _emit(body, path)


def write_json(obj, path: Optional[str]):
    _emit(json.dumps(obj, indent=1, sort_keys=True) + "\n", path)


def _emit(body: str, path: Optional[str]):
    if path is None or path == "-":
        sys.stdout.write(body)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(body)


# -- tasks ------------------------------------------------------------------

def _grid(config) -> np.ndarray:
    g = config.get("grid", {})
    return np.linspace(0.0, float(g.get("t_max", 10.0)), int(g.get("steps", 1001)))


def _columns(n, prefix, rows):
    if n <= COLUMN_LIMIT:
        idx = list(range(4 ** n))
    else:
        live = np.zeros(4 ** n, dtype=bool)
        for r in rows:
            if not isinstance(r, str):
                live |= np.asarray(r) != 0
        live[0] = True
        idx = list(np.flatnonzero(live))
    return idx, [f"{prefix}_{PauliIndex.from_flat(int(i), n).label}" for i in idx]


def _pole_rows(handle, grid) -> set:
    """Grid rows nearest each analytic pole."""
    rows = set()
    for tp in handle.poles(float(grid[-1])):
        rows.add(int(np.argmin(np.abs(grid - tp))))
    return rows


def _rate_rows(handle, grid, pool, strict=False):
    if handle.rates is None:
        raise ConfigError(f"model {handle.name!r} does not provide canonical rates")
    flagged = _pole_rows(handle, grid)

    def one(i):
        if i in flagged:
            return POLE
        try:
            return np.asarray(handle.rates(float(grid[i])), dtype=float)
        except (PoleError, LogDomainError):
            if strict:
                raise
            return POLE

    return list(pool.map(one, range(grid.size)))


def _prob_grid(handle, grid) -> np.ndarray:
    if handle.kernel is not None:
        res = kernels.probabilities_from_kernels(handle.kernel, grid)
        return res.p
    return np.asarray(handle.probs(grid), dtype=float).reshape(grid.size, 4 ** handle.n)


def _rho0(config, n):
    spec = config.get("rho0", "mixed")
    d = 2 ** n
    if isinstance(spec, dict):
        try:
            rho = np.asarray(spec["re"], dtype=float) + 1j * np.asarray(spec.get("im", np.zeros((d, d))))
        except KeyError:
            raise ConfigError("explicit rho0 needs 're' (and optionally 'im')") from None
        if rho.shape != (d, d):
            raise ConfigError(f"rho0 must be {d}x{d}")
        return rho
    if spec == "mixed":
        return np.eye(d, dtype=complex) / d
    if spec == "zero":
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1
        return rho
    if spec == "plus":
        return np.full((d, d), 1.0 / d, dtype=complex)
    if spec == "random":
        rng = np.random.default_rng(int(config.get("seed", 0)))
        A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = A @ A.conj().T
        return rho / np.trace(rho)
    raise ConfigError(f"unknown rho0 {spec!r} (mixed, zero, plus, random, or explicit)")


def task_rates(config, handle, out, pool):
    grid = _grid(config)
    rows = _rate_rows(handle, grid, pool, strict=bool(config.get("strict", False)))
    idx, names = _columns(handle.n, "g", rows)
    table = [[t] + ([POLE] * len(idx) if isinstance(r, str) else list(r[idx]))
             for t, r in zip(grid, rows)]
    write_table(["t"] + names, table, out, _format(config))
    return EXIT_OK


def task_probs(config, handle, out, pool):
    grid = _grid(config)
    P = _prob_grid(handle, grid)
    idx, names = _columns(handle.n, "p", list(P))
    write_table(["t"] + names, [[t] + list(p[idx]) for t, p in zip(grid, P)], out, _format(config))
    return EXIT_OK


def task_evolve(config, handle, out, pool):
    grid = _grid(config)
    rho0 = _rho0(config, handle.n)
    P = _prob_grid(handle, grid)
    states = list(pool.map(lambda p: channel.apply_kraus(p, rho0), P))
    d = rho0.shape[0]
    header = ["t"] + [f"{part}_{i}_{j}" for i in range(d) for j in range(d) for part in ("re", "im")]
    rows = []
    for t, rho in zip(grid, states):
        row = [t]
        for i in range(d):
            for j in range(d):
                row += [rho[i, j].real, rho[i, j].imag]
        rows.append(row)
    write_table(header, rows, out, _format(config))
    return EXIT_OK


def task_cp_check(config, handle, out, pool):
    grid = _grid(config)
    if handle.profile is not None:
        cert = channel.certify_cp(handle.profile, grid)
    else:
        cert = channel.certify_probabilities(_prob_grid(handle, grid), grid, handle.n)
    write_json(cert.to_dict(), out)
    return EXIT_OK if cert.is_cp else EXIT_CP


def _cpf_settings(config, handle):
    c = config.get("cpf", {})
    default = "1" + "0" * (handle.n - 1)
    labels = [str(c.get(k, c.get("observable", default))) for k in ("x", "y", "z")]
    try:
        obs = [cpf.Observable.from_pauli(lab, handle.n) for lab in labels]
    except (ValueError, NMQError) as exc:
        raise ConfigError(f"cpf observables: {exc}") from None
    y_value = float(c.get("y_value", 1.0))
    if y_value not in (1.0, -1.0):
        raise ConfigError("cpf.y_value must be +1 or -1")
    return obs, y_value


def _cpf_cell(hidden, fam, obs, rho0, y_value, t, tau):
    triple = cpf.MeasurementTriple(obs[0], obs[1], obs[2], float(t), float(tau), rho0, y_value)
    return cpf.cpf_pauli(hidden, triple, fam)


def task_cpf(config, handle, out, pool):
    if handle.hidden is None:
        raise ConfigError(f"model {handle.name!r} has no hidden-state representation for cpf")
    grid = _grid(config)
    c = config.get("cpf", {})
    tg = c.get("tau_grid")
    taus = (np.linspace(0.0, float(tg["t_max"]), int(tg["steps"])) if tg else grid)
    obs, y_value = _cpf_settings(config, handle)
    rho0 = _rho0(config, handle.n)
    fam = incoherent.propagators(handle.hidden, np.union1d(grid, taus))
    cells = [(t, tau) for t in grid for tau in taus]
    results = list(pool.map(lambda ab: _cpf_cell(handle.hidden, fam, obs, rho0, y_value, *ab), cells))
    rows = [[t, tau, r.value, r.P_y] for (t, tau), r in zip(cells, results)]
    write_table(["t", "tau", "cpf", "P_y"], rows, out, _format(config))
    return EXIT_OK


def task_figure1(config, handle, out, pool):
    f1 = config.get("figure1", {})
    gamma = float(f1.get("gamma", 1.0))
    ratios = [float(r) for r in f1.get("ratios", (0.1, 0.5, 1.0, 5.0))]
    grid = _grid(config) if "grid" in config else np.linspace(0.0, 10.0 / gamma, 1001)
    specs = [models.EternalPairSpec.default(gamma, r * gamma) for r in ratios]

    def panel(ps):
        h = ModelHandle(1, "trigonometric", rates=lambda t: models.trig_rates(ps, t),
                        poles=lambda t_max: models.trig_pole_times(ps, t_max))
        return _rate_rows(h, grid, _Serial())

    panels = list(pool.map(panel, specs))
    a, c = specs[0].a, specs[0].c
    rows = []
    for r, ps_rows in zip(ratios, panels):
        for t, row in zip(grid, ps_rows):
            if isinstance(row, str):
                rows.append([r, t, POLE, POLE])
            else:
                rows.append([r, t, row[a.flat], row[c.flat]])
    write_table(["ratio", "t", f"g_{a.label}", f"g_{c.label}"], rows, out, _format(config))
    return EXIT_OK


def task_figure2(config, handle, out, pool):
    f2 = config.get("figure2", {})
    gamma = float(f2.get("gamma", 1.0))
    ratios = [float(r) for r in f2.get("ratios", (0.1, 1.0))]
    shapes = [float(s) for s in f2.get("tau_over_t", (0.5, 1.0, 2.0))]
    grid = _grid(config) if "grid" in config else np.linspace(0.0, 10.0 / gamma, 201)
    rho0 = np.eye(2, dtype=complex) / 2
    x = cpf.Observable.from_pauli("1")

    def panel(args):
        r, s = args
        ps = models.EternalPairSpec.default(gamma, r * gamma)
        hidden = models.trigonometric_model(ps)
        fam = incoherent.propagators(hidden, np.union1d(grid, s * grid))
        out_rows = []
        for t in grid:
            res = cpf.cpf_pauli(hidden, cpf.MeasurementTriple(x, x, x, t, s * t, rho0), fam)
            closed = float(cpf.closed_form_trig("ab", gamma, r * gamma, t, s * t))
            out_rows.append([r, s, t, s * t, res.value, closed])
        return out_rows

    blocks = list(pool.map(panel, [(r, s) for r in ratios for s in shapes]))
    rows = [row for b in blocks for row in b]
    write_table(["ratio", "tau_over_t", "t", "tau", "cpf", "cpf_closed_form"], rows, out,
                _format(config))
    return EXIT_OK


class _Serial:
    def map(self, fn, it):
        return map(fn, it)


TASK_FUNCS = {
    "rates": task_rates,
    "probs": task_probs,
    "evolve": task_evolve,
    "cp-check": task_cp_check,
    "cpf": task_cpf,
    "figure1": task_figure1,
    "figure2": task_figure2,
}


def _format(config) -> str:
    return config.get("output", {}).get("format", "csv") if isinstance(config.get("output"), dict) else "csv"


def run(config: dict, task: Optional[str] = None, out: Optional[str] = None,
        jobs: Optional[int] = None, stderr=None) -> int:
    """Execute one task; returns the process exit code."""
    stderr = stderr or sys.stderr
    if task is None and isinstance(config, dict):
        task = config.get("task")
    if task not in TASKS:
        print(f"error: unknown task {task!r}", file=stderr)
        return EXIT_CONFIG
    if task == "validate":
        diags = validate(config)
        write_json(diags, out)
        return EXIT_CONFIG if any(d["level"] == "error" for d in diags) else EXIT_OK
    diags = validate(dict(config, task=task))
    for d in diags:
        print(f"{d['level']}: {d['message']}", file=stderr)
    if any(d["level"] == "error" for d in diags):
        return EXIT_CONFIG
    if out is None:
        o = config.get("output", {})
        out = o.get("path") if isinstance(o, dict) else None
    jobs = jobs or os.cpu_count() or 1
    try:
        handle = None if task in ("figure1", "figure2") else resolve_model(config["model"])
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return TASK_FUNCS[task](config, handle, out, pool)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except (DomainError, ConditioningError) as exc:
        print(f"domain error: {exc}", file=stderr)
        return EXIT_DOMAIN


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nmq", description=__doc__.splitlines()[0])
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output path (default: config output.path or stdout)")
    parser.add_argument("--jobs", type=int, default=None, help="worker threads (default: all cores)")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs is not None and args.jobs < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    return run(config, args.task, args.out, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
