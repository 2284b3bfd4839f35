"""Monte Carlo harness for the decoder comparison experiments.

One trial draws a matrix, an S-sparse unit signal and a noise vector whose
l_q radius is ``||A x||_q / snr``, then runs every configured decoder:

* ``rlasso`` once per lambda rule,
* ``bp`` as BPDN with a tiny radius (10 * solver tol),
* ``bpdn`` with the oracle radius ``||e||_q``,
* ``clr`` with the oracle budget ``||x||_1``.

Trial k always uses the derived seed ``seed ^ k``, so a sweep compares
decoders on common random numbers and results do not depend on how
trials are scheduled across workers.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import check_q, lq_norm
from .ensembles import GraphSpec, derive_seed, gaussian_matrix, lrbg_matrix, noise_on_sphere, sparse_signal_on_sphere
from .errors import ConfigError, DomainError, RlassoError
from .solvers import SolverConfig, Status, solve_bpdn, solve_clr, solve_rlasso
from .tuning import expander_constants, gaussian_lambda

DECODERS = ("rlasso", "bp", "bpdn", "clr")
SWEEP_PARAMS = ("lambda", "snr", "S", "M")
CSV_HEADER = ["sweep_value", "decoder", "mean_rel_error", "mean_error_per_noise",
              "status_converged", "status_iterlimit", "wall_ms"]

# stream offsets inside one trial
_SIGNAL_STREAM = 1 << 40
_NOISE_STREAM = 2 << 40


@dataclass(frozen=True)
class Sweep:
    param: str
    values: tuple

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ConfigError(f"unknown sweep parameter {self.param!r}", field="sweep.param")
        if not self.values:
            raise ConfigError("sweep needs at least one value", field="sweep.values")
        object.__setattr__(self, "values", tuple(self.values))


@dataclass(frozen=True)
class ExperimentConfig:
    M: int = 64
    N: int = 256
    S: int = 8
    D: int = 10
    q: float = 2.0
    snr: float = 100.0
    trials: int = 100
    lambda_rules: tuple = ("sqrtM:0.65",)
    decoders: tuple = DECODERS
    seed: int = 0
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(max_iter=20000, tol=1e-6))
    sweep: Sweep | None = None

    def __post_init__(self):
        for name in ("M", "N", "S", "D", "trials"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"must be a positive integer, got {v!r}", field=name)
        if self.S > self.N:
            raise ConfigError(f"S={self.S} exceeds N={self.N}", field="S")
        try:
            q = check_q(self.q)
        except RlassoError as exc:
            raise ConfigError(str(exc), field="q") from None
        if q not in (1.0, 2.0):
            raise ConfigError("experiments support q in {1, 2}", field="q")
        object.__setattr__(self, "q", q)
        snr = _as_float(self.snr, "snr")
        if not snr > 0:
            raise ConfigError("snr must be positive", field="snr")
        object.__setattr__(self, "snr", snr)
        object.__setattr__(self, "lambda_rules", tuple(self.lambda_rules))
        object.__setattr__(self, "decoders", tuple(self.decoders))
        for i, d in enumerate(self.decoders):
            if d not in DECODERS:
                raise ConfigError(f"unknown decoder {d!r}", field=f"decoders[{i}]")
        if q == 1.0 and self.D > self.M:
            raise ConfigError(f"left degree D={self.D} exceeds M={self.M}", field="D")
        for i, rule in enumerate(self.lambda_rules):
            _parse_rule(rule, f"lambda_rules[{i}]")

    def at(self, param: str, value) -> "ExperimentConfig":
        """Copy with one sweep parameter fixed."""
        if param == "lambda":
            return dataclasses.replace(self, lambda_rules=(f"const:{value!r}",), sweep=None)
        if param in ("S", "M"):
            value = int(value)
        return dataclasses.replace(self, **{param: value, "sweep": None})

    def points(self) -> list:
        return [None] if self.sweep is None else list(self.sweep.values)


def _as_float(v, path) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", field=path)
    return float(v)


# -- lambda rules ------------------------------------------------------------

def _parse_rule(rule: str, path: str = "lambda_rule") -> tuple[str, list[float]]:
    if not isinstance(rule, str) or not rule:
        raise ConfigError(f"lambda rule must be a non-empty string, got {rule!r}", field=path)
    name, *args = rule.split(":")
    try:
        nums = [float(a) for a in args]
    except ValueError:
        raise ConfigError(f"non-numeric argument in {rule!r}", field=path) from None
    arity = {"sqrtS": (1,), "sqrtM": (1,), "const": (1,), "gaussian": (0, 2), "expander": (0, 1)}
    if name not in arity:
        raise ConfigError(f"unknown lambda rule {name!r}", field=path)
    if len(nums) not in arity[name]:
        raise ConfigError(f"wrong number of arguments in {rule!r}", field=path)
    return name, nums


def evaluate_lambda_rule(rule: str, cfg: ExperimentConfig) -> float:
    name, args = _parse_rule(rule)
    if name == "sqrtS":
        return args[0] * math.sqrt(cfg.S)
    if name == "sqrtM":
        return args[0] * math.sqrt(cfg.M)
    if name == "const":
        return args[0]
    try:
        if name == "gaussian":
            rho, eta = args if args else (0.9, 0.5)
            return gaussian_lambda(cfg.M, cfg.N, cfg.S, rho, eta).lam
        theta = args[0] if args else 0.1
        return expander_constants(theta, cfg.N, cfg.S).lam
    except DomainError as exc:
        raise ConfigError(f"rule {rule!r} is not applicable: {exc}", field="lambda_rules") from None


def decoder_labels(cfg: ExperimentConfig) -> list[str]:
    out = []
    for d in cfg.decoders:
        if d == "rlasso":
            if cfg.sweep is not None and cfg.sweep.param == "lambda":
                out.append("rlasso")
            else:
                out.extend(f"rlasso[{r}]" for r in cfg.lambda_rules)
        else:
            out.append(d)
    return out


# -- trials ------------------------------------------------------------------

@dataclass
class TrialResult:
    error: float
    error_per_noise: float
    status: str
    wall_ms: float


def draw_instance(cfg: ExperimentConfig, k: int):
    """Matrix, signal, noise for trial ``k``."""
    s = derive_seed(cfg.seed, k)
    if cfg.q == 2.0:
        A = gaussian_matrix(cfg.M, cfg.N, s)
    else:
        A = lrbg_matrix(GraphSpec(cfg.M, cfg.N, cfg.D), s)
    x = sparse_signal_on_sphere(cfg.N, cfg.S, cfg.q, s ^ _SIGNAL_STREAM)
    radius = 0.0 if math.isinf(cfg.snr) else lq_norm(A @ x, cfg.q) / cfg.snr
    e = noise_on_sphere(cfg.M, cfg.q, radius, s ^ _NOISE_STREAM)
    return A, x, e


def run_trial(cfg: ExperimentConfig, k: int,
              matrix_hook: Callable[[ExperimentConfig, int], np.ndarray] | None = None) -> dict[str, TrialResult]:
    """Run every configured decoder on trial ``k``, keyed ``rlasso[<rule>]``, ``bp``, ``bpdn``, ``clr``.

    ``matrix_hook`` replaces the random matrix (testing aid); the signal and
    noise are still drawn from the trial seed.
    """
    A, x, e = draw_instance(cfg, k)
    if matrix_hook is not None:
        A = np.asarray(matrix_hook(cfg, k), dtype=float)
        radius = 0.0 if math.isinf(cfg.snr) else lq_norm(A @ x, cfg.q) / cfg.snr
        e = noise_on_sphere(A.shape[0], cfg.q, radius, derive_seed(cfg.seed, k) ^ _NOISE_STREAM)
    y = A @ x + e
    q, sc = cfg.q, cfg.solver
    x_norm = lq_norm(x, q)
    e_norm = lq_norm(e, q)

    runs: list[tuple[str, Callable]] = []
    for d in cfg.decoders:
        if d == "rlasso":
            for rule in cfg.lambda_rules:
                lam = evaluate_lambda_rule(rule, cfg)
                runs.append((f"rlasso[{rule}]", lambda lam=lam: solve_rlasso(A, y, lam, q, sc)))
        elif d == "bp":
            runs.append(("bp", lambda: solve_bpdn(A, y, 10.0 * sc.tol, q, sc)))
        elif d == "bpdn":
            runs.append(("bpdn", lambda: solve_bpdn(A, y, e_norm, q, sc)))
        else:
            runs.append(("clr", lambda: solve_clr(A, y, lq_norm(x, 1.0), q, sc)))

    out = {}
    for label, fn in runs:
        t0 = time.perf_counter()
        sol = fn()
        ms = 1000.0 * (time.perf_counter() - t0)
        err = lq_norm(sol.x_hat - x, q) / x_norm
        per_noise = err / e_norm if e_norm > 0 else math.nan
        out[label] = TrialResult(err, per_noise, sol.status.value, ms)
    return out


@dataclass
class ExperimentRecord:
    sweep_value: object
    decoder: str
    mean_rel_error: float
    mean_error_per_noise: float
    status_converged: int
    status_iterlimit: int
    wall_ms: float

    @property
    def trials(self) -> int:
        return self.status_converged + self.status_iterlimit


def _trial_task(args):
    cfg, k = args
    return run_trial(cfg, k)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ExperimentRecord]:
    """All sweep points times all trials, reduced in (sweep value, decoder) order."""
    tasks = []
    for value in cfg.points():
        sub = cfg if value is None else cfg.at(cfg.sweep.param, value)
        tasks.extend((sub, k) for k in range(cfg.trials))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        results = [_trial_task(t) for t in tasks]

    lambda_sweep = cfg.sweep is not None and cfg.sweep.param == "lambda"
    records = []
    for i, value in enumerate(cfg.points()):
        chunk = results[i * cfg.trials:(i + 1) * cfg.trials]
        for key in chunk[0]:
            rs = [r[key] for r in chunk]
            records.append(ExperimentRecord(
                sweep_value=value,
                decoder="rlasso" if lambda_sweep and key.startswith("rlasso[") else key,
                mean_rel_error=float(np.mean([r.error for r in rs])),
                mean_error_per_noise=float(np.mean([r.error_per_noise for r in rs])),
                status_converged=sum(r.status == Status.CONVERGED.value for r in rs),
                status_iterlimit=sum(r.status == Status.ITER_LIMIT.value for r in rs),
                wall_ms=float(sum(r.wall_ms for r in rs)),
            ))
    return records


# -- persistence -------------------------------------------------------------

def write_csv(records, path, timing: bool = True) -> None:
    """Write records; ``timing=False`` zeroes wall_ms for byte-reproducible output."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(["" if r.sweep_value is None else repr(r.sweep_value), r.decoder,
                        repr(r.mean_rel_error), repr(r.mean_error_per_noise),
                        r.status_converged, r.status_iterlimit,
                        repr(round(r.wall_ms, 3)) if timing else "0"])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["lambda_rules"] = list(cfg.lambda_rules)
    d["decoders"] = list(cfg.decoders)
    d["snr"] = "inf" if math.isinf(cfg.snr) else cfg.snr
    d["sweep"] = None if cfg.sweep is None else {"param": cfg.sweep.param, "values": list(cfg.sweep.values)}
    return d


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", field="$")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in raw:
        if key not in known:
            raise ConfigError("unknown field", field=key)
    kw = dict(raw)
    if "solver" in kw:
        s = kw["solver"]
        if not isinstance(s, dict):
            raise ConfigError("must be an object", field="solver")
        solver_fields = {f.name for f in dataclasses.fields(SolverConfig)}
        for key in s:
            if key not in solver_fields:
                raise ConfigError("unknown field", field=f"solver.{key}")
        try:
            kw["solver"] = SolverConfig(**s)
        except (RlassoError, TypeError) as exc:
            raise ConfigError(str(exc), field="solver") from None
    if kw.get("sweep") is not None:
        s = kw["sweep"]
        if not isinstance(s, dict) or set(s) != {"param", "values"}:
            raise ConfigError("expected {\"param\": ..., \"values\": [...]}", field="sweep")
        if not isinstance(s["values"], list):
            raise ConfigError("must be a list", field="sweep.values")
        vals = [_as_float(v, f"sweep.values[{i}]") for i, v in enumerate(s["values"])]
        if s["param"] in ("S", "M"):
            if any(v != int(v) for v in vals):
                raise ConfigError("must be integers", field="sweep.values")
            vals = [int(v) for v in vals]
        kw["sweep"] = Sweep(s["param"], tuple(vals))
    for key in ("lambda_rules", "decoders"):
        if key in kw and not isinstance(kw[key], list):
            raise ConfigError("must be a list", field=key)
    if "q" in kw:
        kw["q"] = _as_float(kw["q"], "q")
    if "seed" in kw and (isinstance(kw["seed"], bool) or not isinstance(kw["seed"], int)):
        raise ConfigError("must be an integer", field="seed")
    return ExperimentConfig(**kw)


def read_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", field="$") from None
    return config_from_dict(raw)


def write_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")
