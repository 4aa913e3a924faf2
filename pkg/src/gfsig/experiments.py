"""Reproducible Monte-Carlo detection experiments.

A flat key = value config file fixes the signature family, the system sizes,
the detector and its parameters, a (K, M) grid, the trial count, and the
base seed. Every trial derives its own random streams from
(base_seed, K, M, trial, purpose), so results do not depend on execution
order or worker count, and paired comparisons across families can share
activity, channel, and noise by sharing the base seed.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .detectors import (amp_decide, cdml_decide, cdml_estimate, error_metric,
                        mmv_amp_estimate)
from .seqgen import (MaskingSet, SignatureMatrix, build_signature_matrix,
                     gen_cubic_masks, gen_pr_masks, gen_random_family,
                     gen_sidelnikov_masks, gen_trace_masks, RANDOM_FAMILIES)
from .simulator import (PURPOSE_ACTIVITY, PURPOSE_CHANNEL, PURPOSE_DETECTOR,
                        PURPOSE_GEN, PURPOSE_NOISE, draw_activity,
                        draw_channel, synthesize, trial_rng)

DETERMINISTIC_FAMILIES = ("cubic", "pr", "sidelnikov", "trace")
DETECTORS = ("cdml", "mmvamp")
WORKERS_ENV = "GFSIG_WORKERS"

CSV_HEADER = "family,L,H,N_d,Q,K,M,detector,trials,p_e,p_e_stderr,seconds"


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    n_devices: int
    q_per_device: int
    k_grid: tuple[int, ...]
    m_grid: tuple[int, ...]
    trials: int
    L: int | None = None
    p: int | None = None
    m: int | None = None
    H: int | None = None
    sigma_w2: float = 0.1
    detector: str = "cdml"
    sweeps: int = 15
    xi_th: float = 0.25
    max_iters: int = 50
    damping: float = 0.3
    gen_trials: int = 10
    base_seed: int = 0
    output: str = "results.csv"


# config-file key <-> dataclass field
_KEYS = [
    ("family", "family", str),
    ("L", "L", int),
    ("p", "p", int),
    ("m", "m", int),
    ("H", "H", int),
    ("N_d", "n_devices", int),
    ("Q", "q_per_device", int),
    ("K", "k_grid", "grid"),
    ("M", "m_grid", "grid"),
    ("sigma_w2", "sigma_w2", float),
    ("detector", "detector", str),
    ("sweeps", "sweeps", int),
    ("xi_th", "xi_th", float),
    ("max_iters", "max_iters", int),
    ("damping", "damping", float),
    ("gen_trials", "gen_trials", int),
    ("trials", "trials", int),
    ("base_seed", "base_seed", int),
    ("output", "output", str),
]


def parse_config(text: str) -> ExperimentConfig:
    """Parse `key = value` lines (comma lists for grids, # for comments)."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    known = {k: (f, conv) for k, f, conv in _KEYS}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        fname, conv = known[key]
        if conv == "grid":
            kwargs[fname] = tuple(int(v) for v in value.split(","))
        elif conv is str:
            kwargs[fname] = value
        else:
            kwargs[fname] = conv(value)
    missing = [k for k, f, _ in _KEYS
               if f in ("family", "n_devices", "q_per_device", "k_grid", "m_grid", "trials")
               and f not in kwargs]
    if missing:
        raise ValueError(f"missing required config keys: {', '.join(missing)}")
    cfg = ExperimentConfig(**kwargs)
    validate_config(cfg)
    return cfg


def format_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config(format_config(cfg)) == cfg."""
    lines = []
    for key, fname, conv in _KEYS:
        value = getattr(cfg, fname)
        if value is None:
            continue
        if conv == "grid":
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.family not in DETERMINISTIC_FAMILIES + RANDOM_FAMILIES:
        raise ValueError(f"unknown family {cfg.family!r}")
    if cfg.detector not in DETECTORS:
        raise ValueError(f"unknown detector {cfg.detector!r}")
    if cfg.family in ("cubic", "pr") + RANDOM_FAMILIES and cfg.L is None:
        raise ValueError(f"family {cfg.family!r} needs L")
    if cfg.family in ("sidelnikov", "trace") and (cfg.p is None or cfg.m is None):
        raise ValueError(f"family {cfg.family!r} needs p and m")
    if cfg.n_devices < 1 or cfg.q_per_device < 1:
        raise ValueError("N_d and Q must be positive")
    if cfg.trials < 1:
        raise ValueError("trials must be >= 1")
    if not cfg.k_grid or not cfg.m_grid:
        raise ValueError("K and M grids must be non-empty")
    if any(k < 0 or k > cfg.n_devices for k in cfg.k_grid):
        raise ValueError("every K must lie in [0, N_d]")
    if any(mm < 1 for mm in cfg.m_grid):
        raise ValueError("every M must be positive")
    if cfg.sigma_w2 < 0:
        raise ValueError("sigma_w2 must be >= 0")
    if cfg.base_seed < 0:
        raise ValueError("base_seed must be >= 0")


def build_masks(family: str, L: int | None = None, p: int | None = None,
                m: int | None = None, H: int | None = None) -> MaskingSet:
    if family == "cubic":
        return gen_cubic_masks(L)
    if family == "pr":
        return gen_pr_masks(L, H)
    if family == "sidelnikov":
        return gen_sidelnikov_masks(p, m, H)
    if family == "trace":
        return gen_trace_masks(p, m)
    raise ValueError(f"unknown deterministic family {family!r}")


def build_signatures(cfg: ExperimentConfig) -> SignatureMatrix:
    if cfg.family in DETERMINISTIC_FAMILIES:
        masks = build_masks(cfg.family, L=cfg.L, p=cfg.p, m=cfg.m, H=cfg.H)
        return build_signature_matrix(masks, cfg.n_devices, cfg.q_per_device)
    rng = trial_rng(cfg.base_seed, PURPOSE_GEN)
    return gen_random_family(cfg.family, cfg.L, cfg.n_devices * cfg.q_per_device,
                             trials=cfg.gen_trials, rng=rng,
                             q_per_device=cfg.q_per_device)


def run_trial(S: np.ndarray, n_devices: int, q_per_device: int, k_active: int,
              n_antennas: int, sigma_w2: float, detector: str, det_params: dict,
              base_seed: int, trial: int) -> tuple[float, bool]:
    """One Monte-Carlo trial; returns (P_e, diverged).

    Stream keys omit the family and detector so that runs over different
    signature sets see identical activity, channel, and noise draws.
    """
    keys = (k_active, n_antennas, trial)
    activity = draw_activity(n_devices, k_active, q_per_device,
                             trial_rng(base_seed, *keys, PURPOSE_ACTIVITY))
    channel = draw_channel(n_devices, n_antennas, q_per_device,
                           rng=trial_rng(base_seed, *keys, PURPOSE_CHANNEL))
    received = synthesize(S, activity, channel, sigma_w2,
                          trial_rng(base_seed, *keys, PURPOSE_NOISE))
    S_scaled = np.sqrt(S.shape[0]) * S
    diverged = False
    if detector == "cdml":
        est = cdml_estimate(received.Y, S_scaled, sigma_w2,
                            sweeps=det_params.get("sweeps", 15),
                            rng=trial_rng(base_seed, *keys, PURPOSE_DETECTOR))
        decision = cdml_decide(est.gamma_hat, n_devices, q_per_device,
                               xi_th=det_params.get("xi_th", 0.25))
    elif detector == "mmvamp":
        rate = k_active / (n_devices * q_per_device)
        est = mmv_amp_estimate(received.Y, S_scaled, rate, sigma_w2,
                               max_iters=det_params.get("max_iters", 50),
                               damping=det_params.get("damping", 0.3))
        decision = amp_decide(est.X_hat, n_devices, q_per_device,
                              xi_th=det_params.get("xi_th", 0.25))
        diverged = est.diverged
    else:
        raise ValueError(f"unknown detector {detector!r}")
    return error_metric(activity, decision).p_e, diverged


def _trial_star(args):
    return run_trial(*args)


@dataclass(frozen=True)
class ResultRow:
    family: str
    L: int
    H: int | None
    n_devices: int
    q_per_device: int
    k_active: int
    n_antennas: int
    detector: str
    trials: int
    p_e: float
    p_e_stderr: float
    seconds: float
    divergence_rate: float = 0.0  # not serialized; surfaced as a warning

    def csv_row(self) -> str:
        h = "" if self.H is None else str(self.H)
        return (
            f"{self.family},{self.L},{h},{self.n_devices},{self.q_per_device},"
            f"{self.k_active},{self.n_antennas},{self.detector},{self.trials},"
            f"{self.p_e!r},{self.p_e_stderr!r},{self.seconds:.3f}"
        )


def workers_from_env() -> int:
    value = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(value)
    except ValueError as exc:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {value!r}") from exc
    return max(workers, 1)


def run_experiment(cfg: ExperimentConfig, workers: int = 1,
                   warn=None) -> list[ResultRow]:
    """Run the full (K, M) grid; one ResultRow per grid point."""
    validate_config(cfg)
    sig = build_signatures(cfg)
    S = sig.entries
    det_params = {"sweeps": cfg.sweeps, "xi_th": cfg.xi_th,
                  "max_iters": cfg.max_iters, "damping": cfg.damping}
    rows = []
    for k_active in cfg.k_grid:
        for n_antennas in cfg.m_grid:
            start = time.perf_counter()
            args = [
                (S, cfg.n_devices, cfg.q_per_device, k_active, n_antennas,
                 cfg.sigma_w2, cfg.detector, det_params, cfg.base_seed, t)
                for t in range(cfg.trials)
            ]
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    chunk = -(-len(args) // workers)
                    outcomes = list(pool.map(_trial_star, args, chunksize=chunk))
            else:
                outcomes = [run_trial(*a) for a in args]
            p_es = np.array([p for p, _ in outcomes])
            div_rate = float(np.mean([d for _, d in outcomes]))
            stderr = float(p_es.std(ddof=1) / np.sqrt(len(p_es))) if len(p_es) > 1 else 0.0
            row = ResultRow(cfg.family, sig.L, cfg.H, cfg.n_devices,
                            cfg.q_per_device, k_active, n_antennas, cfg.detector,
                            cfg.trials, float(p_es.mean()), stderr,
                            time.perf_counter() - start, div_rate)
            rows.append(row)
            if div_rate > 0.5 and warn is not None:
                warn(f"divergence rate {div_rate:.0%} at K={k_active}, M={n_antennas}")
    return rows


def write_results(rows: list[ResultRow], path) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.csv_row() + "\n")


def config_with(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    out = replace(cfg, **changes)
    validate_config(out)
    return out
