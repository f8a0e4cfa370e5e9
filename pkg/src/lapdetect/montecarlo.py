"""End-to-end attack simulation and empirical validation of the closed forms.

Trials are vectorized in fixed-size chunks, each drawn from its own random
stream keyed by (seed, role, chunk index). Chunk boundaries depend only on
the trial count, never on the worker count, and per-chunk detection counts
are integers, so aggregated reports are bit-identical no matter how the
chunks are scheduled. Threads are sufficient for parallelism here because
the bulk sampling work happens inside numpy.
"""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .detector import (
    DetectionTest,
    TailDirection,
    _detected,
    one_sided_power,
    one_sided_size,
    two_sided_power,
    two_sided_size,
)
from .laplace import LaplaceDist, RngStream
from .mechanism import (
    AttackSpec,
    Dataset,
    MechanismConfig,
    hypothesis_pair,
    inject_attack,
    sum_query,
)

__all__ = [
    "SimConfig",
    "SimReport",
    "AttackTrace",
    "estimate_error_rates",
    "run_attack_experiment",
    "default_grid",
    "run_grid",
    "write_grid_csv",
    "GRID_CSV_HEADER",
]

# Trials per random stream. Fixing this constant is what makes reports
# independent of the worker count; changing it changes sampled values.
_CHUNK = 1 << 16

# role (H0 vs H1 run) is packed above the chunk index in the stream id.
_ROLE_SHIFT = 48

GRID_CSV_HEADER = "eps,theta,dmu,alpha,alpha_hat,power,power_hat,pass"


@dataclass(frozen=True)
class SimConfig:
    """One simulation cell: mechanism, attack, test parameters, and budget."""

    cfg: MechanismConfig
    attack: AttackSpec
    alpha: float
    direction: TailDirection
    n_trials: int
    seed: int

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError(f"need at least one trial, got {self.n_trials}")


@dataclass(frozen=True)
class SimReport:
    """Empirical error rates next to their closed-form counterparts.

    Half-widths are 3-sigma binomial: 3 sqrt(p_hat (1 - p_hat) / n). The
    report passes when both empirical rates sit inside their bands.
    """

    alpha_hat: float
    power_hat: float
    alpha_closed: float
    power_closed: float
    half_width_alpha: float
    half_width_power: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "power_hat": self.power_hat,
            "alpha_closed": self.alpha_closed,
            "power_closed": self.power_closed,
            "half_width_alpha": self.half_width_alpha,
            "half_width_power": self.half_width_power,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class AttackTrace:
    """Per-trial pipeline record from :func:`run_attack_experiment`."""

    h0_releases: np.ndarray
    h0_residuals: np.ndarray
    h0_detected: np.ndarray
    h1_releases: np.ndarray
    h1_residuals: np.ndarray
    h1_detected: np.ndarray


def _half_width(p_hat: float, n: int) -> float:
    return 3.0 * math.sqrt(p_hat * (1.0 - p_hat) / n)


def _chunks(n: int) -> list[tuple[int, int]]:
    """(chunk index, chunk length) pairs covering n trials."""
    return [(c, min(_CHUNK, n - c * _CHUNK)) for c in range((n + _CHUNK - 1) // _CHUNK)]


def _run_chunks(fn, chunk_list, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, chunk_list))
    return [fn(c) for c in chunk_list]


def _count_detected(
    dist: LaplaceDist,
    test: DetectionTest,
    n: int,
    seed: int,
    role: int,
    workers: int,
) -> int:
    def one(chunk: tuple[int, int]) -> int:
        c, m = chunk
        z = dist.sample(RngStream(seed, (role << _ROLE_SHIFT) | c), m)
        return int(np.count_nonzero(_detected(z, test)))

    return sum(_run_chunks(one, _chunks(n), workers))


def _report(
    test: DetectionTest,
    attack: AttackSpec,
    detected_h0: int,
    detected_h1: int,
    n: int,
) -> SimReport:
    alpha_hat = detected_h0 / n
    power_hat = detected_h1 / n
    if test.direction.one_sided:
        alpha_closed = one_sided_size(test.k, test.cfg, test.direction)
        power_closed = one_sided_power(test.k, test.cfg, attack, test.direction)
    else:
        alpha_closed = two_sided_size(test.k1, test.k2, test.cfg)
        power_closed = two_sided_power(test.k1, test.k2, test.cfg, attack)
    hw_alpha = _half_width(alpha_hat, n)
    hw_power = _half_width(power_hat, n)
    return SimReport(
        alpha_hat=alpha_hat,
        power_hat=power_hat,
        alpha_closed=alpha_closed,
        power_closed=power_closed,
        half_width_alpha=hw_alpha,
        half_width_power=hw_power,
        passed=(
            abs(alpha_hat - alpha_closed) <= hw_alpha
            and abs(power_hat - power_closed) <= hw_power
        ),
    )


def estimate_error_rates(sim: SimConfig, workers: int = 1) -> SimReport:
    """Estimate false-alarm and detection rates against their closed forms.

    Runs n_trials residuals under H0 (no attack) and n_trials under H1
    (bias injected, scale inflated by theta), counting detections with the
    calibrated test. Deterministic per seed regardless of ``workers``.
    """
    test = DetectionTest.from_alpha(sim.alpha, sim.cfg, sim.direction)
    h0, h1 = hypothesis_pair(sim.cfg, sim.attack)
    detected_h0 = _count_detected(h0, test, sim.n_trials, sim.seed, 0, workers)
    detected_h1 = _count_detected(h1, test, sim.n_trials, sim.seed, 1, workers)
    return _report(test, sim.attack, detected_h0, detected_h1, sim.n_trials)


def run_attack_experiment(
    data: Dataset,
    sim: SimConfig,
    workers: int = 1,
    trace: bool = False,
) -> SimReport | tuple[SimReport, AttackTrace]:
    """Simulate the full release pipeline on a concrete dataset.

    Per trial: release the noisy sum, under H1 additionally inject the
    attack record's value, then let the defender form the residual
    release - q(x) and decide. With ``trace=True`` also returns the
    per-trial releases, residuals and decisions (memory scales with
    n_trials).

    Raises:
        ValueError: If the dataset bound disagrees with the configured
            sensitivity (the mechanism would be miscalibrated).
    """
    cfg = sim.cfg
    if data.sensitivity != cfg.s:
        raise ValueError(
            f"dataset bound {data.sensitivity} != configured sensitivity {cfg.s}; "
            "the sum query's sensitivity is the record bound"
        )
    q = sum_query(data)
    test = DetectionTest.from_alpha(sim.alpha, cfg, sim.direction)
    noise0 = LaplaceDist(cfg.mu0, cfg.b0)
    noise1 = LaplaceDist(cfg.mu0, cfg.b1)

    def one(role: int, chunk: tuple[int, int]) -> tuple[int, tuple | None]:
        c, m = chunk
        z = (noise0 if role == 0 else noise1).sample(
            RngStream(sim.seed, (role << _ROLE_SHIFT) | c), m
        )
        releases = q + z
        if role == 1:
            releases = inject_attack(releases, sim.attack)
        residuals = releases - q
        det = _detected(residuals, test)
        count = int(np.count_nonzero(det))
        return (count, (releases, residuals, det) if trace else None)

    chunk_list = _chunks(sim.n_trials)
    out0 = _run_chunks(lambda ch: one(0, ch), chunk_list, workers)
    out1 = _run_chunks(lambda ch: one(1, ch), chunk_list, workers)
    report = _report(
        test, sim.attack, sum(c for c, _ in out0), sum(c for c, _ in out1), sim.n_trials
    )
    if not trace:
        return report

    def cat(parts, i):
        return np.concatenate([p[i] for _, p in parts])

    return report, AttackTrace(
        h0_releases=cat(out0, 0),
        h0_residuals=cat(out0, 1),
        h0_detected=cat(out0, 2),
        h1_releases=cat(out1, 0),
        h1_residuals=cat(out1, 1),
        h1_detected=cat(out1, 2),
    )


def default_grid(
    eps_values: Sequence[float] = (0.015, 0.5, 1.0, 2.0),
    theta_values: Sequence[float] = (1.0, 1.5),
    dmu_over_s: Sequence[float] = (0.5, 1.0, 4.0),
    alphas: Sequence[float] = tuple(a / 10.0 for a in range(1, 10)),
) -> list[tuple[float, float, float, float]]:
    """Validation grid spanning weak-to-strong privacy and sub- to
    super-sensitivity biases: (eps, theta, dmu/s, alpha) cells."""
    return [
        (eps, theta, ratio, alpha)
        for eps in eps_values
        for theta in theta_values
        for ratio in dmu_over_s
        for alpha in alphas
    ]


def run_grid(
    grid: Sequence[tuple[float, float, float, float]] | None = None,
    s: float = 1.0,
    n_trials: int = 10**6,
    seed: int = 20260809,
    workers: int = 1,
    direction: TailDirection = TailDirection.RIGHT,
) -> list[dict]:
    """Run :func:`estimate_error_rates` on every grid cell.

    Each cell gets an independent seed derived from (seed, cell index), so
    results do not depend on how cells are batched or ordered by callers.
    """
    if grid is None:
        grid = default_grid()
    rows = []
    for i, (eps, theta, ratio, alpha) in enumerate(grid):
        cell_seed = int(np.random.SeedSequence((seed, i)).generate_state(1, np.uint64)[0])
        sim = SimConfig(
            cfg=MechanismConfig(s=s, eps=eps, theta=theta),
            attack=AttackSpec(x_a=ratio * s),
            alpha=alpha,
            direction=direction,
            n_trials=n_trials,
            seed=cell_seed,
        )
        report = estimate_error_rates(sim, workers=workers)
        rows.append(
            {
                "eps": eps,
                "theta": theta,
                "dmu": ratio * s,
                "alpha": alpha,
                "alpha_hat": report.alpha_hat,
                "power": report.power_closed,
                "power_hat": report.power_hat,
                "pass": report.passed,
            }
        )
    return rows


def write_grid_csv(rows: Sequence[dict], out: str | Path | io.TextIOBase) -> None:
    """Append ``eps,theta,dmu,alpha,alpha_hat,power,power_hat,pass`` rows.

    The header is written only when the target is new or empty, so repeated
    runs accumulate into one file.
    """
    close = False
    if isinstance(out, (str, Path)):
        fresh = not os.path.exists(out) or os.path.getsize(out) == 0
        out = open(out, "a", newline="")
        close = True
    else:
        fresh = out.tell() == 0
    try:
        if fresh:
            out.write(GRID_CSV_HEADER + "\n")
        for r in rows:
            out.write(
                ",".join(
                    [
                        format(r["eps"], ".17g"),
                        format(r["theta"], ".17g"),
                        format(r["dmu"], ".17g"),
                        format(r["alpha"], ".17g"),
                        format(r["alpha_hat"], ".17g"),
                        format(r["power"], ".17g"),
                        format(r["power_hat"], ".17g"),
                        "true" if r["pass"] else "false",
                    ]
                )
                + "\n"
            )
    finally:
        if close:
            out.close()
