"""Scoring helpers: RMS residuals, scenario summaries, k_a sweeps."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ecm import BatteryState, EcmParams
from .profiles import TimeSeries, check_same_grid
from .stealth import PlantConfig, feedback_output_attack

__all__ = [
    "ScenarioSummary",
    "KaSweepResult",
    "rms",
    "attack_energy",
    "sweep_ka",
    "select_argmin",
]


@dataclass(frozen=True)
class ScenarioSummary:
    """Headline numbers for one scenario run.

    final_soc_nominal / final_soc_attacked are the plant's (true cell's)
    end states without and with the injection.  attack_energy is
    sum(u_a^2) * dt.  The violation flags are reported, never enforced;
    driving SoC out of range is the attack's goal, not a failure.
    """

    final_soc_nominal: float
    final_soc_attacked: float
    residual_rms: float
    residual_max: float
    attack_energy: float
    i_max_violated: bool
    soc_violation_nominal: bool
    soc_violation_attacked: bool
    ka_warning: bool


def rms(a: TimeSeries, b: TimeSeries) -> float:
    """Root-mean-square difference of two series on the same grid."""
    check_same_grid(a, b)
    err = a.samples - b.samples
    return float(np.sqrt(np.mean(err * err)))


def attack_energy(u_a: TimeSeries) -> float:
    """Injection effort sum(u_a[k]^2) * dt."""
    return float(np.sum(u_a.samples * u_a.samples) * u_a.dt)


@dataclass(frozen=True)
class KaSweepResult:
    """Rows (k_a, residual_rms) sorted by k_a, plus the winner."""

    rows: tuple[tuple[float, float], ...]
    argmin_ka: float
    argmin_rms: float


def select_argmin(rows) -> tuple[float, float]:
    """Smallest residual; ties go to the smallest |k_a|, then smallest k_a."""
    best = min(rows, key=lambda row: (row[1], abs(row[0]), row[0]))
    return best[0], best[1]


def _derived_seed(base_seed: int, index: int) -> int:
    """Deterministic per-k_a noise seed, independent of evaluation order."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


def sweep_ka(
    adv_params: EcmParams,
    plant: PlantConfig,
    x0: BatteryState,
    u_nom: TimeSeries,
    u_a: TimeSeries,
    ka_values,
    workers: int = 1,
) -> KaSweepResult:
    """Score the masking residual over a set of feedback gains.

    The injection u_a is fixed; only the output-correction gain varies.
    Values are sorted first and each gets a noise seed derived from the
    plant seed and its sorted rank, so results are identical no matter
    how many workers evaluate them.
    """
    kas = sorted(float(k) for k in ka_values)
    if not kas:
        raise ValueError("ka_values must not be empty")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    def evaluate(item: tuple[int, float]) -> tuple[float, float]:
        index, ka = item
        cfg = PlantConfig(
            true_params=plant.true_params,
            noise_std=plant.noise_std,
            seed=_derived_seed(plant.seed, index),
        )
        result = feedback_output_attack(adv_params, cfg, x0, u_nom, u_a, ka)
        return ka, result.residual_rms

    items = list(enumerate(kas))
    if workers == 1 or len(items) == 1:
        rows = [evaluate(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate, items))
    argmin_ka, argmin_rms = select_argmin(rows)
    return KaSweepResult(rows=tuple(rows), argmin_ka=argmin_ka, argmin_rms=argmin_rms)
