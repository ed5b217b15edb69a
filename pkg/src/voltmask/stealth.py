"""Output-voltage masking for a synthesized input-current attack.

While the injection u_a drives the real cell (the plant) away from the
user's intent, the adversary also corrupts the voltage measurement so the
monitoring side keeps seeing a nominal-looking signal.  The correction

    y_a = g(X_nom, u_nom) - g(X, u_nom + u_a) + k_a (Y - g(X_nom, u_nom))

is built from the adversary's own model (open-loop difference between the
nominal and attacked model outputs) plus a feedback term on the measured
voltage Y.  Y is the signal the monitor sees, which already contains the
injected correction, so each sample closes an algebraic loop; because the
correction never feeds back into the plant state, the loop resolves
per-sample to

    y_a[k] = (delta[k] + k_a (y_plant[k] - y_nom[k])) / (1 - k_a)

with delta the open-loop model difference and y_plant the (noisy) plant
voltage under attack.  k_a = 1 is singular and rejected; |k_a| >= 1 is
flagged as a stability warning since large gains amplify measurement
noise.  With a perfect model and no noise the masking is exact for any
admissible k_a.

The plant may differ from the adversary's model (parameter mismatch) and
may add gaussian measurement noise drawn from a seeded generator, which
is what makes the masking residual nonzero and k_a worth tuning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ecm import BatteryState, EcmParams, simulate
from .profiles import TimeSeries, add, check_same_grid

__all__ = [
    "PlantConfig",
    "StealthResult",
    "nominal_model_output",
    "open_loop_output_attack",
    "feedback_output_attack",
]


@dataclass(frozen=True)
class PlantConfig:
    """True cell parameters plus measurement-noise level and seed."""

    true_params: EcmParams
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.noise_std >= 0.0 and math.isfinite(self.noise_std)):
            raise ValueError(f"noise_std must be >= 0 and finite, got {self.noise_std}")


@dataclass(frozen=True, eq=False)
class StealthResult:
    """Masking outcome on the scenario grid.

    y_nom        adversary-model nominal output g(X_nom, u_nom)
    y_nom_plant  plant nominal output (true params under u_nom, no noise);
                 the baseline the residual is measured against
    y_plant      plant voltage under u_nom + u_a, noise included, pre-masking
    y_a          injected output correction
    y_measured   what the monitor sees, y_plant + y_a exactly
    """

    y_nom: TimeSeries
    y_nom_plant: TimeSeries
    y_plant: TimeSeries
    y_a: TimeSeries
    y_measured: TimeSeries
    residual_rms: float
    residual_max: float
    final_soc_plant: float
    final_soc_nominal: float
    soc_violation_plant: bool
    soc_violation_nominal: bool
    ka_warning: bool


def nominal_model_output(
    adv_params: EcmParams, x0: BatteryState, u_nom: TimeSeries
) -> TimeSeries:
    """The adversary-model nominal voltage g(X_nom, u_nom)."""
    return simulate(adv_params, x0, u_nom).voltage


def open_loop_output_attack(
    adv_params: EcmParams, x0: BatteryState, u_nom: TimeSeries, u_a: TimeSeries
) -> TimeSeries:
    """Model-based correction g(X_nom, u_nom) - g(X, u_nom + u_a), no feedback."""
    check_same_grid(u_nom, u_a)
    y_nom = simulate(adv_params, x0, u_nom).voltage
    y_att = simulate(adv_params, x0, add(u_nom, u_a)).voltage
    return TimeSeries(u_nom.t0, u_nom.dt, y_nom.samples - y_att.samples)


def feedback_output_attack(
    adv_params: EcmParams,
    plant: PlantConfig,
    x0: BatteryState,
    u_nom: TimeSeries,
    u_a: TimeSeries,
    k_a: float,
) -> StealthResult:
    """Run the masked attack against the plant and score the residual.

    With k_a = 0 this reduces exactly to the open-loop correction.  The
    residual compares y_measured against the plant's no-attack voltage,
    i.e. what the monitor would have seen had nothing been injected.
    """
    if not math.isfinite(k_a):
        raise ValueError(f"k_a must be finite, got {k_a}")
    if k_a == 1.0:
        raise ValueError("k_a = 1 makes the per-sample correction singular")
    check_same_grid(u_nom, u_a)
    u_total = add(u_nom, u_a)

    nom_model = simulate(adv_params, x0, u_nom)
    att_model = simulate(adv_params, x0, u_total)
    plant_att = simulate(plant.true_params, x0, u_total)
    plant_nom = simulate(plant.true_params, x0, u_nom)

    n = len(u_nom)
    noise = np.random.default_rng(plant.seed).standard_normal(n) * plant.noise_std
    y_nom = nom_model.voltage.samples
    y_plant = plant_att.voltage.samples + noise
    delta = y_nom - att_model.voltage.samples
    y_a = (delta + k_a * (y_plant - y_nom)) / (1.0 - k_a)
    y_measured = y_plant + y_a

    residual = y_measured - plant_nom.voltage.samples
    residual_rms = float(np.sqrt(np.mean(residual * residual)))
    residual_max = float(np.abs(residual).max())

    grid = (u_nom.t0, u_nom.dt)
    return StealthResult(
        y_nom=nom_model.voltage,
        y_nom_plant=plant_nom.voltage,
        y_plant=TimeSeries(*grid, y_plant),
        y_a=TimeSeries(*grid, y_a),
        y_measured=TimeSeries(*grid, y_measured),
        residual_rms=residual_rms,
        residual_max=residual_max,
        final_soc_plant=float(plant_att.soc[-1]),
        final_soc_nominal=float(plant_nom.soc[-1]),
        soc_violation_plant=plant_att.soc_violation,
        soc_violation_nominal=plant_nom.soc_violation,
        ka_warning=bool(abs(k_a) >= 1.0),
    )
