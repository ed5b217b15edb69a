"""Optimal input-current attack synthesis by a backward Riccati sweep.

The adversary injects an additional current u_a on top of the user's
profile u_nom and wants the state X = (soc, vc) to follow a reference
trajectory X_ref (typically a ramp from the present SoC to an over-charge
or over-discharge target) at minimal injection effort.  The cost is the
finite-horizon quadratic tracker

    J = 1/2 (X(tf)-X_ref(tf))' Q1 (X(tf)-X_ref(tf))
      + 1/2 int (X-X_ref)' Q2 (X-X_ref) + r u_a^2 dt

over the linear cell dynamics X' = A X + B (u_nom + u_a).  The optimal
injection is the time-varying state feedback

    u_a(t) = -(1/r) B' (S(t) X(t) - V(t))

where S (2x2, symmetric) and V (2-vector) solve, backward from tf,

    S' = -(S A + A' S - S B r^-1 B' S + Q2)          S(tf) = Q1
    V' = -(A' V - S B r^-1 B' V - S B u_nom + Q2 X_ref)   V(tf) = Q1 X_ref(tf)

The sweep is integrated with classic 4th-order Runge-Kutta at the grid
resolution; u_nom and X_ref are linearly interpolated at the half-step
stage points.  The synthesized trajectory is then rolled out forward with
the exact zero-order-hold cell model, closing the loop on the adversary's
own simulated state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ecm import BatteryState, EcmParams, state_matrices
from .profiles import TimeSeries

__all__ = [
    "AttackWeights",
    "ReferenceTrajectory",
    "RiccatiSolution",
    "InputAttackResult",
    "DivergenceError",
    "build_reference",
    "solve_riccati",
    "attack_current",
    "synthesize_input_attack",
]


class DivergenceError(RuntimeError):
    """The backward sweep produced non-finite values."""


def _check_weight_matrix(name: str, q: np.ndarray) -> None:
    if q.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2, got shape {q.shape}")
    if not np.isfinite(q).all():
        raise ValueError(f"{name} must be finite")
    tol = 1e-12 * max(1.0, float(np.abs(q).max()))
    if float(np.abs(q - q.T).max()) > tol:
        raise ValueError(f"{name} must be symmetric to 1e-12")
    if float(np.linalg.eigvalsh(q).min()) < -tol:
        raise ValueError(f"{name} must be positive semidefinite (eigenvalues >= -1e-12)")


@dataclass(frozen=True, eq=False)
class AttackWeights:
    """Tracking weights (q1 terminal, q2 running, r > 0 on injection effort).

    Defaults are the documented baseline diag(1e4, 0), diag(10, 0), 1;
    shipped scenario files record their own, scaled to the cell capacity.
    """

    q1: np.ndarray = None
    q2: np.ndarray = None
    r: float = 1.0

    def __post_init__(self):
        q1 = np.array([[1e4, 0.0], [0.0, 0.0]] if self.q1 is None else self.q1, dtype=float)
        q2 = np.array([[10.0, 0.0], [0.0, 0.0]] if self.q2 is None else self.q2, dtype=float)
        _check_weight_matrix("q1", q1)
        _check_weight_matrix("q2", q2)
        if not (isinstance(self.r, (int, float)) and math.isfinite(self.r) and self.r > 0):
            raise ValueError(f"r must be positive and finite, got {self.r}")
        q1.setflags(write=False)
        q2.setflags(write=False)
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "q2", q2)
        object.__setattr__(self, "r", float(self.r))


@dataclass(frozen=True)
class ReferenceTrajectory:
    """SoC reference over [t0, tf]; the vc reference component is zero.

    shape 'linear_ramp' moves soc_start -> soc_target linearly over the
    horizon; 'hold_target' sits at soc_target for the whole horizon.
    """

    soc_start: float
    soc_target: float
    t0: float
    tf: float
    shape: str = "linear_ramp"

    def __post_init__(self):
        if self.shape not in ("linear_ramp", "hold_target"):
            raise ValueError(
                f"unknown reference shape {self.shape!r}; "
                "expected linear_ramp or hold_target"
            )
        for name in ("soc_start", "soc_target"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not (self.tf > self.t0):
            raise ValueError(f"tf must exceed t0, got [{self.t0}, {self.tf}]")


def build_reference(ref: ReferenceTrajectory, grid: np.ndarray) -> np.ndarray:
    """Sample the reference on a time grid; returns an (n, 2) array."""
    grid = np.asarray(grid, dtype=float)
    fuzz = 1e-9 * max(1.0, abs(ref.tf - ref.t0))
    if grid[0] < ref.t0 - fuzz or grid[-1] > ref.tf + fuzz:
        raise ValueError(
            f"grid [{grid[0]}, {grid[-1]}] leaves reference horizon [{ref.t0}, {ref.tf}]"
        )
    out = np.zeros((grid.size, 2))
    if ref.shape == "hold_target":
        out[:, 0] = ref.soc_target
    else:
        frac = (grid - ref.t0) / (ref.tf - ref.t0)
        out[:, 0] = ref.soc_start + (ref.soc_target - ref.soc_start) * frac
    return out


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Backward sweep result on the synthesis grid.

    s[k] is the symmetric 2x2 gain matrix and v[k] the feedforward
    vector at grid[k]; the last entries hold the terminal conditions
    exactly.  interp() evaluates both by linear interpolation in time.
    """

    grid: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        for name in ("grid", "s", "v"):
            getattr(self, name).setflags(write=False)

    def interp(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid
        fuzz = 1e-9 * max(1.0, g[-1] - g[0])
        if t < g[0] - fuzz or t > g[-1] + fuzz:
            raise ValueError(f"t={t} outside sweep horizon [{g[0]}, {g[-1]}]")
        if t <= g[0]:
            return self.s[0].copy(), self.v[0].copy()
        if t >= g[-1]:
            return self.s[-1].copy(), self.v[-1].copy()
        j = int(np.searchsorted(g, t, side="right")) - 1
        w = (t - g[j]) / (g[j + 1] - g[j])
        s = (1.0 - w) * self.s[j] + w * self.s[j + 1]
        v = (1.0 - w) * self.v[j] + w * self.v[j + 1]
        return s, v


def _sweep_backward(
    a: np.ndarray,
    b: np.ndarray,
    q1: np.ndarray,
    q2: np.ndarray,
    r: float,
    xref: np.ndarray,
    unom: np.ndarray,
    grid: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """RK4 backward integration of the coupled S / V equations.

    Works on scalarized entries (S symmetric, so five coupled scalars
    plus two for V) which keeps the per-step cost trivial.
    """
    a11, a12 = float(a[0, 0]), float(a[0, 1])
    a21, a22 = float(a[1, 0]), float(a[1, 1])
    b1, b2 = float(b[0]), float(b[1])
    q2_11, q2_12, q2_22 = float(q2[0, 0]), float(q2[0, 1]), float(q2[1, 1])
    rinv = 1.0 / r

    def rhs(y, xr1, xr2, un):
        s11, s12, s22, v1, v2 = y
        m11 = s11 * a11 + s12 * a21
        m12 = s11 * a12 + s12 * a22
        m21 = s12 * a11 + s22 * a21
        m22 = s12 * a12 + s22 * a22
        p1 = s11 * b1 + s12 * b2
        p2 = s12 * b1 + s22 * b2
        ds11 = -(2.0 * m11 - p1 * p1 * rinv + q2_11)
        ds12 = -(m12 + m21 - p1 * p2 * rinv + q2_12)
        ds22 = -(2.0 * m22 - p2 * p2 * rinv + q2_22)
        btv = b1 * v1 + b2 * v2
        dv1 = -(a11 * v1 + a21 * v2 - p1 * btv * rinv - p1 * un + q2_11 * xr1 + q2_12 * xr2)
        dv2 = -(a12 * v1 + a22 * v2 - p2 * btv * rinv - p2 * un + q2_12 * xr1 + q2_22 * xr2)
        return (ds11, ds12, ds22, dv1, dv2)

    n = grid.size
    s_out = np.empty((n, 2, 2))
    v_out = np.empty((n, 2))
    # terminal conditions assigned exactly, not integrated
    s_out[-1] = q1
    v_out[-1] = q1 @ xref[-1]
    y = (
        float(q1[0, 0]),
        float(q1[0, 1]),
        float(q1[1, 1]),
        float(v_out[-1, 0]),
        float(v_out[-1, 1]),
    )
    # plain-float views keep the stepping loop in scalar arithmetic; a
    # diverging sweep then overflows to inf silently and is caught by the
    # finite check instead of spraying numpy warnings
    times = grid.tolist()
    xr1s = xref[:, 0].tolist()
    xr2s = xref[:, 1].tolist()
    uns = unom.tolist()
    for k in range(n - 1, 0, -1):
        h = times[k - 1] - times[k]  # negative
        xr1_hi, xr2_hi = xr1s[k], xr2s[k]
        xr1_lo, xr2_lo = xr1s[k - 1], xr2s[k - 1]
        xr1_mid = 0.5 * (xr1_hi + xr1_lo)
        xr2_mid = 0.5 * (xr2_hi + xr2_lo)
        un_hi = uns[k]
        un_lo = uns[k - 1]
        un_mid = 0.5 * (un_hi + un_lo)
        k1 = rhs(y, xr1_hi, xr2_hi, un_hi)
        y2 = tuple(yi + 0.5 * h * ki for yi, ki in zip(y, k1))
        k2 = rhs(y2, xr1_mid, xr2_mid, un_mid)
        y3 = tuple(yi + 0.5 * h * ki for yi, ki in zip(y, k2))
        k3 = rhs(y3, xr1_mid, xr2_mid, un_mid)
        y4 = tuple(yi + h * ki for yi, ki in zip(y, k3))
        k4 = rhs(y4, xr1_lo, xr2_lo, un_lo)
        y = tuple(
            yi + (h / 6.0) * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
            for yi, k1i, k2i, k3i, k4i in zip(y, k1, k2, k3, k4)
        )
        if not all(math.isfinite(yi) for yi in y):
            raise DivergenceError(
                f"riccati sweep diverged at t={grid[k - 1]} "
                "(weights too stiff for this grid step)"
            )
        s11, s12, s22, v1, v2 = y
        s_out[k - 1, 0, 0] = s11
        s_out[k - 1, 0, 1] = s12
        s_out[k - 1, 1, 0] = s12
        s_out[k - 1, 1, 1] = s22
        v_out[k - 1, 0] = v1
        v_out[k - 1, 1] = v2
    return s_out, v_out


def solve_riccati(
    params: EcmParams,
    weights: AttackWeights,
    ref: ReferenceTrajectory,
    u_nom: TimeSeries,
    grid: np.ndarray | None = None,
) -> RiccatiSolution:
    """Backward sweep on the u_nom grid (a different grid must match it)."""
    times = u_nom.times()
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        if grid.shape != times.shape or not np.array_equal(grid, times):
            raise ValueError("grid must match the u_nom sample grid exactly")
    grid = times
    if grid.size < 2:
        raise ValueError("sweep needs at least 2 grid points")
    xref = build_reference(ref, grid)
    mats = state_matrices(params)
    s, v = _sweep_backward(
        mats.a, mats.b, weights.q1, weights.q2, weights.r, xref, u_nom.samples, grid
    )
    return RiccatiSolution(grid=grid, s=s, v=v)


def attack_current(
    riccati: RiccatiSolution, b: np.ndarray, r: float, state: BatteryState, t: float
) -> float:
    """Feedback law u_a = -(1/r) b' (S(t) x - V(t))."""
    s, v = riccati.interp(t)
    lam1 = s[0, 0] * state.soc + s[0, 1] * state.vc - v[0]
    lam2 = s[1, 0] * state.soc + s[1, 1] * state.vc - v[1]
    return -(float(b[0]) * lam1 + float(b[1]) * lam2) / r


@dataclass(frozen=True, eq=False)
class InputAttackResult:
    """Synthesized injection u_a plus the attacked model trajectory.

    soc/vc are the adversary-model states under u_nom + u_a, aligned with
    the grid like SimulationResult.  i_max_violated reports whether the
    total current ever exceeded the optional bound (never clipped).
    """

    u_a: TimeSeries
    soc: np.ndarray
    vc: np.ndarray
    riccati: RiccatiSolution
    i_max_violated: bool
    soc_violation: bool

    def __post_init__(self):
        self.soc.setflags(write=False)
        self.vc.setflags(write=False)

    def states(self) -> list[BatteryState]:
        return [BatteryState(s, v) for s, v in zip(self.soc, self.vc)]


def synthesize_input_attack(
    params: EcmParams,
    weights: AttackWeights,
    ref: ReferenceTrajectory,
    u_nom: TimeSeries,
    x0: BatteryState,
    i_max: float | None = None,
) -> InputAttackResult:
    """Sweep backward, then roll the closed loop forward from x0.

    The forward pass advances the adversary's model with the exact
    zero-order-hold step under u_nom[k] + u_a[k], evaluating the feedback
    law at each grid node along the simulated state.
    """
    riccati = solve_riccati(params, weights, ref, u_nom)
    s = riccati.s
    v = riccati.v
    mats = state_matrices(params)
    b1, b2 = float(mats.b[0]), float(mats.b[1])
    rinv = 1.0 / weights.r
    dt = u_nom.dt
    alpha = math.exp(-dt / params.tau1)
    beta = params.r1 * (1.0 - alpha)
    scale = dt / params.capacity_q
    unom = u_nom.samples
    n = unom.size
    u_a = np.empty(n)
    soc_arr = np.empty(n)
    vc_arr = np.empty(n)
    soc = x0.soc
    vc = x0.vc
    charge = 0.0
    comp = 0.0
    soc0 = x0.soc
    for k in range(n):
        soc_arr[k] = soc
        vc_arr[k] = vc
        lam1 = s[k, 0, 0] * soc + s[k, 0, 1] * vc - v[k, 0]
        lam2 = s[k, 1, 0] * soc + s[k, 1, 1] * vc - v[k, 1]
        ua = -(b1 * lam1 + b2 * lam2) * rinv
        u_a[k] = ua
        if k < n - 1:
            total = unom[k] + ua
            y = total - comp
            t = charge + y
            comp = (t - charge) - y
            charge = t
            soc = soc0 - scale * charge
            vc = alpha * vc + beta * total
    violated = False
    if i_max is not None:
        violated = bool(np.abs(unom + u_a).max() > i_max)
    soc_violation = bool((soc_arr < 0.0).any() or (soc_arr > 1.0).any())
    return InputAttackResult(
        u_a=TimeSeries(u_nom.t0, dt, u_a),
        soc=soc_arr,
        vc=vc_arr,
        riccati=riccati,
        i_max_violated=violated,
        soc_violation=soc_violation,
    )
