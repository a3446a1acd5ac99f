"""Barrier function, its robustified form, and the recentered squared log barrier.

The safe set is the zero super-level set of a scalar function h.  Feeding back
state estimates shrinks the certifiable region: the robustified margin
subtracts ell times the current estimation-error envelope from h.  The cost
term is a squared, recentered log barrier of that margin: zero at the origin,
growing without bound at the robustified boundary, and saturating far away so
the origin stays the minimizer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import DomainSet
from .observer import ObserverGains, error_envelope


class BarrierDomainError(RuntimeError):
    """Evaluation outside the robustified safe set without a clamp."""


@dataclass(frozen=True)
class SafetySpec:
    """Barrier h with analytic gradient, Lipschitz-style constant, barrier gain."""

    h: Callable[[np.ndarray], np.ndarray]
    grad_h: Callable[[np.ndarray], np.ndarray]
    ell: float
    kappa: float
    name: str = "custom"
    params: tuple = ()

    def __post_init__(self):
        if self.ell <= 0 or self.kappa <= 0:
            raise ValueError("ell and kappa must be positive")


def parabola_interior(kappa: float, ell: float) -> SafetySpec:
    """Safe set bounded by a parabola: h(x) = 1 - x1 - x2^2."""

    def h(x):
        x = np.asarray(x, float)
        return -x[..., 1] ** 2 - x[..., 0] + 1.0

    def grad_h(x):
        x = np.asarray(x, float)
        return np.stack([-np.ones_like(x[..., 0]), -2.0 * x[..., 1]], axis=-1)

    return SafetySpec(h=h, grad_h=grad_h, ell=ell, kappa=kappa,
                      name="parabola_interior")


def circular_obstacle(center, radius: float, kappa: float, ell: float) -> SafetySpec:
    """Safe set outside a disk: h(x) = ||x - center||^2 - radius^2."""
    center = np.asarray(center, float)
    if radius <= 0:
        raise ValueError("obstacle radius must be positive")

    def h(x):
        d = np.asarray(x, float) - center
        return np.sum(d * d, axis=-1) - radius ** 2

    def grad_h(x):
        return 2.0 * (np.asarray(x, float) - center)

    return SafetySpec(h=h, grad_h=grad_h, ell=ell, kappa=kappa,
                      name="circular_obstacle", params=(tuple(center), radius))


def h_eval(spec: SafetySpec, x):
    """Barrier value; nonnegative means safe."""
    out = np.asarray(spec.h(np.asarray(x, float)), float)
    return float(out) if out.ndim == 0 else out


def robust_margin(spec: SafetySpec, gains: ObserverGains, x_hat, t):
    """h at the estimate minus ell times the current error envelope."""
    return h_eval(spec, x_hat) - spec.ell * error_envelope(gains, t)


def _recenter_log(spec: SafetySpec, margin):
    """-(log of kappa*m/(kappa*m+1)); diverges as the margin vanishes."""
    return np.log1p(1.0 / (spec.kappa * np.asarray(margin, float)))


def _origin_margin(spec: SafetySpec, state_dim: int) -> float:
    h0 = float(spec.h(np.zeros(state_dim)))
    if h0 <= 0:
        raise BarrierDomainError("origin lies outside the safe set")
    return h0


def _margin_of(spec: SafetySpec, zeta, use_envelope: bool):
    zeta = np.asarray(zeta, float)
    hx = np.asarray(spec.h(zeta[..., :-1]), float)
    if use_envelope:
        return hx - spec.ell * zeta[..., -1]
    return hx


def barrier_cost(spec: SafetySpec, zeta, use_envelope: bool = True,
                 floor: float | None = None):
    """Squared recentered log barrier on the augmented state.

    The recentering constant is the log-barrier value at the origin with zero
    envelope, so the cost vanishes at zeta = 0.  With `floor` set, margins
    below it are clamped (extrapolation-grid use); without it, a nonpositive
    margin raises BarrierDomainError.
    """
    zeta = np.asarray(zeta, float)
    margin = _margin_of(spec, zeta, use_envelope)
    if floor is None:
        if np.any(margin <= 0):
            raise BarrierDomainError(
                f"robustified margin nonpositive (min {np.min(margin):.6g})")
    else:
        margin = np.maximum(margin, floor)
    b0 = _recenter_log(spec, _origin_margin(spec, zeta.shape[-1] - 1))
    b = _recenter_log(spec, margin)
    out = (b - b0) ** 2
    return float(out) if out.ndim == 0 else out


def barrier_value_and_gradient(spec: SafetySpec, zeta, use_envelope: bool = True,
                               floor: float | None = None):
    """Cost and gradient in one pass (single margin evaluation).

    On clamped points the gradient is zero (the clamped cost is locally
    constant), which keeps extrapolation updates finite.
    """
    zeta = np.asarray(zeta, float)
    margin = _margin_of(spec, zeta, use_envelope)
    clamped = None
    if floor is None:
        if np.any(margin <= 0):
            raise BarrierDomainError(
                f"robustified margin nonpositive (min {np.min(margin):.6g})")
    else:
        clamped = margin < floor
        margin = np.maximum(margin, floor)
    b0 = _recenter_log(spec, _origin_margin(spec, zeta.shape[-1] - 1))
    b = _recenter_log(spec, margin)
    recentered = b - b0
    val = recentered ** 2
    dbd_margin = -1.0 / (margin * (spec.kappa * margin + 1.0))
    gh = np.asarray(spec.grad_h(zeta[..., :-1]), float)
    denv = np.full(np.shape(margin), -spec.ell if use_envelope else 0.0)
    grad_margin = np.concatenate([gh, np.asarray(denv)[..., None]], axis=-1)
    grad = (2.0 * recentered * dbd_margin)[..., None] * grad_margin
    if clamped is not None:
        grad = np.where(np.asarray(clamped)[..., None], 0.0, grad)
    return val, grad


def barrier_cost_gradient(spec: SafetySpec, zeta, use_envelope: bool = True,
                          floor: float | None = None):
    """Gradient of `barrier_cost` with respect to the augmented state."""
    _, grad = barrier_value_and_gradient(spec, zeta, use_envelope, floor)
    return grad


def lipschitz_audit(spec: SafetySpec, domain: DomainSet, n_pairs: int = 1000,
                    seed: int = 0) -> dict:
    """Sampled check of |h(a)-h(b)| <= ell*||a-b|| on the simulation domain.

    The configured ell values are design constants, not certified Lipschitz
    bounds; a violation here is reported as a warning, not an error.
    """
    rng = np.random.default_rng(seed)
    n = domain.dim
    if domain.kind == "box":
        lo = domain.center - domain.halfwidths
        hi = domain.center + domain.halfwidths
        a = rng.uniform(lo, hi, size=(n_pairs, n))
        b = rng.uniform(lo, hi, size=(n_pairs, n))
    else:
        def sample():
            pts = rng.standard_normal((n_pairs, n))
            pts /= np.linalg.norm(pts, axis=1, keepdims=True)
            r = domain.radius * rng.uniform(0, 1, (n_pairs, 1)) ** (1.0 / n)
            return domain.center + pts * r
        a, b = sample(), sample()
    dist = np.linalg.norm(a - b, axis=1)
    keep = dist > 1e-12
    ratio = np.abs(h_eval(spec, a[keep]) - h_eval(spec, b[keep])) / dist[keep]
    worst = float(ratio.max())
    return {
        "configured_ell": spec.ell,
        "observed_ratio_max": worst,
        "ok": bool(worst <= spec.ell),
        "n_pairs": int(keep.sum()),
    }


@dataclass
class SafetyReport:
    min_h: float
    min_h_time: float
    min_robust_margin: float
    first_violation_time: float | None
    first_margin_violation_time: float | None

    @property
    def violated(self) -> bool:
        return self.first_violation_time is not None

    def to_json_dict(self) -> dict:
        return {
            "min_h": self.min_h,
            "min_h_time": self.min_h_time,
            "min_robust_margin": self.min_robust_margin,
            "first_violation_time": self.first_violation_time,
            "first_margin_violation_time": self.first_margin_violation_time,
            "violated": self.violated,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def monitor_safety(spec: SafetySpec, t, x, x_hat=None, envelope=None) -> SafetyReport:
    """Scan a logged trajectory for barrier violations.

    Reports the minimum of h along the true state, the minimum robustified
    margin along the estimate (when estimate and envelope are given), and the
    first violation times if any.
    """
    t = np.asarray(t, float)
    hx = np.atleast_1d(h_eval(spec, np.asarray(x, float)))
    i_min = int(np.argmin(hx))
    viol = np.nonzero(hx < 0)[0]
    first_viol = float(t[viol[0]]) if viol.size else None

    if x_hat is not None and envelope is not None:
        margin = np.atleast_1d(h_eval(spec, np.asarray(x_hat, float))) \
            - spec.ell * np.asarray(envelope, float)
        mviol = np.nonzero(margin < 0)[0]
        first_mviol = float(t[mviol[0]]) if mviol.size else None
        min_margin = float(margin.min())
    else:
        first_mviol = None
        min_margin = float("nan")

    return SafetyReport(
        min_h=float(hx[i_min]), min_h_time=float(t[i_min]),
        min_robust_margin=min_margin,
        first_violation_time=first_viol,
        first_margin_violation_time=first_mviol)
