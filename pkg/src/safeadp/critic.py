"""Value-function approximation, saturated policy, Bellman-error machinery.

The value estimate is a weighted feature expansion plus the barrier cost; the
policy is a tanh-saturated feedback derived from its gradient.  Weights adapt
online from Bellman errors extrapolated over a fixed set of points, with a
forgetting-factor least-squares gain matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import SystemModel, augmented_drift, augmented_effectiveness
from .safety import SafetySpec, barrier_value_and_gradient


@dataclass(frozen=True)
class Basis:
    """Feature map phi with analytic Jacobian; both vanish at the origin."""

    L: int
    phi: Callable[[np.ndarray], np.ndarray]
    grad_phi: Callable[[np.ndarray], np.ndarray]


def quadratic_basis_2d() -> Basis:
    """The six distinct degree-2 monomials of (x1, x2, envelope)."""

    def phi(z):
        z = np.asarray(z, float)
        z1, z2, z3 = z[..., 0], z[..., 1], z[..., 2]
        return np.stack([z1 * z1, z1 * z2, z2 * z2, z1 * z3, z2 * z3, z3 * z3],
                        axis=-1)

    def grad_phi(z):
        z = np.asarray(z, float)
        z1, z2, z3 = z[..., 0], z[..., 1], z[..., 2]
        o = np.zeros_like(z1)
        rows = [
            (2 * z1, o, o),
            (z2, z1, o),
            (o, 2 * z2, o),
            (z3, o, z1),
            (o, z3, z2),
            (o, o, 2 * z3),
        ]
        return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)

    return Basis(L=6, phi=phi, grad_phi=grad_phi)


@dataclass(frozen=True)
class BarrierMode:
    """How the barrier enters cost and policy.

    "robust": margin uses the live envelope component of the augmented state.
    "plain":  margin ignores the envelope (uses h of the state alone).
    "off":    no barrier terms anywhere.
    """

    kind: str = "robust"

    def __post_init__(self):
        if self.kind not in ("robust", "plain", "off"):
            raise ValueError(f"unknown barrier mode {self.kind!r}")

    @property
    def active(self) -> bool:
        return self.kind != "off"

    @property
    def use_envelope(self) -> bool:
        return self.kind == "robust"


@dataclass(frozen=True)
class LearningConfig:
    """Gains and data for the extrapolated-Bellman-error update laws."""

    k_c: float
    gamma_c: float
    beta: float
    u_bar: float
    R_u: np.ndarray            # (m, m) diagonal control weight
    Q: np.ndarray              # (n, n) PSD state weight, cost x' Q x
    points: np.ndarray         # (N, n) fixed extrapolation locations
    point_envelope: str = "live"   # "live": envelope component tracks t; "zero": fixed 0
    margin_floor: float = 1e-6     # clamp for extrapolation points only
    R_u_inv: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "R_u", np.atleast_2d(np.asarray(self.R_u, float)))
        object.__setattr__(self, "Q", np.atleast_2d(np.asarray(self.Q, float)))
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, float)))
        if self.k_c <= 0 or self.gamma_c <= 0 or self.beta < 0:
            raise ValueError("adaptation and normalization gains must be "
                             "positive, forgetting factor nonnegative")
        if self.u_bar <= 0:
            raise ValueError("saturation level must be positive")
        d = np.diag(self.R_u)
        if np.any(d <= 0) or np.any(self.R_u != np.diag(d)):
            raise ValueError("R_u must be diagonal with positive entries")
        if self.point_envelope not in ("live", "zero"):
            raise ValueError("point_envelope must be 'live' or 'zero'")
        if len(self.points) < 1:
            raise ValueError("need at least one extrapolation point")
        object.__setattr__(self, "R_u_inv", np.linalg.inv(self.R_u))

    @property
    def N(self) -> int:
        return len(self.points)


@dataclass
class CriticState:
    """Adaptive weights and least-squares gain matrix."""

    weights: np.ndarray
    gain: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, float)
        self.gain = np.asarray(self.gain, float)
        if self.gain.shape != (len(self.weights), len(self.weights)):
            raise ValueError("gain matrix shape must match weight count")


# ---------------------------------------------------------------------------
# Saturation penalty


def saturation_penalty(config: LearningConfig, u) -> float:
    """Running-cost penalty whose minimizing feedback respects |u_k| < u_bar.

    Closed form of 2 * int_0^u (u_bar * atanh(v/u_bar))' R dv, integrated
    component-wise:
        2 * sum_k r_k * u_bar * [u_k atanh(u_k/u_bar)
                                 + (u_bar/2) ln(1 - u_k^2/u_bar^2)].
    Validated against adaptive quadrature in the test suite.
    """
    u = np.atleast_1d(np.asarray(u, float))
    ub = config.u_bar
    if np.any(np.abs(u) >= ub):
        raise ValueError(f"saturation penalty undefined at |u| >= {ub}")
    r = np.diag(config.R_u)
    ratio = u / ub
    term = u * np.arctanh(ratio) + (ub / 2.0) * np.log1p(-ratio * ratio)
    return float(2.0 * ub * np.sum(r * term))


def _log_cosh(d):
    a = np.abs(d)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


def _saturation_penalty_preact(config: LearningConfig, preact) -> np.ndarray:
    """Penalty evaluated at u = -u_bar*tanh(preact); stable for large preact.

    Uses atanh(u/u_bar) = -preact and ln(1 - tanh^2) = -2 ln cosh, so the
    closed form never touches the atanh singularity when tanh saturates.
    """
    d = np.asarray(preact, float)
    r = np.diag(config.R_u)
    term = d * np.tanh(d) - _log_cosh(d)
    return 2.0 * config.u_bar ** 2 * np.sum(r * term, axis=-1)


# ---------------------------------------------------------------------------
# Value estimate, policy, Bellman error


def _barrier_terms(spec, mode: BarrierMode, zeta, floor=None):
    zeta = np.asarray(zeta, float)
    if spec is None or not mode.active:
        val = np.zeros(zeta.shape[:-1])
        grad = np.zeros(zeta.shape[:-1] + (zeta.shape[-1],))
        return val, grad
    val, grad = barrier_value_and_gradient(spec, zeta,
                                           use_envelope=mode.use_envelope,
                                           floor=floor)
    return np.asarray(val, float), grad


def value_estimate(basis: Basis, spec: SafetySpec | None, mode: BarrierMode,
                   zeta, weights) -> float:
    """Weighted features plus barrier cost."""
    zeta = np.asarray(zeta, float)
    val, _ = _barrier_terms(spec, mode, zeta)
    return float(np.asarray(basis.phi(zeta), float) @ np.asarray(weights, float)
                 + val)


def _policy_preactivation(model, basis, spec, mode, config, zeta, weights,
                          floor=None):
    """(R^-1 G' / 2u_bar) (grad_phi' W + grad_B'); shape (..., m)."""
    zeta = np.asarray(zeta, float)
    gp = np.asarray(basis.grad_phi(zeta), float)
    _, gB = _barrier_terms(spec, mode, zeta, floor=floor)
    vgrad = np.einsum("...li,l->...i", gp, np.asarray(weights, float)) + gB
    G = augmented_effectiveness(model, zeta)
    return (np.einsum("...i,...im->...m", vgrad, G) @ config.R_u_inv.T
            / (2.0 * config.u_bar))


def saturated_policy(model: SystemModel, basis: Basis, spec: SafetySpec | None,
                     mode: BarrierMode, config: LearningConfig, zeta,
                     weights) -> np.ndarray:
    """Feedback -u_bar * tanh(preactivation); strictly inside the box."""
    pre = _policy_preactivation(model, basis, spec, mode, config, zeta, weights)
    return -config.u_bar * np.tanh(pre)


def bellman_error(model: SystemModel, basis: Basis, spec: SafetySpec | None,
                  mode: BarrierMode, config: LearningConfig, zeta, weights,
                  alpha: float, floor: float | None = None) -> float:
    """Residual of the approximate optimality equation at one augmented state.

    grad(V_hat) (F + G u_hat) + x'Qx + saturation penalty + barrier cost,
    with u_hat the saturated policy for the current weights.
    """
    zeta = np.asarray(zeta, float)
    weights = np.asarray(weights, float)
    gp = np.asarray(basis.grad_phi(zeta), float)
    Bval, gB = _barrier_terms(spec, mode, zeta, floor=floor)
    vgrad = np.einsum("...li,l->...i", gp, weights) + gB
    G = augmented_effectiveness(model, zeta)
    pre = (np.einsum("...i,...im->...m", vgrad, G) @ config.R_u_inv.T
           / (2.0 * config.u_bar))
    u = -config.u_bar * np.tanh(pre)
    F = augmented_drift(model, zeta, alpha)
    flow = F + np.einsum("...im,...m->...i", G, u)
    x = zeta[..., :-1]
    qcost = np.einsum("...i,ij,...j->...", x, config.Q, x)
    out = (np.einsum("...i,...i->...", vgrad, flow) + qcost
           + _saturation_penalty_preact(config, pre) + Bval)
    return float(out) if np.ndim(out) == 0 else out


def extrapolation_terms(model: SystemModel, basis: Basis,
                        spec: SafetySpec | None, mode: BarrierMode,
                        config: LearningConfig, envelope_now: float, weights,
                        alpha: float):
    """Regressors, normalizers and Bellman errors at the extrapolation points.

    Returns (omega, rho, delta): omega is (N, L), rho (N,) with rho >= 1,
    delta (N,).  The envelope component of each point is the live value or a
    fixed zero per the config; margins below the floor are clamped with zero
    barrier gradient, so the terms stay finite on points outside the current
    robustified set.
    """
    pts = config.points
    env = envelope_now if config.point_envelope == "live" else 0.0
    zk = np.concatenate([pts, np.full((len(pts), 1), env)], axis=1)

    gp = np.asarray(basis.grad_phi(zk), float)
    Bval, gB = _barrier_terms(spec, mode, zk, floor=config.margin_floor)
    vgrad = np.einsum("nli,l->ni", gp, np.asarray(weights, float)) + gB
    G = augmented_effectiveness(model, zk)
    pre = np.einsum("ni,nim->nm", vgrad, G) @ config.R_u_inv.T / (2.0 * config.u_bar)
    u = -config.u_bar * np.tanh(pre)
    F = augmented_drift(model, zk, alpha)
    flow = F + np.einsum("nim,nm->ni", G, u)

    omega = np.einsum("nli,ni->nl", gp, flow)
    rho = 1.0 + config.gamma_c * np.einsum("nl,nl->n", omega, omega)
    qcost = np.einsum("ni,ij,nj->n", pts, config.Q, pts)
    delta = (np.einsum("ni,ni->n", vgrad, flow) + qcost
             + _saturation_penalty_preact(config, pre) + Bval)
    return omega, rho, delta


def critic_derivatives(omega, rho, delta, weights, gain,
                       config: LearningConfig):
    """Normalized-gradient weight update and forgetting-factor gain update.

    weights_dot = -(k_c/N) * gain @ sum_k (omega_k/rho_k) delta_k
    gain_dot    = beta*gain - (k_c/N) * gain @ sum_k (omega_k omega_k'/rho_k^2) @ gain
    """
    omega = np.asarray(omega, float)
    rho = np.asarray(rho, float)
    delta = np.asarray(delta, float)
    gain = np.asarray(gain, float)
    N = len(rho)
    w_dot = -(config.k_c / N) * gain @ (omega.T @ (delta / rho))
    normalized = omega / rho[:, None]
    S = normalized.T @ normalized
    gain_dot = config.beta * gain - (config.k_c / N) * gain @ S @ gain
    return w_dot, gain_dot


def excitation_level(omega, rho) -> float:
    """Smallest eigenvalue of the averaged normalized outer-product sum.

    The online-checkable stand-in for a persistence-of-excitation condition;
    a value near zero means some weight directions receive no information.
    """
    omega = np.asarray(omega, float)
    rho = np.asarray(rho, float)
    normalized = omega / rho[:, None]
    S = normalized.T @ normalized / len(rho)
    return float(np.linalg.eigvalsh(S)[0])
