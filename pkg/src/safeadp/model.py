"""Plant definition: control-affine dynamics, Jacobian bound data, state domain.

The plant is ``xdot = f(x) + g(x) u`` with linear output ``y = C x``.  Bound
matrices ``Kf1 <= df/dx <= Kf2`` and ``Kg1 <= d(g u)/dx <= Kg2`` (element-wise,
over the stated domain box and control box) are user-supplied data; they are
consumed by the LMI machinery and can be audited against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class ModelEvaluationError(RuntimeError):
    """Raised when f or g produces a non-finite value."""


class SaturationError(ValueError):
    """Raised when a control input lies outside the saturation box."""


@dataclass(frozen=True)
class DomainSet:
    """Closed convex set with a closed-form nearest-point projection.

    kind "box": axis-aligned box ``center +- halfwidths``.
    kind "ball": Euclidean ball of given radius around center.
    """

    kind: str
    center: np.ndarray
    halfwidths: np.ndarray | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("box", "ball"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        object.__setattr__(self, "center", np.asarray(self.center, float))
        if self.kind == "box":
            if self.halfwidths is None:
                raise ValueError("box domain needs halfwidths")
            hw = np.asarray(self.halfwidths, float)
            if np.any(hw <= 0):
                raise ValueError("box halfwidths must be positive")
            object.__setattr__(self, "halfwidths", hw)
        else:
            if self.radius is None or self.radius <= 0:
                raise ValueError("ball domain needs a positive radius")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, x) -> np.ndarray:
        """Nearest point in the set (per-coordinate clamp / radial scaling)."""
        x = np.asarray(x, float)
        if self.kind == "box":
            lo = self.center - self.halfwidths
            hi = self.center + self.halfwidths
            return np.clip(x, lo, hi)
        d = x - self.center
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.where(r > self.radius, self.radius / np.maximum(r, 1e-300), 1.0)
        return self.center + d * scale

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, float)
        if self.kind == "box":
            return bool(np.all(np.abs(x - self.center) <= self.halfwidths + tol))
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)


@dataclass(frozen=True)
class AugmentedState:
    """Plant state (or estimate) together with the robustifying-term value."""

    x: np.ndarray
    xi: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, float))
        if self.xi < 0:
            raise ValueError("robustifying term must be nonnegative")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, [self.xi]])

    @classmethod
    def from_vector(cls, zeta) -> "AugmentedState":
        zeta = np.asarray(zeta, float)
        return cls(zeta[:-1], float(zeta[-1]))


@dataclass(frozen=True)
class SystemModel:
    """Control-affine plant with output matrix and Jacobian bound data.

    ``f`` and ``g`` must broadcast over leading axes: f maps (..., n) to
    (..., n) and g maps (..., n) to (..., n, m).
    """

    n: int
    m: int
    q: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    C: np.ndarray
    Kf1: np.ndarray
    Kf2: np.ndarray
    Kg1: np.ndarray
    Kg2: np.ndarray
    u_bar: float
    domain: DomainSet
    name: str = "custom"

    def __post_init__(self):
        for attr in ("C", "Kf1", "Kf2", "Kg1", "Kg2"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), float))
        if self.C.shape != (self.q, self.n):
            raise ValueError(f"C must be {(self.q, self.n)}, got {self.C.shape}")
        for attr in ("Kf1", "Kf2", "Kg1", "Kg2"):
            if getattr(self, attr).shape != (self.n, self.n):
                raise ValueError(f"{attr} must be {(self.n, self.n)}")
        if np.any(self.Kf1 > self.Kf2) or np.any(self.Kg1 > self.Kg2):
            raise ValueError("lower Jacobian bounds exceed upper bounds")
        if self.u_bar <= 0:
            raise ValueError("saturation level must be positive")
        if self.domain.dim != self.n:
            raise ValueError("domain dimension does not match state dimension")


def drift(model: SystemModel, x) -> np.ndarray:
    """Evaluate the drift f(x)."""
    out = np.asarray(model.f(np.asarray(x, float)), float)
    if not np.all(np.isfinite(out)):
        raise ModelEvaluationError(f"drift produced non-finite values at x={x}")
    return out


def effectiveness(model: SystemModel, x) -> np.ndarray:
    """Evaluate the control-effectiveness matrix g(x), shape (..., n, m)."""
    out = np.asarray(model.g(np.asarray(x, float)), float)
    if not np.all(np.isfinite(out)):
        raise ModelEvaluationError(f"effectiveness produced non-finite values at x={x}")
    return out


def check_saturation(model: SystemModel, u) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, float))
    if np.any(np.abs(u) > model.u_bar):
        raise SaturationError(f"control {u} outside saturation box |u|<={model.u_bar}")
    return u


def augmented_drift(model: SystemModel, zeta, alpha: float) -> np.ndarray:
    """Drift of the (x, envelope) augmentation: last component decays at rate alpha."""
    zeta = np.asarray(zeta, float)
    fx = drift(model, zeta[..., :-1])
    return np.concatenate([fx, -alpha * zeta[..., -1:]], axis=-1)


def augmented_effectiveness(model: SystemModel, zeta) -> np.ndarray:
    """Effectiveness of the augmentation: zero row for the envelope component."""
    zeta = np.asarray(zeta, float)
    gx = effectiveness(model, zeta[..., :-1])
    zrow = np.zeros(zeta.shape[:-1] + (1, model.m))
    return np.concatenate([gx, zrow], axis=-2)


def augmented_dynamics(model: SystemModel, zeta, u, alpha: float) -> np.ndarray:
    """Right-hand side of the augmented system, affine in u."""
    u = check_saturation(model, u)
    F = augmented_drift(model, zeta, alpha)
    G = augmented_effectiveness(model, zeta)
    return F + G @ u


def audit_jacobian_bounds(model: SystemModel, n_grid: int = 21, n_u: int = 5,
                          tol: float = 1e-6, fd_step: float = 1e-6) -> dict:
    """Check the supplied bound matrices against finite-difference Jacobians.

    Samples an n_grid x ... grid over the domain box and control values on a
    grid over [-u_bar, u_bar]^m, central-differences f and g*u, and reports the
    worst element-wise margin against [Kf1, Kf2] / [Kg1, Kg2].
    """
    dom = model.domain
    if dom.kind == "box":
        axes = [np.linspace(c - h, c + h, n_grid)
                for c, h in zip(dom.center, dom.halfwidths)]
    else:
        axes = [np.linspace(c - dom.radius, c + dom.radius, n_grid) for c in dom.center]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    if dom.kind == "ball":
        pts = pts[np.linalg.norm(pts - dom.center, axis=1) <= dom.radius]

    eye = np.eye(model.n)
    jac_f = np.zeros((len(pts), model.n, model.n))
    for j in range(model.n):
        step = fd_step * eye[j]
        jac_f[:, :, j] = (drift(model, pts + step) - drift(model, pts - step)) / (2 * fd_step)
    f_lo = jac_f.min(axis=0)
    f_hi = jac_f.max(axis=0)

    u_axes = [np.linspace(-model.u_bar, model.u_bar, n_u) for _ in range(model.m)]
    u_mesh = np.meshgrid(*u_axes, indexing="ij")
    u_vals = np.stack([m.ravel() for m in u_mesh], axis=1)
    g_lo = np.full((model.n, model.n), np.inf)
    g_hi = np.full((model.n, model.n), -np.inf)
    for u in u_vals:
        for j in range(model.n):
            step = fd_step * eye[j]
            gu_p = effectiveness(model, pts + step) @ u
            gu_m = effectiveness(model, pts - step) @ u
            col = (gu_p - gu_m) / (2 * fd_step)
            g_lo[:, j] = np.minimum(g_lo[:, j], col.min(axis=0))
            g_hi[:, j] = np.maximum(g_hi[:, j], col.max(axis=0))

    f_margin = min(float((f_lo - model.Kf1).min()), float((model.Kf2 - f_hi).min()))
    g_margin = min(float((g_lo - model.Kg1).min()), float((model.Kg2 - g_hi).min()))
    return {
        "n_points": int(len(pts)),
        "n_controls": int(len(u_vals)),
        "f_jacobian_min": f_lo.tolist(),
        "f_jacobian_max": f_hi.tolist(),
        "gu_jacobian_min": g_lo.tolist(),
        "gu_jacobian_max": g_hi.tolist(),
        "f_margin": f_margin,
        "g_margin": g_margin,
        "f_ok": bool(f_margin >= -tol),
        "g_ok": bool(g_margin >= -tol),
        "ok": bool(f_margin >= -tol and g_margin >= -tol),
    }


# ---------------------------------------------------------------------------
# Built-in models


def _sin_amp_peak() -> float:
    # extreme value of sin(w)*(cos(w)+2) over a full period
    c = (np.sqrt(3.0) - 1.0) / 2.0
    return float(np.sqrt(1.0 - c * c) * (c + 2.0))


def vamvoudakis2d(u_bar: float = 10.0, box_halfwidth: float = 3.0) -> SystemModel:
    """Two-state benchmark plant with cos-modulated actuation on the second state.

    Only the second state is measured.  Jacobian bounds are the analytic
    extremes of df/dx and d(g u)/dx over the stated box and |u| <= u_bar,
    padded slightly outward.
    """

    def f(x):
        x = np.asarray(x, float)
        x1, x2 = x[..., 0], x[..., 1]
        c = np.cos(2.0 * x1) + 2.0
        return np.stack([-x1 + x2, -0.5 * x1 - 0.5 * x2 * (1.0 - c * c)], axis=-1)

    def g(x):
        x = np.asarray(x, float)
        x1 = x[..., 0]
        zero = np.zeros_like(x1)
        return np.stack([zero, np.cos(2.0 * x1) + 2.0], axis=-1)[..., None]

    pad = 1e-9
    m = 2.0 * box_halfwidth * _sin_amp_peak()
    Kf1 = np.array([[-1.0, 1.0], [-0.5 - m - pad, 0.0 - pad]])
    Kf2 = np.array([[-1.0, 1.0], [-0.5 + m + pad, 4.0 + pad]])
    Kg1 = np.array([[0.0, 0.0], [-2.0 * u_bar - pad, 0.0]])
    Kg2 = np.array([[0.0, 0.0], [2.0 * u_bar + pad, 0.0]])
    domain = DomainSet(kind="box", center=np.zeros(2),
                       halfwidths=np.full(2, box_halfwidth))
    return SystemModel(n=2, m=1, q=1, f=f, g=g, C=np.array([[0.0, 1.0]]),
                       Kf1=Kf1, Kf2=Kf2, Kg1=Kg1, Kg2=Kg2,
                       u_bar=u_bar, domain=domain, name="vamvoudakis2d")


MODEL_REGISTRY: dict[str, Callable[..., SystemModel]] = {
    "vamvoudakis2d": vamvoudakis2d,
}
