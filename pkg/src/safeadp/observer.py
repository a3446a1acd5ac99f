"""Projection-based nonlinear state observer and its error-bound envelope.

The observer clamps the running estimate onto the state domain before every
evaluation of f and g, injects the output innovation into their arguments, and
adds a linear correction.  The envelope is the exponentially decaying bound on
the estimation error implied by the gain design.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import DomainSet, SystemModel, drift, effectiveness


class ObserverEvaluationError(RuntimeError):
    """Raised when the observer right-hand side becomes non-finite."""


@dataclass(frozen=True)
class ObserverGains:
    """Observer gain set plus derived envelope parameters.

    chi is the initial value of the error envelope,
    ``sqrt(lmax(P)/lmin(P)) * eps0``; the P eigenvalues are computed once here
    and cached.  R_lmi = P @ l3 is the variable the gain verification works
    with (named to avoid clashing with the control-cost weight).
    """

    P: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    l3: np.ndarray
    alpha: float
    eps0: float
    R_lmi: np.ndarray = field(init=False)
    chi: float = field(init=False)
    P_eig_min: float = field(init=False)
    P_eig_max: float = field(init=False)

    def __post_init__(self):
        P = np.asarray(self.P, float)
        object.__setattr__(self, "P", P)
        for attr in ("l1", "l2", "l3"):
            g = np.asarray(getattr(self, attr), float)
            if g.ndim == 1:
                g = g[:, None]
            object.__setattr__(self, attr, g)
        if self.alpha <= 0:
            raise ValueError("decay rate must be positive")
        if self.eps0 <= 0:
            raise ValueError("initial error bound must be positive")
        if not np.allclose(P, P.T, atol=1e-12):
            raise ValueError("P must be symmetric")
        ev = np.linalg.eigvalsh(P)
        if ev[0] <= 0:
            raise ValueError("P must be positive definite")
        object.__setattr__(self, "P_eig_min", float(ev[0]))
        object.__setattr__(self, "P_eig_max", float(ev[-1]))
        object.__setattr__(self, "chi",
                           float(np.sqrt(ev[-1] / ev[0]) * self.eps0))
        object.__setattr__(self, "R_lmi", P @ self.l3)

    def injection_norms(self, C) -> tuple[float, float]:
        """Induced 2-norms of l1 C and l2 C (gain-design constraint is <= 1)."""
        C = np.asarray(C, float)
        return (float(np.linalg.norm(self.l1 @ C, 2)),
                float(np.linalg.norm(self.l2 @ C, 2)))


def project(domain: DomainSet, x_hat) -> np.ndarray:
    """Nearest point of the domain to x_hat (identity inside)."""
    return domain.project(x_hat)


def error_envelope(gains: ObserverGains, t) -> np.ndarray | float:
    """Decaying bound on the estimation error norm; equals chi at t = 0."""
    t = np.asarray(t, float)
    out = gains.chi * np.exp(-gains.alpha * t)
    return float(out) if out.ndim == 0 else out


def observer_rhs(model: SystemModel, gains: ObserverGains, x_hat, y, u) -> np.ndarray:
    """Estimate derivative: f and g evaluated at innovation-shifted projections,
    plus the linear correction."""
    x_hat = np.asarray(x_hat, float)
    y = np.atleast_1d(np.asarray(y, float))
    u = np.atleast_1d(np.asarray(u, float))
    pr = project(model.domain, x_hat)
    innov = y - model.C @ pr
    a1 = pr + gains.l1 @ innov
    a2 = pr + gains.l2 @ innov
    out = drift(model, a1) + effectiveness(model, a2) @ u + gains.l3 @ innov
    if not np.all(np.isfinite(out)):
        raise ObserverEvaluationError("observer right-hand side is non-finite")
    return out
