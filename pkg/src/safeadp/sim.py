"""Deterministic fixed-step closed-loop integration with monitors and logging.

One run couples the plant, the projection observer, and the critic update
laws in a single RK4-integrated state (x, x_hat, weights, gain matrix).  The
error envelope is evaluated in closed form at stage times, and the control is
recomputed at every RK4 stage from the stage estimate.  Identical configs
produce bit-identical logs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .critic import (Basis, BarrierMode, LearningConfig, bellman_error,
                     critic_derivatives, excitation_level,
                     extrapolation_terms, saturated_policy)
from .model import SystemModel, drift, effectiveness
from .observer import ObserverGains, error_envelope, observer_rhs
from .safety import BarrierDomainError, SafetySpec, monitor_safety

CONTROLLER_MODES = ("rlcbf", "lcbf", "none")
_MODE_MAP = {"rlcbf": "robust", "lcbf": "plain", "none": "off"}

EPS0_SLACK = 1.02   # relative slack on the initial-error bound check


@dataclass(frozen=True)
class SimConfig:
    dt: float
    T: float
    x0: np.ndarray
    x_hat0: np.ndarray
    Wc0: np.ndarray
    Gamma0: np.ndarray
    controller_mode: str = "rlcbf"
    monitor_action: str = "warn"
    observer_enabled: bool = True
    log_every: int = 1
    gain_floor: float = 1e-8
    excitation_warn: float = 0.0
    ultimate_bound_x: float | None = None
    ultimate_bound_err: float | None = None

    def __post_init__(self):
        for attr in ("x0", "x_hat0", "Wc0"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), float))
        object.__setattr__(self, "Gamma0", np.atleast_2d(np.asarray(self.Gamma0, float)))
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.T < 0:
            raise ValueError("horizon must be nonnegative")
        if self.T > 0 and self.T <= self.dt:
            raise ValueError("horizon must exceed the step size")
        if self.controller_mode not in CONTROLLER_MODES:
            raise ValueError(f"unknown controller mode {self.controller_mode!r}")
        if self.monitor_action not in ("warn", "abort"):
            raise ValueError("monitor_action must be 'warn' or 'abort'")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


@dataclass(frozen=True)
class ControlProblem:
    """Everything a closed-loop run needs."""

    model: SystemModel
    gains: ObserverGains
    basis: Basis
    learn: LearningConfig
    spec: SafetySpec | None
    sim: SimConfig

    def barrier_mode(self) -> BarrierMode:
        return BarrierMode(_MODE_MAP[self.sim.controller_mode])


class TrajectoryLog:
    """Fixed-schema per-step record of a run."""

    def __init__(self, n: int, m: int, L: int, capacity: int):
        self.n, self.m, self.L = n, m, L
        self.t = np.zeros(capacity)
        self.x = np.zeros((capacity, n))
        self.x_hat = np.zeros((capacity, n))
        self.envelope = np.zeros(capacity)
        self.u = np.zeros((capacity, m))
        self.weights = np.zeros((capacity, L))
        self.delta = np.zeros(capacity)
        self.h = np.zeros(capacity)
        self.h_robust = np.zeros(capacity)
        self.err = np.zeros(capacity)
        self.gain_min = np.zeros(capacity)
        self.gain_max = np.zeros(capacity)
        self.gain_asym = np.zeros(capacity)
        self.excitation = np.zeros(capacity)
        self.size = 0

    def append(self, **kw):
        i = self.size
        for key, val in kw.items():
            getattr(self, key)[i] = val
        self.size += 1

    def truncate(self):
        for name in ("t", "x", "x_hat", "envelope", "u", "weights", "delta",
                     "h", "h_robust", "err", "gain_min", "gain_max",
                     "gain_asym", "excitation"):
            setattr(self, name, getattr(self, name)[:self.size])

    def columns(self) -> list[str]:
        cols = ["t"]
        cols += [f"x{i+1}" for i in range(self.n)]
        cols += [f"xhat{i+1}" for i in range(self.n)]
        cols += ["envelope"]
        cols += [f"u{i+1}" for i in range(self.m)]
        cols += [f"w{i+1}" for i in range(self.L)]
        cols += ["bellman_error", "h", "h_robust", "err_norm",
                 "gain_eig_min", "gain_eig_max", "gain_asym", "excitation"]
        return cols

    def rows(self):
        for i in range(self.size):
            row = [self.t[i], *self.x[i], *self.x_hat[i], self.envelope[i],
                   *self.u[i], *self.weights[i], self.delta[i], self.h[i],
                   self.h_robust[i], self.err[i], self.gain_min[i],
                   self.gain_max[i], self.gain_asym[i], self.excitation[i]]
            yield row

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            f.write(",".join(self.columns()) + "\n")
            for row in self.rows():
                f.write(",".join(repr(float(v)) for v in row) + "\n")


@dataclass
class RunSummary:
    terminal_x: list
    terminal_x_hat: list
    terminal_weights: list
    terminal_err: float
    min_h: float
    min_h_robust: float
    max_err_envelope_ratio: float
    gain_eig_min: float
    gain_eig_max: float
    gain_asym_max: float
    excitation_min: float
    steps: int
    dt: float
    T: float
    controller_mode: str
    monitor_events: list = field(default_factory=list)
    abort_reason: str | None = None
    certificate_file: str | None = None

    @property
    def ok(self) -> bool:
        return self.abort_reason is None

    def to_json_dict(self) -> dict:
        d = dict(self.__dict__)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def _floor_gain(G: np.ndarray, floor: float) -> tuple[np.ndarray, float]:
    """Symmetrize, record the asymmetry drift, clip eigenvalues at the floor."""
    asym = float(np.max(np.abs(G - G.T))) if G.size else 0.0
    G = 0.5 * (G + G.T)
    ev, V = np.linalg.eigh(G)
    if ev[0] < floor:
        G = (V * np.maximum(ev, floor)) @ V.T
        G = 0.5 * (G + G.T)
    return G, asym


def _make_rhs(problem: ControlProblem):
    """Coupled right-hand side; also returns the stage control and regressors."""
    model, gains, basis, learn = (problem.model, problem.gains, problem.basis,
                                  problem.learn)
    spec, cfg = problem.spec, problem.sim
    mode = problem.barrier_mode()
    alpha = gains.alpha

    def rhs(tau, x, xh, W, G):
        env = error_envelope(gains, tau)
        est = xh if cfg.observer_enabled else x
        zeta_hat = np.concatenate([est, [env]])
        u = saturated_policy(model, basis, spec, mode, learn, zeta_hat, W)
        x_dot = drift(model, x) + effectiveness(model, x) @ u
        if cfg.observer_enabled:
            y = model.C @ x
            xh_dot = observer_rhs(model, gains, xh, y, u)
        else:
            xh_dot = x_dot
        omega, rho, delta = extrapolation_terms(model, basis, spec, mode,
                                                learn, env, W, alpha)
        w_dot, g_dot = critic_derivatives(omega, rho, delta, W, G, learn)
        return (x_dot, xh_dot, w_dot, g_dot), (u, omega, rho)

    return rhs


def _rk4_step(rhs, dt: float, gain_floor: float, t: float, x, x_hat, weights,
              gain, k1=None):
    if k1 is None:
        k1, _ = rhs(t, x, x_hat, weights, gain)
    h = dt / 2.0
    k2, _ = rhs(t + h, x + h * k1[0], x_hat + h * k1[1],
                weights + h * k1[2], gain + h * k1[3])
    k3, _ = rhs(t + h, x + h * k2[0], x_hat + h * k2[1],
                weights + h * k2[2], gain + h * k2[3])
    k4, _ = rhs(t + dt, x + dt * k3[0], x_hat + dt * k3[1],
                weights + dt * k3[2], gain + dt * k3[3])
    x_new = x + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    xh_new = x_hat + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    w_new = weights + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    g_new = gain + dt / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    g_new, asym = _floor_gain(g_new, gain_floor)
    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(xh_new))
            and np.all(np.isfinite(w_new)) and np.all(np.isfinite(g_new))):
        raise FloatingPointError(f"integration diverged at t={t:.6g}")
    return x_new, xh_new, w_new, g_new, asym


def step(problem: ControlProblem, t: float, x, x_hat, weights, gain):
    """One RK4 step of the coupled plant/observer/critic state.

    The control is recomputed at every stage from the stage estimate and the
    closed-form envelope at the stage time.
    """
    rhs = _make_rhs(problem)
    return _rk4_step(rhs, problem.sim.dt, problem.sim.gain_floor,
                     t, x, x_hat, weights, gain)


def run(problem: ControlProblem) -> tuple[TrajectoryLog, RunSummary]:
    """Integrate to the horizon, returning the full log and a summary.

    Monitor violations are recorded as events; with monitor_action "abort"
    the run stops at the offending step.  A barrier-domain violation along
    the estimate trajectory always stops the run with a report.
    """
    model, gains, basis, learn = (problem.model, problem.gains, problem.basis,
                                  problem.learn)
    spec, cfg = problem.spec, problem.sim
    mode = problem.barrier_mode()
    alpha = gains.alpha

    err0 = float(np.linalg.norm(cfg.x0 - cfg.x_hat0))
    events: list[dict] = []
    if cfg.observer_enabled and err0 > gains.eps0:
        if err0 > gains.eps0 * EPS0_SLACK:
            raise ValueError(
                f"initial estimate error {err0:.6g} exceeds eps0={gains.eps0}")
        events.append({"monitor": "initial_error_bound", "first_t": 0.0,
                       "last_t": 0.0, "count": 1,
                       "detail": f"||x0-xhat0||={err0:.6g} > eps0={gains.eps0}"})

    steps = int(round(cfg.T / cfg.dt)) if cfg.T > 0 else 0
    n_log = steps // cfg.log_every + 1
    log = TrajectoryLog(model.n, model.m, basis.L, n_log)

    x = cfg.x0.copy()
    xh = cfg.x_hat0.copy() if cfg.observer_enabled else cfg.x0.copy()
    W = cfg.Wc0.copy()
    G, _ = _floor_gain(cfg.Gamma0.copy(), cfg.gain_floor)
    asym_last = 0.0
    abort_reason = None
    rhs = _make_rhs(problem)

    tally: dict[str, dict] = {}

    def emit(name, t, detail) -> bool:
        rec = tally.get(name)
        if rec is None:
            rec = {"monitor": name, "first_t": float(t), "last_t": float(t),
                   "count": 1, "detail": detail}
            tally[name] = rec
            events.append(rec)
        else:
            rec["last_t"] = float(t)
            rec["count"] += 1
        return cfg.monitor_action == "abort"

    k = 0
    while True:
        t = k * cfg.dt
        env = error_envelope(gains, t)
        est = xh if cfg.observer_enabled else x
        zeta_hat = np.concatenate([est, [env]])
        try:
            k1, (u, omega, rho) = rhs(t, x, xh, W, G)
            delta = bellman_error(model, basis, spec, mode, learn, zeta_hat, W,
                                  alpha)
        except BarrierDomainError as exc:
            abort_reason = f"barrier_domain: {exc}"
            break
        excite = excitation_level(omega, rho)
        gev = np.linalg.eigvalsh(G)
        err = float(np.linalg.norm(x - xh))
        hx = float(spec.h(x)) if spec is not None else float("nan")
        hr = (float(spec.h(est)) - spec.ell * env) if spec is not None else float("nan")

        if k % cfg.log_every == 0:
            log.append(t=t, x=x, x_hat=xh, envelope=env, u=u, weights=W,
                       delta=delta, h=hx, h_robust=hr, err=err,
                       gain_min=gev[0], gain_max=gev[-1], gain_asym=asym_last,
                       excitation=excite)

        stop = False
        if cfg.observer_enabled and err > env * (1.0 + 1e-9):
            stop = emit("error_envelope", t, f"err={err:.6g} > envelope={env:.6g}")
        if spec is not None and hx < 0 and not stop:
            stop = emit("safety_h", t, f"h(x)={hx:.6g} < 0")
        if np.any(np.abs(u) >= model.u_bar) and not stop:
            stop = emit("saturation", t, f"|u|={np.max(np.abs(u)):.6g}")
        if excite < cfg.excitation_warn and not stop:
            emit("excitation", t, f"excitation={excite:.3e}")  # warn-only
        if stop:
            abort_reason = f"monitor_abort at t={t:.6g}"
            break
        if k >= steps:
            break
        try:
            x, xh, W, G, asym_last = _rk4_step(rhs, cfg.dt, cfg.gain_floor,
                                               t, x, xh, W, G, k1=k1)
        except (BarrierDomainError, FloatingPointError) as exc:
            abort_reason = f"integration_abort: {exc}"
            break
        k += 1

    if abort_reason is None:
        term_x = float(np.linalg.norm(x))
        if cfg.ultimate_bound_x is not None and term_x > cfg.ultimate_bound_x:
            events.append({"monitor": "ultimate_bound_x", "first_t": float(cfg.T),
                           "last_t": float(cfg.T), "count": 1,
                           "detail": f"|x(T)|={term_x:.6g} > {cfg.ultimate_bound_x}"})
        term_e = float(np.linalg.norm(x - xh))
        if (cfg.ultimate_bound_err is not None
                and term_e > cfg.ultimate_bound_err):
            events.append({"monitor": "ultimate_bound_err", "first_t": float(cfg.T),
                           "last_t": float(cfg.T), "count": 1,
                           "detail": f"|err(T)|={term_e:.6g} > {cfg.ultimate_bound_err}"})

    log.truncate()
    ratio = (log.err / np.maximum(log.envelope, 1e-300)) if log.size else np.array([0.0])
    summary = RunSummary(
        terminal_x=[float(v) for v in x],
        terminal_x_hat=[float(v) for v in xh],
        terminal_weights=[float(v) for v in W],
        terminal_err=float(np.linalg.norm(x - xh)),
        min_h=float(np.min(log.h)) if log.size else float("nan"),
        min_h_robust=float(np.min(log.h_robust)) if log.size else float("nan"),
        max_err_envelope_ratio=float(np.max(ratio)),
        gain_eig_min=float(np.min(log.gain_min)) if log.size else float("nan"),
        gain_eig_max=float(np.max(log.gain_max)) if log.size else float("nan"),
        gain_asym_max=float(np.max(log.gain_asym)) if log.size else float("nan"),
        excitation_min=float(np.min(log.excitation)) if log.size else float("nan"),
        steps=int(k),
        dt=cfg.dt, T=cfg.T, controller_mode=cfg.controller_mode,
        monitor_events=events, abort_reason=abort_reason)
    return log, summary


def safety_report(problem: ControlProblem, log: TrajectoryLog):
    if problem.spec is None or log.size == 0:
        return None
    return monitor_safety(problem.spec, log.t, log.x, log.x_hat, log.envelope)
