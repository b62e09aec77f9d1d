"""Closed-loop simulation of inventories, supply generator and pricing controller.

Plant ``x_dot = B lam + p``, generator ``w_dot = s(w)`` and controller prices
``zeta`` are stacked into one state ``[x, zeta, w]`` and integrated with
fixed-step RK4.  Supply resets are snapped to step boundaries and applied
after the step that reaches them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .control import (
    ControllerConfig,
    feedback_output,
    feedback_rhs,
    feedforward_output,
    feedforward_rhs,
    residual_z,
)
from .costs import CostVector
from .exosystem import HarmonicExo, Reset
from .network import Network
from .optimizer import ConvergenceError, solve_static

CONTROLLERS = ("feedback", "feedforward")


def step_rk4(rhs: Callable[[np.ndarray], np.ndarray], y, dt: float) -> np.ndarray:
    if not dt > 0:
        raise ValueError(f"step size must be positive, got {dt}")
    y = np.asarray(y, dtype=float)
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def lyapunov_metrics(net: Network, costs, x, zeta, p, x_avg: float):
    """Storage functions ``V = |x - x_avg|^2 / 2``, ``W = |Z|^2 / 2`` and ``U = V + W``."""
    e = np.asarray(x, dtype=float) - x_avg
    Z = residual_z(net, costs, zeta, p)
    V = 0.5 * float(e @ e)
    W = 0.5 * float(Z @ Z)
    return V, W, V + W


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    zeta: np.ndarray
    lam: np.ndarray
    p: np.ndarray
    V: np.ndarray
    W: np.ndarray
    U: np.ndarray
    bal_res: np.ndarray
    opt_gap: np.ndarray
    lam_opt: np.ndarray
    segment: np.ndarray  # index of the reset-free interval each sample belongs to
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    def header(self) -> list[str]:
        n, m = self.x.shape[1], self.lam.shape[1]
        return (
            ["t"]
            + [f"x{i + 1}" for i in range(n)]
            + [f"zeta{i + 1}" for i in range(n)]
            + [f"lambda{k + 1}" for k in range(m)]
            + [f"p{i + 1}" for i in range(n)]
            + ["V", "W", "U", "bal_res", "opt_gap"]
        )

    def rows(self):
        for j in range(len(self.t)):
            yield (
                [self.t[j]]
                + list(self.x[j])
                + list(self.zeta[j])
                + list(self.lam[j])
                + list(self.p[j])
                + [self.V[j], self.W[j], self.U[j], self.bal_res[j], self.opt_gap[j]]
            )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.header())
            for row in self.rows():
                writer.writerow([_fmt(v) for v in row])

    def segments(self):
        """Yield index arrays of the reset-free intervals."""
        for s in np.unique(self.segment):
            yield np.flatnonzero(self.segment == s)


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def snap_resets(exo: HarmonicExo, dt: float) -> HarmonicExo:
    resets = tuple(Reset(round(r.time / dt) * dt, r.phases) for r in exo.resets)
    return replace(exo, resets=resets)


def initial_prices(net: Network, costs, exo: HarmonicExo, policy: str, cfg: ControllerConfig, w0=None) -> np.ndarray:
    """``zeros``: constant prices with mean ``cfg.mean_pin``; ``optimal``: static optimum shifted likewise."""
    n = net.node_count
    if policy == "zeros":
        zeta = np.zeros(n)
    elif policy == "optimal":
        w0 = exo.initial_state() if w0 is None else w0
        zeta = solve_static(net, costs, exo.output(w0)).prices
    else:
        raise ValueError(f"unknown initialisation policy {policy!r}")
    return zeta - zeta.mean() + cfg.mean_pin / n


def run_closed_loop(
    net: Network,
    costs,
    exo: HarmonicExo,
    cfg: ControllerConfig,
    x0,
    zeta0,
    t_end: float,
    dt: float = 1e-3,
    record_every: float = 1e-2,
    controller: str = "feedback",
    reference: bool = True,
) -> Trajectory:
    """Integrate the closed loop and record states and metrics.

    With ``reference`` set, the static optimum at each recorded time is
    computed (warm started) to fill ``opt_gap``; a failed solve leaves ``nan``.
    """
    if controller not in CONTROLLERS:
        raise ValueError(f"controller must be one of {CONTROLLERS}, got {controller!r}")
    if not t_end > 0 or not dt > 0:
        raise ValueError("t_end and dt must be positive")
    steps = int(round(t_end / dt))
    every = int(round(record_every / dt))
    if every < 1 or not math.isclose(every * dt, record_every, rel_tol=1e-9):
        raise ValueError(f"record interval {record_every} is not a multiple of the step {dt}")

    costs = costs if isinstance(costs, CostVector) else CostVector(costs)
    exo = snap_resets(exo, dt)
    B = net.incidence
    n = net.node_count
    x0 = np.asarray(x0, dtype=float)
    zeta0 = np.asarray(zeta0, dtype=float)
    x_avg = float(x0.mean())

    if controller == "feedback":

        def flows(x, zeta):
            return feedback_output(net, costs, zeta, x)

        def price_rate(x, zeta, w):
            return feedback_rhs(net, costs, exo, cfg, zeta, x, w)

    else:

        def flows(x, zeta):
            return feedforward_output(net, costs, zeta)

        def price_rate(x, zeta, w):
            return feedforward_rhs(net, costs, exo, zeta, w)

    def rhs(y):
        x, zeta, w = y[:n], y[n : 2 * n], y[2 * n :]
        xdot = B @ flows(x, zeta) + exo.output(w)
        return np.concatenate([xdot, price_rate(x, zeta, w), exo.derivative(w)])

    records = {k: [] for k in ("t", "x", "zeta", "lam", "p", "V", "W", "U", "bal_res", "opt_gap", "lam_opt", "segment")}
    warm = None
    segment = 0

    def record(t, y):
        nonlocal warm
        x, zeta, w = y[:n], y[n : 2 * n], y[2 * n :]
        p = exo.output(w)
        lam = flows(x, zeta)
        V, W, U = lyapunov_metrics(net, costs, x, zeta, p, x_avg)
        lam_opt = np.full(net.edge_count, np.nan)
        if reference:
            try:
                sol = solve_static(net, costs, p, zeta0=warm)
                warm = sol.prices
                lam_opt = sol.flow
            except ConvergenceError:
                warm = None
        for key, val in (
            ("t", t), ("x", x), ("zeta", zeta), ("lam", lam), ("p", p), ("V", V), ("W", W), ("U", U),
            ("bal_res", float(np.abs(B.T @ x).max())),
            ("opt_gap", float(np.abs(lam - lam_opt).max())),
            ("lam_opt", lam_opt), ("segment", segment),
        ):
            records[key].append(np.array(val, copy=True) if isinstance(val, np.ndarray) else val)

    y = np.concatenate([x0, zeta0, exo.initial_state()])
    record(0.0, y)
    applied_times = []
    for i in range(1, steps + 1):
        y = step_rk4(rhs, y, dt)
        w, applied = exo.apply_resets(y[2 * n :], (i - 1) * dt, i * dt)
        if applied:
            y = np.concatenate([y[: 2 * n], w])
            segment += 1
            applied_times.extend(rr.time for rr in applied)
        if i % every == 0:
            record(i * dt, y)

    arrays = {k: np.array(v) for k, v in records.items()}
    metadata = {
        "controller": controller,
        "gain": cfg.gain,
        "dt": dt,
        "record_every": record_every,
        "t_end": steps * dt,
        "reset_times": applied_times,
        "x_avg": x_avg,
    }
    return Trajectory(metadata=metadata, **arrays)


def fit_decay_rate(traj: Trajectory, floor: float = 1e-9) -> float:
    """Least-squares slope of ``-log U`` over the first reset-free interval, above ``floor``."""
    idx = next(iter(traj.segments()))
    t, U = traj.t[idx], traj.U[idx]
    keep = U > floor
    if keep.sum() < 2:
        return math.nan
    slope = np.polyfit(t[keep], np.log(U[keep]), 1)[0]
    return float(-slope)
