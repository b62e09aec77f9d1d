"""Harmonic supply/demand generator.

Each channel ``k`` is a unit phasor ``(s_k, c_k) = (sin(phi_k t + rho_k),
cos(phi_k t + rho_k))`` rotating at angular frequency ``phi_k``.  The node
supply is ``p = M (kappa * s)`` with a mixing matrix ``M`` whose columns sum to
zero, so supply is always balanced.  The state vector is ``w = [s, c]``.

Phase changes are scheduled as resets: at a reset time the phasors are
re-initialised with the new phases, which keeps ``w_dot = s(w)`` smooth in
between.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BALANCE_TOL = 1e-12


@dataclass(frozen=True)
class Reset:
    time: float
    phases: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class HarmonicExo:
    amplitudes: np.ndarray
    frequencies: np.ndarray
    phases: np.ndarray
    mixing: np.ndarray
    resets: tuple[Reset, ...] = field(default=())

    def __post_init__(self):
        for name in ("amplitudes", "frequencies", "phases"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        mixing = np.atleast_2d(np.asarray(self.mixing, dtype=float))
        mixing.flags.writeable = False
        object.__setattr__(self, "mixing", mixing)
        c = len(self.amplitudes)
        if not (len(self.frequencies) == len(self.phases) == c):
            raise ValueError("amplitudes, frequencies and phases must have equal length")
        if mixing.shape[1] != c:
            raise ValueError(f"mixing has {mixing.shape[1]} columns for {c} channels")
        col_sums = mixing.sum(axis=0)
        if np.any(np.abs(col_sums) > BALANCE_TOL):
            raise ValueError(f"mixing columns must sum to zero (balanced supply), got sums {col_sums}")
        resets = tuple(r if isinstance(r, Reset) else Reset(float(r[0]), tuple(r[1])) for r in self.resets)
        for r in resets:
            if len(r.phases) != c:
                raise ValueError(f"reset at t={r.time} gives {len(r.phases)} phases for {c} channels")
        if any(b.time < a.time for a, b in zip(resets, resets[1:])):
            raise ValueError("resets must be sorted by time")
        object.__setattr__(self, "resets", resets)

    @property
    def channel_count(self) -> int:
        return len(self.amplitudes)

    @property
    def node_count(self) -> int:
        return self.mixing.shape[0]

    def phasor(self, t: float, phases=None) -> np.ndarray:
        rho = self.phases if phases is None else np.asarray(phases, dtype=float)
        angle = self.frequencies * t + rho
        return np.concatenate([np.sin(angle), np.cos(angle)])

    def initial_state(self) -> np.ndarray:
        return self.phasor(0.0)

    def split(self, w):
        w = np.asarray(w, dtype=float)
        c = self.channel_count
        return w[:c], w[c:]

    def derivative(self, w) -> np.ndarray:
        s, c = self.split(w)
        return np.concatenate([self.frequencies * c, -self.frequencies * s])

    def output(self, w) -> np.ndarray:
        s, _ = self.split(w)
        return self.mixing @ (self.amplitudes * s)

    def output_derivative(self, w) -> np.ndarray:
        _, c = self.split(w)
        return self.mixing @ (self.amplitudes * self.frequencies * c)

    def phases_at(self, t: float) -> np.ndarray:
        """Phases in force at time ``t`` (a reset at ``t`` counts as applied)."""
        rho = self.phases
        for r in self.resets:
            if r.time <= t:
                rho = np.asarray(r.phases, dtype=float)
        return rho

    def closed_form_output(self, t: float) -> np.ndarray:
        angle = self.frequencies * t + self.phases_at(t)
        return self.mixing @ (self.amplitudes * np.sin(angle))

    def apply_resets(self, w, t_prev: float, t_next: float):
        """Apply resets with time in ``(t_prev, t_next]``.

        Returns the (possibly re-initialised) state and the list of applied
        resets.  Adjacent windows never apply the same reset twice.
        """
        applied = [r for r in self.resets if t_prev < r.time <= t_next]
        if not applied:
            return np.asarray(w, dtype=float), []
        last = applied[-1]
        return self.phasor(last.time, last.phases), applied


def incidence_exo(B, amplitudes, frequencies, phases, resets=()) -> HarmonicExo:
    """Exo-system whose channel ``k`` injects at the tail and withdraws at the head of edge ``k``."""
    return HarmonicExo(np.asarray(amplitudes), np.asarray(frequencies), np.asarray(phases), np.asarray(B), tuple(resets))
