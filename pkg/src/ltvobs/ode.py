"""Fixed-step RK4 integration over a named, flat composite state.

All dynamics in this package (truth model, GPEBO filters, estimator) are
stacked into one flat vector; StateLayout names the segments so callers can
slice by name without carrying offsets around.  Integration is deterministic:
identical inputs give bit-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["StateLayout", "CompositeState", "IntegrationConfig", "BlowUpError",
           "rk4_step", "integrate"]

BLOWUP_LIMIT = 1e12


class BlowUpError(RuntimeError):
    """A state component left the finite/bounded regime during integration."""

    def __init__(self, t: float, message: str = ""):
        self.t = t
        super().__init__(message or f"state blow-up detected at t={t:.6g}")


class StateLayout:
    """Immutable (name, length) segmentation of a flat state vector."""

    def __init__(self, segments: list[tuple[str, int]]):
        self._names = tuple(name for name, _ in segments)
        if len(set(self._names)) != len(self._names):
            raise ValueError("duplicate segment names")
        offsets = {}
        pos = 0
        for name, length in segments:
            if length <= 0:
                raise ValueError(f"segment {name!r} has nonpositive length {length}")
            offsets[name] = (pos, pos + length)
            pos += length
        self._offsets = offsets
        self.size = pos

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    def slice_of(self, name: str) -> slice:
        lo, hi = self._offsets[name]
        return slice(lo, hi)

    def view(self, vec: np.ndarray, name: str) -> np.ndarray:
        return vec[self.slice_of(name)]

    def pack(self, parts: dict[str, np.ndarray]) -> np.ndarray:
        vec = np.zeros(self.size)
        for name in self._names:
            seg = np.asarray(parts[name], dtype=float).ravel()
            sl = self.slice_of(name)
            if len(seg) != sl.stop - sl.start:
                raise ValueError(f"segment {name!r}: got length {len(seg)}")
            vec[sl] = seg
        return vec


@dataclass(frozen=True)
class CompositeState:
    layout: StateLayout
    vec: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if len(self.vec) != self.layout.size:
            raise ValueError(
                f"state vector length {len(self.vec)} != layout size {self.layout.size}")

    def view(self, name: str) -> np.ndarray:
        return self.layout.view(self.vec, name)


@dataclass(frozen=True)
class IntegrationConfig:
    h: float = 1e-3
    t_final: float = 100.0
    record_stride: int = 1

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("step h must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")
        if self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")


def _check_finite(dv: np.ndarray, t: float):
    if not np.all(np.isfinite(dv)):
        raise BlowUpError(t, f"non-finite derivative at t={t:.6g}")


def rk4_vec(rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """Classical RK4 update on a flat vector."""
    k1 = rhs(t, y)
    _check_finite(k1, t)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    _check_finite(k4, t + h)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(rhs, s: CompositeState, h: float) -> CompositeState:
    """One RK4 step; rhs(t, vec) must return a vector of identical layout."""
    if h <= 0:
        raise ValueError("step h must be positive")
    probe = rhs(s.t, s.vec)
    probe = np.asarray(probe, dtype=float)
    if probe.shape != s.vec.shape:
        raise ValueError(
            f"rhs returned shape {probe.shape}, expected {s.vec.shape}")
    y = rk4_vec(rhs, s.t, s.vec, h)
    return CompositeState(s.layout, y, s.t + h)


def integrate(rhs, s0: CompositeState, cfg: IntegrationConfig,
              recorder=None, step_hook=None) -> CompositeState:
    """Integrate from s0 to cfg.t_final with fixed step cfg.h.

    recorder(t, vec) fires at t=0, every record_stride-th step, and at the
    final time.  step_hook(k, t) fires before step k (used by the closed-loop
    simulation to draw the per-step held measurement noise).
    """
    n_steps = int(np.ceil(cfg.t_final / cfg.h - 1e-12)) if cfg.t_final > 0 else 0
    t = s0.t
    y = np.array(s0.vec, dtype=float)
    if recorder is not None:
        recorder(t, y)
    for k in range(n_steps):
        if step_hook is not None:
            step_hook(k, t)
        h = min(cfg.h, cfg.t_final + s0.t - t)
        y = rk4_vec(rhs, t, y, h)
        t = s0.t + (k + 1) * cfg.h if k + 1 < n_steps else s0.t + cfg.t_final
        if np.max(np.abs(y)) > BLOWUP_LIMIT or not np.all(np.isfinite(y)):
            raise BlowUpError(t)
        if recorder is not None and ((k + 1) % cfg.record_stride == 0 or k + 1 == n_steps):
            recorder(t, y)
    return CompositeState(s0.layout, y, t)
