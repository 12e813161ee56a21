"""Snapshot collection from recorded trajectories."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError

__all__ = ["SnapshotSet", "collect_snapshots", "snapshot_count"]


@dataclass
class SnapshotSet:
    """State columns with their time stamps."""

    times: np.ndarray
    states: np.ndarray  # (N, m)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[1] != self.times.size:
            raise ConfigurationError("snapshot states must be (N, m) with one time per column")

    @property
    def dim(self):
        return self.states.shape[0]

    def __len__(self):
        return self.times.size

    def subsample(self, stride):
        """Every ``stride``-th snapshot, starting with the first."""
        return SnapshotSet(self.times[::stride], self.states[:, ::stride], dict(self.meta, stride=stride))


def _steps_per_sample(delta_s, dt):
    ratio = delta_s / dt
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * max(1.0, ratio):
        raise ConfigurationError(f"sampling interval {delta_s} is not an integer multiple of dt={dt}")
    return k


def snapshot_count(t_start, t_end, delta_s):
    """Number of sampling instants ``t_start + j delta_s <= t_end``."""
    return int(np.floor((t_end - t_start) / delta_s + 1e-9)) + 1


def collect_snapshots(trajectory, delta_s, window=None):
    """Sample a trajectory every ``delta_s`` within ``window = (t0, t1)``.

    The trajectory must be recorded at uniform spacing ``trajectory.dt``
    (or a multiple of it given by its time stamps); ``delta_s`` must be an
    integer multiple of that spacing.
    """
    times = np.asarray(trajectory.times)
    spacing = times[1] - times[0] if times.size > 1 else trajectory.dt
    k = _steps_per_sample(delta_s, spacing)
    t0, t1 = (times[0], times[-1]) if window is None else window
    tol = 1e-9 * max(1.0, abs(spacing))
    idx = np.arange(times.size)
    inside = (times >= t0 - tol) & (times <= t1 + tol)
    if not inside.any():
        raise ConfigurationError("sampling window contains no recorded states")
    first = np.flatnonzero(inside)[0]
    keep = inside & ((idx - first) % k == 0)
    return SnapshotSet(times[keep], trajectory.states[:, keep], {"delta_s": delta_s, "window": [t0, t1]})
