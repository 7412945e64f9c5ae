"""Uniformly sampled trajectories and the operations that prepare them.

A trajectory is the raw material of every identification routine here:
samples of a single continuous path on a uniform time grid. Instances are
immutable after construction (the sample array is marked read-only), so
they can be shared freely between threads and across assembled systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrajectoryParseError

# Relative slack allowed when checking a time column against a uniform grid.
GRID_RTOL = 1e-9


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Trajectory:
    """Samples of one path: `samples[k]` is the state at time k*step.

    samples : (F+1, n) array, F >= 2, all entries finite.
    step    : positive sample spacing in time.
    """

    samples: np.ndarray
    step: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise ValueError(f"samples must be 2-D, got shape {samples.shape}")
        if samples.shape[0] < 3:
            raise ValueError(
                f"trajectory needs at least 3 samples (2 intervals), got {samples.shape[0]}"
            )
        if not np.isfinite(samples).all():
            raise ValueError("trajectory samples must be finite")
        if not (np.isfinite(self.step) and self.step > 0):
            raise ValueError(f"step must be positive, got {self.step}")
        object.__setattr__(self, "samples", _freeze(samples))

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_intervals(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def duration(self) -> float:
        return self.n_intervals * self.step

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.step

    @property
    def initial(self) -> np.ndarray:
        return self.samples[0]

    @property
    def final(self) -> np.ndarray:
        return self.samples[-1]


@dataclass(frozen=True)
class TrajectorySet:
    """Ordered collection of trajectories with a common state dimension."""

    trajectories: tuple[Trajectory, ...]

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        if not trajs:
            raise ValueError("TrajectorySet cannot be empty")
        dims = {t.dim for t in trajs}
        if len(dims) != 1:
            raise ValueError(f"mixed state dimensions in TrajectorySet: {sorted(dims)}")
        object.__setattr__(self, "trajectories", trajs)

    @property
    def dim(self) -> int:
        return self.trajectories[0].dim

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def __getitem__(self, i) -> Trajectory:
        return self.trajectories[i]


def as_trajectory_set(trajs) -> TrajectorySet:
    if isinstance(trajs, TrajectorySet):
        return trajs
    if isinstance(trajs, Trajectory):
        return TrajectorySet((trajs,))
    return TrajectorySet(tuple(trajs))


def segment(traj: Trajectory, parts: int) -> TrajectorySet:
    """Split a trajectory into `parts` contiguous pieces sharing boundary samples.

    Intervals are distributed as evenly as possible (earlier segments take the
    remainder). Every segment must keep at least 2 intervals so that it is a
    valid Trajectory on its own.
    """
    if parts < 1:
        raise ValueError(f"parts must be >= 1, got {parts}")
    F = traj.n_intervals
    base, rem = divmod(F, parts)
    if base < 2:
        raise ValueError(
            f"cannot split {traj.n_samples} samples into {parts} segments of >= 2 intervals"
        )
    pieces = []
    start = 0
    for k in range(parts):
        length = base + (1 if k < rem else 0)
        stop = start + length
        pieces.append(Trajectory(traj.samples[start : stop + 1].copy(), traj.step))
        start = stop
    return TrajectorySet(tuple(pieces))


def add_measurement_noise(traj: Trajectory, sigma: float, seed: int) -> Trajectory:
    """Corrupt every sample with i.i.d. N(0, sigma^2) noise per coordinate."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return Trajectory(traj.samples.copy(), traj.step)
    rng = np.random.default_rng(seed)
    noisy = traj.samples + rng.normal(0.0, sigma, size=traj.samples.shape)
    return Trajectory(noisy, traj.step)


def moving_average(traj: Trajectory, window: int) -> Trajectory:
    """Trailing moving average: row k averages rows max(0, k-window+1)..k.

    The window shrinks at the start of the record so the output has the same
    length and grid as the input; the filter is causal.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    x = traj.samples
    if window == 1:
        return Trajectory(x.copy(), traj.step)
    w = min(window, x.shape[0])
    out = np.empty_like(x)
    # Startup rows: shrinking window via running mean.
    csum = np.cumsum(x[: w - 1], axis=0)
    out[: w - 1] = csum / np.arange(1, w)[:, None]
    # Full windows: per-window sums keep roundoff at the window scale rather
    # than accumulating over the whole record.
    sw = np.lib.stride_tricks.sliding_window_view(x, w, axis=0)
    out[w - 1 :] = sw.mean(axis=2)
    return Trajectory(out, traj.step)


def save_csv(traj: Trajectory, path) -> None:
    """Write `t,x1,...,xn` rows with full float precision (17 significant digits)."""
    n = traj.dim
    header = "t," + ",".join(f"x{i + 1}" for i in range(n))
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for k in range(traj.n_samples):
            t = k * traj.step
            row = ",".join(f"{v:.17g}" for v in traj.samples[k])
            fh.write(f"{t:.17g},{row}\n")


def load_csv(path) -> Trajectory:
    """Read a trajectory CSV written by save_csv (or produced externally).

    The header must be exactly `t,x1,...,xn`; the time column must lie on a
    uniform grid within GRID_RTOL of the inferred step. Errors report the
    offending 1-based line number.
    """
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise TrajectoryParseError("empty file", line=1)
    header = [c.strip() for c in lines[0].split(",")]
    if len(header) < 2 or header[0] != "t":
        raise TrajectoryParseError(f"expected header 't,x1,...', got {lines[0]!r}", line=1)
    n = len(header) - 1
    expected = [f"x{i + 1}" for i in range(n)]
    if header[1:] != expected:
        raise TrajectoryParseError(
            f"state columns must be {','.join(expected)}, got {','.join(header[1:])}", line=1
        )
    times = []
    rows = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != n + 1:
            raise TrajectoryParseError(
                f"expected {n + 1} columns, got {len(cells)}", line=lineno
            )
        try:
            vals = [float(c) for c in cells]
        except ValueError as exc:
            raise TrajectoryParseError(str(exc), line=lineno) from None
        times.append(vals[0])
        rows.append(vals[1:])
    if len(rows) < 3:
        raise TrajectoryParseError(
            f"need at least 3 data rows, got {len(rows)}", line=len(lines)
        )
    t = np.array(times)
    h = t[1] - t[0]
    if h <= 0:
        raise TrajectoryParseError(f"time step must be positive, got {h}", line=3)
    grid = t[0] + h * np.arange(len(t))
    off = np.abs(t - grid)
    bad = np.nonzero(off > GRID_RTOL * h)[0]
    if bad.size:
        k = int(bad[0])
        raise TrajectoryParseError(
            f"time {t[k]!r} deviates from the uniform grid value {grid[k]!r}", line=k + 2
        )
    return Trajectory(np.array(rows), float(h))


def subsample(traj: Trajectory, stride: int) -> Trajectory:
    """Keep every stride-th sample. Requires stride to divide the interval count."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if traj.n_intervals % stride != 0:
        raise ValueError(
            f"stride {stride} does not divide {traj.n_intervals} intervals"
        )
    return Trajectory(traj.samples[::stride].copy(), traj.step * stride)


def concatenate(pieces) -> Trajectory:
    """Rejoin contiguous segments that share boundary samples (inverse of segment)."""
    pieces = list(pieces)
    if not pieces:
        raise ValueError("nothing to concatenate")
    step = pieces[0].step
    parts = [pieces[0].samples]
    for prev, cur in zip(pieces, pieces[1:]):
        if cur.step != step:
            raise ValueError("segments have mismatched steps")
        if not np.array_equal(prev.samples[-1], cur.samples[0]):
            raise ValueError("segments do not share boundary samples")
        parts.append(cur.samples[1:])
    return Trajectory(np.vstack(parts), step)
