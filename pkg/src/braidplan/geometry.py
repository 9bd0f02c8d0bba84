"""Space-time lifting of timed paths and braid extraction by projection.

A team's timed planar paths become ascending 3-D polylines by mapping time
to height.  Projecting those polylines onto a vertical plane and recording
every order swap of the projected strands yields a braid word per plane;
the pair and triplet sub-words of that braid are what the planner and the
verifier test for entangling patterns.

Projection convention, fixed package-wide: for a plane at angle ``alpha``
the projected horizontal coordinate of a point (x, y) is

    u = -x * sin(alpha) + y * cos(alpha)

and its depth (signed distance along the plane normal) is

    d = x * cos(alpha) + y * sin(alpha).

The view from ``alpha + pi`` negates both u and d and therefore produces
the mirror braid.  Exact coordinate ties are broken symbolically: the
robot with the smaller id counts as infinitesimally smaller in u, which
makes extraction deterministic without ever perturbing stored data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .braid import BraidLetter, BraidWord
from .errors import DegenerateInputError, InputError

__all__ = [
    "Trajectory",
    "SpaceTimeTrajectory",
    "ProjectionAxis",
    "CrossingEvent",
    "build_space_time",
    "extract_crossings",
    "sub_events",
    "sub_braid",
]

# Two events closer than this fraction of the horizon count as simultaneous.
TIME_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Trajectory:
    """A robot's timed planar path: waypoints (x, y, t), piecewise linear.

    Times must be strictly increasing and start at 0.  The robot is frozen
    at its last waypoint for any later time.
    """

    robot_id: int
    waypoints: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise InputError(f"robot {self.robot_id}: trajectory has no waypoints")
        times = [w[2] for w in self.waypoints]
        if times[0] != 0.0:
            raise InputError(f"robot {self.robot_id}: first waypoint time must be 0")
        for a, b in zip(times, times[1:]):
            if not b > a:
                raise InputError(f"robot {self.robot_id}: waypoint times must strictly increase")
        for x, y, t in self.waypoints:
            if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(t)):
                raise InputError(f"robot {self.robot_id}: non-finite waypoint")

    @property
    def arrival_time(self) -> float:
        return self.waypoints[-1][2]

    def times(self) -> np.ndarray:
        return np.array([w[2] for w in self.waypoints])

    def positions(self) -> np.ndarray:
        return np.array([(w[0], w[1]) for w in self.waypoints])

    def position_at(self, t: float) -> tuple[float, float]:
        ts = self.times()
        xs = np.interp(t, ts, [w[0] for w in self.waypoints])
        ys = np.interp(t, ts, [w[1] for w in self.waypoints])
        return float(xs), float(ys)

    def length(self) -> float:
        pts = self.positions()
        return float(np.sum(np.hypot(*(pts[1:] - pts[:-1]).T)))


@dataclass(frozen=True, eq=False)
class SpaceTimeTrajectory:
    """A path lifted to 3-D, sampled on the team's shared event-time grid."""

    robot_id: int
    xy: np.ndarray          # (G, 2) positions at grid times
    z: np.ndarray           # (G,) heights, strictly increasing
    grid_times: np.ndarray  # (G,) the shared time grid
    horizon: float          # slowest arrival time across the team
    height: float

    def __post_init__(self) -> None:
        self.xy.setflags(write=False)
        self.z.setflags(write=False)
        self.grid_times.setflags(write=False)

    @property
    def points(self) -> tuple[tuple[float, float, float], ...]:
        return tuple((float(x), float(y), float(z)) for (x, y), z in zip(self.xy, self.z))


def build_space_time(paths: Sequence[Trajectory], height: float) -> list[SpaceTimeTrajectory]:
    """Lift timed paths into 3-D with z = t * height / horizon.

    Every output shares one time grid (the union of all waypoint times);
    robots that arrive early are frozen at their final position.
    """
    if not paths:
        raise InputError("no trajectories to lift")
    if height <= 0 or not math.isfinite(height):
        raise InputError(f"height must be positive and finite, got {height}")
    ids = [p.robot_id for p in paths]
    if len(set(ids)) != len(ids):
        raise InputError("duplicate robot ids in trajectory list")
    horizon = max(p.arrival_time for p in paths)
    if horizon <= 0:
        raise InputError("the team horizon must be positive")
    grid = np.unique(np.concatenate([p.times() for p in paths]))
    z = grid * (height / horizon)
    out = []
    for p in paths:
        ts = p.times()
        pts = p.positions()
        xy = np.column_stack(
            [np.interp(grid, ts, pts[:, 0]), np.interp(grid, ts, pts[:, 1])]
        )
        out.append(
            SpaceTimeTrajectory(
                robot_id=p.robot_id,
                xy=xy,
                z=z.copy(),
                grid_times=grid.copy(),
                horizon=float(horizon),
                height=float(height),
            )
        )
    return out


@dataclass(frozen=True)
class ProjectionAxis:
    """A vertical projection plane, identified by its angle in radians."""

    angle: float

    def u(self, xy: np.ndarray) -> np.ndarray:
        """Projected horizontal coordinate(s) of points shaped (..., 2)."""
        xy = np.asarray(xy)
        return -xy[..., 0] * math.sin(self.angle) + xy[..., 1] * math.cos(self.angle)

    def depth(self, xy: np.ndarray) -> np.ndarray:
        """Signed distance(s) along the plane normal; larger is nearer the viewer."""
        xy = np.asarray(xy)
        return xy[..., 0] * math.cos(self.angle) + xy[..., 1] * math.sin(self.angle)

    def mirror(self) -> "ProjectionAxis":
        """The same plane viewed from the other side (negated u and depth)."""
        return ProjectionAxis(self.angle + math.pi)


@dataclass(frozen=True)
class CrossingEvent:
    """One rank swap of two projected strands.

    ``letter.index`` is the rank (1-based, among the whole team) of the
    left strand just before the swap; ``letter.sign`` is +1 when that left
    strand has strictly larger depth, i.e. passes in front.  ``order_before``
    is the full left-to-right robot order immediately before the swap.
    """

    time: float
    axis_angle: float
    i: int
    j: int
    letter: BraidLetter
    order_before: tuple[int, ...] = field(repr=False)

    def as_line(self) -> str:
        return f"{self.time:.9g} {self.axis_angle:.9g} {self.i} {self.j} {self.letter}"


def _perturbed_signs(diff: np.ndarray) -> np.ndarray:
    # Tie rule: for a pair (i, j) with i < j, a tied u counts robot i as
    # smaller, so zero difference takes the negative sign.
    return np.where(diff > 0.0, 1, -1)


def extract_crossings(
    trajectories: Sequence[SpaceTimeTrajectory],
    axis: ProjectionAxis,
    ties_out: list[tuple[int, int, float]] | None = None,
) -> list[CrossingEvent]:
    """All rank swaps of the projected strands, ordered by time.

    Trajectories must share one grid (i.e. come from one ``build_space_time``
    call).  Simultaneous events (within ``TIME_TOLERANCE`` of the horizon)
    are resolved pair-lexicographically, always as adjacent-rank swaps.
    If ``ties_out`` is given, exact coordinate ties that required the
    symbolic perturbation are appended to it as (i, j, time).
    """
    if not trajectories:
        raise InputError("no trajectories to project")
    trajs = sorted(trajectories, key=lambda s: s.robot_id)
    ids = [s.robot_id for s in trajs]
    if len(set(ids)) != len(ids):
        raise InputError("duplicate robot ids")
    grid = trajs[0].grid_times
    for s in trajs[1:]:
        if len(s.grid_times) != len(grid) or not np.array_equal(s.grid_times, grid):
            raise InputError("trajectories do not share a time grid; lift them together")
    n = len(trajs)
    if n < 2 or len(grid) < 2:
        return []

    U = np.stack([axis.u(s.xy) for s in trajs])       # (n, G)
    D = np.stack([axis.depth(s.xy) for s in trajs])   # (n, G)
    horizon = trajs[0].horizon
    tol = TIME_TOLERANCE * horizon

    candidates: list[tuple[float, int, int]] = []
    for a in range(n):
        for b in range(a + 1, n):
            diff = U[a] - U[b]
            signs = _perturbed_signs(diff)
            if ties_out is not None and np.any(diff == 0.0):
                for k in np.flatnonzero(diff == 0.0):
                    ties_out.append((ids[a], ids[b], float(grid[k])))
            flips = np.flatnonzero(signs[:-1] != signs[1:])
            for k in flips:
                f0, f1 = diff[k], diff[k + 1]
                t = grid[k] + (grid[k + 1] - grid[k]) * (f0 / (f0 - f1))
                candidates.append((float(t), ids[a], ids[b]))
    candidates.sort()

    # Running left-to-right order, seeded from the perturbed start ordering.
    id_row = {r: idx for idx, r in enumerate(ids)}
    order = sorted(ids, key=lambda r: (U[id_row[r], 0], r))
    rank = {r: order.index(r) for r in order}

    events: list[CrossingEvent] = []
    pos = 0
    while pos < len(candidates):
        # Group events that are simultaneous within tolerance.
        end = pos + 1
        while end < len(candidates) and candidates[end][0] - candidates[pos][0] <= tol:
            end += 1
        group = list(candidates[pos:end])
        while group:
            pick = None
            for idx, (t, a, b) in enumerate(group):
                if abs(rank[a] - rank[b]) == 1:
                    pick = idx
                    break
            if pick is None:
                raise DegenerateInputError(
                    "simultaneous crossings cannot be ordered into adjacent swaps"
                )
            t, a, b = group.pop(pick)
            left, right = (a, b) if rank[a] < rank[b] else (b, a)
            d_left = float(np.interp(t, grid, D[id_row[left]]))
            d_right = float(np.interp(t, grid, D[id_row[right]]))
            sign = 1 if (d_left, -left) > (d_right, -right) else -1
            events.append(
                CrossingEvent(
                    time=t,
                    axis_angle=axis.angle,
                    i=min(a, b),
                    j=max(a, b),
                    letter=BraidLetter(rank[left] + 1, sign),
                    order_before=tuple(order),
                )
            )
            order[rank[left]], order[rank[right]] = right, left
            rank[left], rank[right] = rank[right], rank[left]
        pos = end

    final = sorted(ids, key=lambda r: (U[id_row[r], -1], r))
    if final != order:
        raise DegenerateInputError("crossing sequence does not reproduce the final ordering")
    return events


def sub_events(
    events: Sequence[CrossingEvent], subset: Sequence[int]
) -> list[tuple[float, BraidLetter]]:
    """Timestamps and re-indexed letters of the events internal to ``subset``."""
    subset = tuple(subset)
    if len(subset) not in (2, 3):
        raise InputError(f"subset must have 2 or 3 robots, got {len(subset)}")
    if len(set(subset)) != len(subset) or list(subset) != sorted(subset):
        raise InputError("subset ids must be distinct and sorted ascending")
    members = set(subset)
    out: list[tuple[float, BraidLetter]] = []
    for ev in events:
        if ev.i not in members or ev.j not in members:
            continue
        if not members <= set(ev.order_before):
            raise InputError(f"subset {subset} not contained in the team of the events")
        left = ev.order_before[ev.letter.index - 1]
        sub_order = [r for r in ev.order_before if r in members]
        out.append((ev.time, BraidLetter(sub_order.index(left) + 1, ev.letter.sign)))
    return out


def sub_braid(events: Sequence[CrossingEvent], subset: Sequence[int]) -> BraidWord:
    """The braid word a pair or triplet of robots weaves within the team."""
    letters = tuple(letter for _, letter in sub_events(events, subset))
    return BraidWord(len(tuple(subset)), letters)
