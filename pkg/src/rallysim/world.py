"""Arena geometry, simulated laser scanning, and the sector-based heading filter.

The scanner sweeps the front semicircle, one beam per degree from -90 to +90
relative to the heading (181 beams), range-capped at 300 px. Beams are resolved
analytically against the arena border, obstacle rectangles and other agents
rendered as discs; an equivalent pixel-marching oracle lives in the test suite.

Bearing sign convention: positive bearings are to the agent's left
(counter-clockwise), negative to its right.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Rect

SCAN_RANGE_PX = 300.0
SCAN_BEARINGS_DEG = np.arange(-90, 91)
_BEARINGS_RAD = np.radians(SCAN_BEARINGS_DEG.astype(float))

# avoidance rule thresholds, in pixels / degrees
HALT_RANGE_PX = 5.0
SIDE_RANGE_PX = 8.0
FRONTAL_RANGE_PX = 150.0
FRONTAL_HALF_WIDTH_DEG = 2
CLEAR_SECTOR_HALF_WIDTH_DEG = 2  # a clear sector is 4 degrees wide
OBLIQUE_CLEARANCE_PX = 5.0
MAX_TURN_DEG = 30.0
MIN_TURN_DEG = 1.0


@dataclass(frozen=True)
class Arena:
    """Arena rectangle with border insets, static obstacles and blackout zones.

    The playable region is [west, width - east] x [south, height - north];
    everything outside it behaves as solid wall.
    """

    width: float = 1412.0
    height: float = 773.0
    border_west: float = 26.0
    border_south: float = 35.0
    border_east: float = 28.0
    border_north: float = 26.0
    obstacles: tuple[Rect, ...] = ()
    zones: tuple[Rect, ...] = ()
    agent_radius: float = 5.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "zones", tuple(self.zones))
        if self.agent_radius <= 0:
            raise ValueError("agent radius must be positive")
        x_lo, y_lo, x_hi, y_hi = self.playable_bounds
        if x_lo >= x_hi or y_lo >= y_hi:
            raise ValueError("border insets leave no playable area")
        for kind, rects in (("obstacle", self.obstacles), ("zone", self.zones)):
            for r in rects:
                if r.x < x_lo or r.y < y_lo or r.x2 > x_hi or r.y2 > y_hi:
                    raise ValueError(f"{kind} {r.as_list()} extends outside the playable area")

    @property
    def playable_bounds(self) -> tuple[float, float, float, float]:
        return (
            self.border_west,
            self.border_south,
            self.width - self.border_east,
            self.height - self.border_north,
        )

    def in_playable(self, px: float, py: float) -> bool:
        x_lo, y_lo, x_hi, y_hi = self.playable_bounds
        return x_lo <= px <= x_hi and y_lo <= py <= y_hi

    def inside_obstacle(self, px: float, py: float) -> bool:
        return any(r.contains(px, py) for r in self.obstacles)

    def clearance(self, px: float, py: float) -> float:
        """Distance from a point to the nearest obstacle or border wall.

        Zero or negative means the point touches or penetrates solid geometry.
        """
        x_lo, y_lo, x_hi, y_hi = self.playable_bounds
        c = min(px - x_lo, x_hi - px, py - y_lo, y_hi - py)
        for r in self.obstacles:
            d = r.distance(px, py)
            if r.contains(px, py):
                d = 0.0
            c = min(c, d)
        return c


@dataclass(frozen=True)
class LaserScan:
    """181 beam ranges over [-90, +90] degrees relative to the heading."""

    ranges: np.ndarray
    max_range: float = SCAN_RANGE_PX
    collided: bool = False

    def __post_init__(self) -> None:
        arr = np.asarray(self.ranges, dtype=float)
        if arr.shape != (181,):
            raise ValueError(f"scan needs 181 ranges, got shape {arr.shape}")
        object.__setattr__(self, "ranges", arr)


class DecisionKind(enum.Enum):
    KEEP = "keep"
    TURN = "turn"
    HALT = "halt"


@dataclass(frozen=True, slots=True)
class HeadingDecision:
    kind: DecisionKind
    delta: float = 0.0  # replacement turn in radians, TURN only


def _ray_walls(ox: float, oy: float, dx: np.ndarray, dy: np.ndarray,
               bounds: tuple[float, float, float, float]) -> np.ndarray:
    x_lo, y_lo, x_hi, y_hi = bounds
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(dx > 0, (x_hi - ox) / dx, np.where(dx < 0, (x_lo - ox) / dx, np.inf))
        ty = np.where(dy > 0, (y_hi - oy) / dy, np.where(dy < 0, (y_lo - oy) / dy, np.inf))
    return np.minimum(tx, ty)


def _ray_rects(ox: float, oy: float, dx: np.ndarray, dy: np.ndarray,
               rects: tuple[Rect, ...]) -> np.ndarray:
    if not rects:
        return np.full(dx.shape, np.inf)
    x1 = np.array([r.x for r in rects])[:, None]
    y1 = np.array([r.y for r in rects])[:, None]
    x2 = np.array([r.x2 for r in rects])[:, None]
    y2 = np.array([r.y2 for r in rects])[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_dx = np.where(dx != 0, 1.0 / dx, np.inf)
        inv_dy = np.where(dy != 0, 1.0 / dy, np.inf)
        ta = (x1 - ox) * inv_dx
        tb = (x2 - ox) * inv_dx
        tc = (y1 - oy) * inv_dy
        td = (y2 - oy) * inv_dy
    # degenerate axes: ray parallel to a slab hits it iff the origin is inside that slab
    para_x = dx == 0
    if para_x.any():
        inside_x = (x1 <= ox) & (ox <= x2)
        ta = np.where(para_x & inside_x, -np.inf, np.where(para_x, np.inf, ta))
        tb = np.where(para_x & inside_x, np.inf, np.where(para_x, -np.inf, tb))
    para_y = dy == 0
    if para_y.any():
        inside_y = (y1 <= oy) & (oy <= y2)
        tc = np.where(para_y & inside_y, -np.inf, np.where(para_y, np.inf, tc))
        td = np.where(para_y & inside_y, np.inf, np.where(para_y, -np.inf, td))
    t_near = np.maximum(np.minimum(ta, tb), np.minimum(tc, td))
    t_far = np.minimum(np.maximum(ta, tb), np.maximum(tc, td))
    hit = (t_near <= t_far) & (t_far >= 0)
    entry = np.where(t_near >= 0, t_near, 0.0)  # inside a rect reads as contact
    entry = np.where(hit, entry, np.inf)
    return entry.min(axis=0)


def _ray_discs(ox: float, oy: float, dx: np.ndarray, dy: np.ndarray,
               centers: np.ndarray, radius: float) -> np.ndarray:
    if centers.size == 0:
        return np.full(dx.shape, np.inf)
    cx = centers[:, 0][:, None] - ox
    cy = centers[:, 1][:, None] - oy
    b = cx * dx + cy * dy                      # projection of centre onto ray
    cc = cx * cx + cy * cy - radius * radius   # squared distance minus r^2
    disc = b * b - cc
    with np.errstate(invalid="ignore"):
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
    t = b - sq
    t = np.where(disc >= 0, t, np.inf)
    t = np.where(t >= 0, t, np.where(cc < 0, 0.0, np.inf))  # origin inside disc: contact
    return np.nanmin(np.where(np.isnan(t), np.inf, t), axis=0)


def raycast_scan(
    x: float,
    y: float,
    phi: float,
    arena: Arena,
    other_agents: list[tuple[float, float]] | np.ndarray = (),
    max_range: float = SCAN_RANGE_PX,
) -> LaserScan:
    """Scan the front semicircle from pose (x, y, phi).

    Other agents are rendered as agent_radius discs so inter-agent avoidance
    falls out of the same rules. A pose inside solid geometry yields the
    degenerate all-zeros scan flagged as a collision.
    """
    if not arena.in_playable(x, y) or arena.inside_obstacle(x, y):
        return LaserScan(np.zeros(181), max_range=max_range, collided=True)
    angles = phi + _BEARINGS_RAD
    dx = np.cos(angles)
    dy = np.sin(angles)
    dist = _ray_walls(x, y, dx, dy, arena.playable_bounds)
    dist = np.minimum(dist, _ray_rects(x, y, dx, dy, arena.obstacles))
    others = np.asarray(other_agents, dtype=float).reshape(-1, 2)
    dist = np.minimum(dist, _ray_discs(x, y, dx, dy, others, arena.agent_radius))
    return LaserScan(np.minimum(dist, max_range), max_range=max_range)


def _clear_sector_centers(ranges: np.ndarray) -> np.ndarray:
    """Bearings (deg) whose 4-degree window is entirely beyond the frontal threshold."""
    clear = ranges > FRONTAL_RANGE_PX
    w = 2 * CLEAR_SECTOR_HALF_WIDTH_DEG + 1
    windows = np.lib.stride_tricks.sliding_window_view(clear, w)
    ok = windows.all(axis=1)
    return SCAN_BEARINGS_DEG[CLEAR_SECTOR_HALF_WIDTH_DEG:-CLEAR_SECTOR_HALF_WIDTH_DEG][ok]


def avoid_heading(scan: LaserScan, desired_turn: float) -> HeadingDecision:
    """Filter a requested turn through the sector rules, in priority order:

    1. anything within 5 px anywhere ahead: halt;
    2. anything within 8 px in the 61..90 degree side sectors: 30 degree turn
       away from that side;
    3. anything within 150 px of the intended course (+-2 degrees around the
       desired heading): redirect to the nearest clear 4-degree sector, or halt
       when no clear sector exists;
    4. any beam at 3..60 degrees with lateral clearance under 5 px: turn away,
       1 to 30 degrees.
    """
    r = scan.ranges
    if scan.collided or r.min() <= HALT_RANGE_PX:
        return HeadingDecision(DecisionKind.HALT)

    left = r[151:]    # bearings +61..+90
    right = r[:30]    # bearings -90..-61
    lmin = left.min()
    rmin = right.min()
    if min(lmin, rmin) <= SIDE_RANGE_PX:
        # turn away from the closer side; tie goes left
        if rmin < lmin:
            return HeadingDecision(DecisionKind.TURN, math.radians(MAX_TURN_DEG))
        return HeadingDecision(DecisionKind.TURN, -math.radians(MAX_TURN_DEG))

    desired_deg = math.degrees(desired_turn)
    lo = max(-90, math.ceil(desired_deg - FRONTAL_HALF_WIDTH_DEG))
    hi = min(90, math.floor(desired_deg + FRONTAL_HALF_WIDTH_DEG))
    if lo <= hi and r[lo + 90 : hi + 91].min() <= FRONTAL_RANGE_PX:
        centers = _clear_sector_centers(r)
        if centers.size == 0:
            return HeadingDecision(DecisionKind.HALT)
        gap = np.abs(centers - desired_deg)
        best = gap.min()
        cand = centers[gap == best]
        # among equally near sectors prefer the smaller turn, then the left one
        turn_abs = np.abs(cand)
        cand = cand[turn_abs == turn_abs.min()]
        c = float(cand.max())
        c = max(-MAX_TURN_DEG, min(MAX_TURN_DEG, c))
        return HeadingDecision(DecisionKind.TURN, math.radians(c))

    bearings = SCAN_BEARINGS_DEG
    oblique = (np.abs(bearings) >= 3) & (np.abs(bearings) <= 60)
    sin_b = np.sin(np.abs(np.radians(bearings, dtype=float)))
    with np.errstate(divide="ignore"):
        lateral = np.where(oblique, r * sin_b, np.inf)
    idx = int(np.argmin(lateral))
    if lateral[idx] <= OBLIQUE_CLEARANCE_PX:
        clearance = lateral[idx]
        mag = MAX_TURN_DEG * (OBLIQUE_CLEARANCE_PX - clearance) / OBLIQUE_CLEARANCE_PX
        mag = min(MAX_TURN_DEG, max(MIN_TURN_DEG, mag))
        away = -1.0 if bearings[idx] > 0 else 1.0
        return HeadingDecision(DecisionKind.TURN, away * math.radians(mag))

    return HeadingDecision(DecisionKind.KEEP)


def braking_distance(v: float, d: float) -> float:
    """Distance covered while braking from speed v at decel d (v, d > 0)."""
    n = math.ceil(v / d)
    # speeds while stopping: v - d, v - 2d, ..., clamped at zero on the last step
    return (n - 1) * v - d * n * (n - 1) / 2


ESCAPE_CLEAR_PX = 60.0


def escape_window(scan: LaserScan, threat_sep_deg: float = 60.0) -> float | None:
    """Turn (rad) toward a verified-clear sector leading away from contact-close
    obstacles, or None when no such sector exists.

    Used by the engine to let a stopped agent creep out of a halt-rule
    deadlock: a parked neighbour inside the 5 px ring would otherwise pin a
    still-seeking agent forever. Escape directions must be 4-degree sectors
    clear beyond ESCAPE_CLEAR_PX and at least ``threat_sep_deg`` away in
    bearing from every beam inside the side-threat range, so creeping never
    closes on the blocker.
    """
    if scan.collided:
        return None
    r = scan.ranges
    clear = r > ESCAPE_CLEAR_PX
    w = 2 * CLEAR_SECTOR_HALF_WIDTH_DEG + 1
    windows = np.lib.stride_tricks.sliding_window_view(clear, w)
    ok = windows.all(axis=1)
    centers = SCAN_BEARINGS_DEG[CLEAR_SECTOR_HALF_WIDTH_DEG:-CLEAR_SECTOR_HALF_WIDTH_DEG][ok]
    if centers.size == 0:
        return None
    threats = SCAN_BEARINGS_DEG[r <= SIDE_RANGE_PX]
    if threats.size:
        sep = np.abs(centers[:, None] - threats[None, :]).min(axis=1)
        centers = centers[sep >= threat_sep_deg]
        if centers.size == 0:
            return None
        sep = sep[sep >= threat_sep_deg]
        best = sep.max()
        cand = centers[sep == best]
    else:
        cand = centers
    turn_abs = np.abs(cand)
    cand = cand[turn_abs == turn_abs.min()]
    c = float(cand.max())
    c = max(-MAX_TURN_DEG, min(MAX_TURN_DEG, c))
    return math.radians(c)
