"""Axis-aligned rectangle primitives shared by the arena, blackout zones and raycaster."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Rect:
    """Closed axis-aligned rectangle [x, x+w] x [y, y+h] in arena pixels.

    "Closed" means points on the boundary count as inside, which keeps
    zone-entry detection deterministic under discrete stepping.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"rectangle must have positive extent, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + 0.5 * self.w, self.y + 0.5 * self.h)

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px <= self.x2 and self.y <= py <= self.y2

    def distance(self, px: float, py: float) -> float:
        """Euclidean distance from a point to the rectangle (0 when inside)."""
        dx = max(self.x - px, 0.0, px - self.x2)
        dy = max(self.y - py, 0.0, py - self.y2)
        return math.hypot(dx, dy)

    def overlaps(self, other: "Rect") -> bool:
        return not (
            self.x2 < other.x or other.x2 < self.x or self.y2 < other.y or other.y2 < self.y
        )

    def grown(self, margin: float) -> "Rect":
        return Rect(self.x - margin, self.y - margin, self.w + 2 * margin, self.h + 2 * margin)

    def scaled_about_center(self, factor: float) -> "Rect":
        cx, cy = self.center
        w = self.w * factor
        h = self.h * factor
        return Rect(cx - 0.5 * w, cy - 0.5 * h, w, h)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_list(cls, values: list[float]) -> "Rect":
        if len(values) != 4:
            raise ValueError(f"rectangle needs [x, y, w, h], got {values!r}")
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]))


def point_in_any(px: float, py: float, rects: list[Rect] | tuple[Rect, ...]) -> bool:
    return any(r.contains(px, py) for r in rects)
