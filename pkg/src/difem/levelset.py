"""Level-set descriptions of interfaces.

Sign convention used throughout the package: ``phi > 0`` marks the subdomain
carrying the mixed discretization (written ``Omega^-``), ``phi < 0`` the
subdomain carrying the conforming one (``Omega^+``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError

KINDS = ("example1", "circle", "two-circles", "flower", "affine")


@dataclass(frozen=True)
class LevelSet:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown level-set kind {self.kind!r}")

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        p = self.params
        if self.kind == "example1":
            # Omega^- lies above y = 0.5 + 0.2 sin(pi x)
            return y - 0.5 - 0.2 * np.sin(np.pi * x)
        if self.kind == "circle":
            cx, cy = p.get("center", (0.0, 0.0))
            return p["radius"] - np.hypot(x - cx, y - cy)
        if self.kind == "two-circles":
            r2 = p["radius"] ** 2
            (ax, ay), (bx, by) = p["centers"]
            return -((x - ax) ** 2 + (y - ay) ** 2 - r2) * ((x - bx) ** 2 + (y - by) ** 2 - r2)
        if self.kind == "flower":
            r = np.hypot(x, y)
            theta = np.arctan2(y, x)
            return 0.5 - 2.0 ** (np.sin(5.0 * theta) - 3.0) - r
        nx, ny = p["normal"]
        return nx * x + ny * y + p["offset"]


def circle(radius: float, center=(0.0, 0.0)) -> LevelSet:
    return LevelSet("circle", {"radius": float(radius), "center": tuple(center)})


def two_circles(radius: float, centers) -> LevelSet:
    return LevelSet("two-circles", {"radius": float(radius), "centers": tuple(map(tuple, centers))})


def affine(nx: float, ny: float, offset: float) -> LevelSet:
    """``phi = nx*x + ny*y + offset``."""
    return LevelSet("affine", {"normal": (float(nx), float(ny)), "offset": float(offset)})


def parse_levelset(text: str) -> LevelSet:
    """Parse ``example1``, ``flower``, ``circle:r[,cx,cy]``,
    ``two-circles:r,ax,ay,bx,by`` or ``affine:nx,ny,offset``."""
    name, _, args = text.partition(":")
    vals = [float(v) for v in args.split(",")] if args else []
    try:
        if name in ("example1", "flower") and not vals:
            return LevelSet(name)
        if name == "circle" and len(vals) in (1, 3):
            return circle(vals[0], vals[1:] or (0.0, 0.0))
        if name == "two-circles" and len(vals) == 5:
            return two_circles(vals[0], (vals[1:3], vals[3:5]))
        if name == "affine" and len(vals) == 3:
            return affine(*vals)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad level-set spec {text!r}") from exc
    raise ConfigError(f"bad level-set spec {text!r}")
