"""Uniform rectangular partitions of the unit square with face skeleton and fictitious discs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["BoundaryFace", "Element", "InteriorFace", "MeshPartition", "build_mesh", "fictitious_disc"]


@dataclass(frozen=True)
class Element:
    id: int
    ix: int
    iy: int
    bbox: tuple  # (xmin, xmax, ymin, ymax)

    @property
    def barycenter(self) -> tuple:
        return (0.5 * (self.bbox[0] + self.bbox[1]), 0.5 * (self.bbox[2] + self.bbox[3]))

    @property
    def size(self) -> tuple:
        return (self.bbox[1] - self.bbox[0], self.bbox[3] - self.bbox[2])

    @property
    def area(self) -> float:
        hx, hy = self.size
        return hx * hy

    def corners(self) -> np.ndarray:
        x0, x1, y0, y1 = self.bbox
        return np.array([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


@dataclass(frozen=True)
class InteriorFace:
    """Segment shared by ``left`` and ``right``; ``normal`` is the unit normal pointing left -> right."""

    left: int
    right: int
    a: tuple
    b: tuple
    normal: tuple

    @property
    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])


@dataclass(frozen=True)
class BoundaryFace:
    element: int
    a: tuple
    b: tuple
    normal: tuple  # outward

    @property
    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])


@dataclass(frozen=True)
class MeshPartition:
    nx: int
    ny: int
    elements: tuple
    interior_faces: tuple
    boundary_faces: tuple

    @property
    def h(self) -> float:
        return max(1.0 / self.nx, 1.0 / self.ny)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_id(self, ix: int, iy: int) -> int:
        return iy * self.nx + ix

    def fictitious_disc(self, k: int):
        return fictitious_disc(self, k)

    def faces_of(self, k: int):
        """Interior faces touching element ``k`` followed by its boundary faces."""
        inner = [f for f in self.interior_faces if k in (f.left, f.right)]
        outer = [f for f in self.boundary_faces if f.element == k]
        return inner, outer


def build_mesh(nx: int, ny: int | None = None) -> MeshPartition:
    """``nx x ny`` uniform rectangles on ``[0, 1]^2``; elements numbered row-major in x."""
    ny = nx if ny is None else ny
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    hx, hy = 1.0 / nx, 1.0 / ny
    elements = []
    for iy in range(ny):
        for ix in range(nx):
            elements.append(Element(iy * nx + ix, ix, iy, (ix * hx, (ix + 1) * hx, iy * hy, (iy + 1) * hy)))
    interior, boundary = [], []
    for iy in range(ny):
        for ix in range(nx):
            k = iy * nx + ix
            x0, x1, y0, y1 = elements[k].bbox
            if ix + 1 < nx:
                interior.append(InteriorFace(k, k + 1, (x1, y0), (x1, y1), (1.0, 0.0)))
            if iy + 1 < ny:
                interior.append(InteriorFace(k, k + nx, (x0, y1), (x1, y1), (0.0, 1.0)))
            if ix == 0:
                boundary.append(BoundaryFace(k, (x0, y0), (x0, y1), (-1.0, 0.0)))
            if ix == nx - 1:
                boundary.append(BoundaryFace(k, (x1, y0), (x1, y1), (1.0, 0.0)))
            if iy == 0:
                boundary.append(BoundaryFace(k, (x0, y0), (x1, y0), (0.0, -1.0)))
            if iy == ny - 1:
                boundary.append(BoundaryFace(k, (x0, y1), (x1, y1), (0.0, 1.0)))
    return MeshPartition(nx, ny, tuple(elements), tuple(interior), tuple(boundary))


def fictitious_disc(mesh: MeshPartition, k: int):
    """``(center, radius)``: barycenter and half the element diagonal (smallest containing disc)."""
    if not 0 <= k < mesh.n_elements:
        raise IndexError(f"element {k} out of range")
    el = mesh.elements[k]
    hx, hy = el.size
    return el.barycenter, 0.5 * math.hypot(hx, hy)
