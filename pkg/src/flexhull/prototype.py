"""Convex polygon prototypes and their homothets (uniform scale + translation).

Prototypes are stored in halfspace form A x <= b with unit-norm rows and
b > 0 (origin strictly inside), alongside the CCW vertex list.  Built-in
regular prototypes are normalized to unit apothem so the scaling factor has
the same half-width meaning for every edge count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


class PrototypeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PrototypePolygon:
    A: np.ndarray          # (n, 2) unit edge normals
    b: np.ndarray          # (n,) positive offsets
    vertices: np.ndarray   # (n, 2) CCW; vertices[i] = edge i-1 meet edge i

    @property
    def n_edges(self) -> int:
        return len(self.b)

    def area(self) -> float:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def same_shape(self, other: PrototypePolygon, tol: float = 1e-12) -> bool:
        if self is other:
            return True
        if self.n_edges != other.n_edges:
            return False
        return bool(
            np.all(np.abs(self.A - other.A) <= tol) and np.all(np.abs(self.b - other.b) <= tol)
        )

    def to_json(self) -> dict:
        meta = getattr(self, "_regular_meta", None)
        if meta is not None:
            return {"kind": "regular", "n": meta[0], "rotation": meta[1]}
        return {"kind": "custom", "A": self.A.tolist(), "b": self.b.tolist()}


def _vertices_from_halfspaces(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = len(b)
    verts = np.empty((n, 2))
    for i in range(n):
        j = (i - 1) % n  # vertices[i] = intersection of edges i-1 and i
        M = np.array([A[j], A[i]])
        det = np.linalg.det(M)
        if abs(det) < 1e-12:
            raise PrototypeError(f"edges {j} and {i} are parallel; not a simple polygon")
        verts[i] = np.linalg.solve(M, np.array([b[j], b[i]]))
    return verts


def _validate(A: np.ndarray, b: np.ndarray, vertices: np.ndarray) -> None:
    if np.any(b <= 0):
        raise PrototypeError("origin must be strictly inside the prototype (all b > 0)")
    resid = A @ vertices.T - b[:, None]  # (n_edges, n_vertices)
    if np.max(resid) > 1e-9:
        raise PrototypeError("vertex violates a halfspace; redundant or inconsistent rows")
    for k in range(vertices.shape[0]):
        if np.sum(np.abs(resid[:, k]) <= 1e-9) < 2:
            raise PrototypeError("vertex not on two edges; halfspace system is degenerate")
    # CCW check via signed area
    x, y = vertices[:, 0], vertices[:, 1]
    if 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) <= 0:
        raise PrototypeError("vertices are not counter-clockwise")


def regular_prototype(n_edges: int, rotation: float = 0.0) -> PrototypePolygon:
    """Regular n-gon with unit apothem: b = 1, normals at rotation + 2*pi*i/n."""
    if n_edges < 3:
        raise PrototypeError("a polygon needs at least 3 edges")
    angles = rotation + 2.0 * np.pi * np.arange(n_edges) / n_edges
    A = np.column_stack([np.cos(angles), np.sin(angles)])
    b = np.ones(n_edges)
    circum = 1.0 / np.cos(np.pi / n_edges)
    vert_angles = angles - np.pi / n_edges  # vertices[i] = edges (i-1, i) meet
    vertices = circum * np.column_stack([np.cos(vert_angles), np.sin(vert_angles)])
    proto = PrototypePolygon(A=A, b=b, vertices=vertices)
    _validate(A, b, vertices)
    object.__setattr__(proto, "_regular_meta", (int(n_edges), float(rotation)))
    return proto


def custom_prototype(A: Sequence[Sequence[float]], b: Sequence[float]) -> PrototypePolygon:
    """Prototype from raw halfspaces; rows are re-normalized and sorted CCW."""
    A = np.asarray(A, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1)
    if len(A) != len(b):
        raise PrototypeError("A and b sizes disagree")
    if len(b) < 3:
        raise PrototypeError("a polygon needs at least 3 edges")
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms < 1e-12):
        raise PrototypeError("zero normal row")
    A = A / norms[:, None]
    b = b / norms
    order = np.argsort(np.arctan2(A[:, 1], A[:, 0]))
    A, b = A[order], b[order]
    vertices = _vertices_from_halfspaces(A, b)
    _validate(A, b, vertices)
    return PrototypePolygon(A=A, b=b, vertices=vertices)


def prototype_from_json(obj: Mapping) -> PrototypePolygon:
    kind = obj.get("kind")
    if kind == "regular":
        if "n" not in obj:
            raise PrototypeError("regular prototype missing required field 'n'")
        return regular_prototype(int(obj["n"]), float(obj.get("rotation", 0.0)))
    if kind == "custom":
        if "A" not in obj or "b" not in obj:
            raise PrototypeError("custom prototype missing required field 'A' or 'b'")
        return custom_prototype(obj["A"], obj["b"])
    raise PrototypeError(f"unknown prototype kind {kind!r}")


@dataclass(frozen=True, eq=False)
class Homothet:
    """alpha * prototype + beta, with alpha > 0."""

    proto: PrototypePolygon
    alpha: float
    beta: tuple[float, float]

    def __post_init__(self):
        if self.alpha <= 0:
            raise PrototypeError("homothet scaling factor must be positive")

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        rhs = self.alpha * self.proto.b + self.proto.A @ np.asarray(self.beta)
        return self.proto.A, rhs

    def vertices(self) -> np.ndarray:
        return self.alpha * self.proto.vertices + np.asarray(self.beta)

    def contains(self, point: tuple[float, float], tol: float = 0.0) -> bool:
        A, rhs = self.halfspaces()
        return bool(np.all(A @ np.asarray(point, dtype=float) <= rhs + tol))

    def contains_many(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        A, rhs = self.halfspaces()
        pts = np.asarray(points, dtype=float)
        return np.all(pts @ A.T <= rhs[None, :] + tol, axis=1)

    def edge_points(self, per_edge: int = 48) -> np.ndarray:
        """Vertices plus evenly spaced samples along each edge."""
        v = self.vertices()
        t = np.linspace(0.0, 1.0, per_edge, endpoint=False)[:, None]
        segments = [v[i] + t * (v[(i + 1) % len(v)] - v[i]) for i in range(len(v))]
        return np.vstack(segments)

    def distance_to(self, point: tuple[float, float]) -> float:
        """Euclidean distance from point to this polygon (0 if inside)."""
        x = np.asarray(point, dtype=float)
        if self.contains(tuple(x), tol=0.0):
            return 0.0
        v = self.vertices()
        best = np.inf
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            ab = b - a
            t = float(np.clip(np.dot(x - a, ab) / np.dot(ab, ab), 0.0, 1.0))
            best = min(best, float(np.linalg.norm(x - (a + t * ab))))
        return best

    def area(self) -> float:
        return self.alpha**2 * self.proto.area()

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": [self.beta[0], self.beta[1]],
            "prototype": self.proto.to_json(),
        }


def homothet_from_json(obj: Mapping) -> Homothet:
    return Homothet(
        proto=prototype_from_json(obj["prototype"]),
        alpha=float(obj["alpha"]),
        beta=(float(obj["beta"][0]), float(obj["beta"][1])),
    )


def homothet_halfspaces(h: Homothet) -> tuple[np.ndarray, np.ndarray]:
    return h.halfspaces()


def homothet_vertices(h: Homothet) -> np.ndarray:
    return h.vertices()


def homothet_contains(h: Homothet, point: tuple[float, float], tol: float = 0.0) -> bool:
    return h.contains(point, tol)
