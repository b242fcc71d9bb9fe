"""Spatial domains, boundary quadrature and boundary regions."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .error_handler import DomainError

logger = logging.getLogger(__name__)


class DomainKind(str, Enum):
    """Supported domain shapes."""
    INTERVAL = "interval"
    RECTANGLE = "rectangle"


EDGES: Dict[DomainKind, Tuple[str, ...]] = {
    DomainKind.INTERVAL: ("left", "right"),
    DomainKind.RECTANGLE: ("bottom", "right", "top", "left"),
}


def trapezoid_weights(count: int, length: float) -> np.ndarray:
    """Composite trapezoid weights for ``count`` uniform nodes on ``[0, length]``."""
    h = length / (count - 1)
    weights = np.full(count, h)
    weights[0] = weights[-1] = h / 2
    return weights


@dataclass(frozen=True)
class DomainSpec:
    """An interval ``[0, L]`` or rectangle ``[0, Lx] x [0, Ly]``.

    The Neumann condition is not stored here; it is carried by the cosine
    eigenbasis built on top of the domain.
    """

    kind: DomainKind
    lengths: Tuple[float, ...] = (1.0,)
    diffusivity: float = 1.0
    grid_resolution: int = 64

    def __post_init__(self) -> None:
        try:
            kind = DomainKind(self.kind)
        except ValueError as e:
            raise DomainError(f"Unknown domain kind: {self.kind}") from e
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))

        expected = 1 if kind == DomainKind.INTERVAL else 2
        if len(self.lengths) != expected:
            raise DomainError(
                f"{kind.value} domain needs {expected} length(s), got {len(self.lengths)}"
            )
        if any(not np.isfinite(v) or v <= 0 for v in self.lengths):
            raise DomainError(f"Domain lengths must be positive, got {self.lengths}")
        if not self.diffusivity > 0:
            raise DomainError(f"Diffusivity must be positive, got {self.diffusivity}")
        if self.grid_resolution < 4:
            raise DomainError(f"grid_resolution must be at least 4, got {self.grid_resolution}")

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def edges(self) -> Tuple[str, ...]:
        return EDGES[self.kind]

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def grid_spacing(self) -> Tuple[float, ...]:
        return tuple(length / (self.grid_resolution - 1) for length in self.lengths)

    def edge_length(self, edge: str) -> float:
        """Length of an edge (zero for the endpoints of an interval)."""
        self._check_edge(edge)
        if self.kind == DomainKind.INTERVAL:
            return 0.0
        lx, ly = self.lengths
        return lx if edge in ("bottom", "top") else ly

    def edge_points(self, edge: str, along: np.ndarray) -> np.ndarray:
        """Map along-edge coordinates to points of the domain.

        Args:
            edge: Edge identifier
            along: Along-edge coordinates, shape (m,)

        Returns:
            Points, shape (m, dim)
        """
        self._check_edge(edge)
        along = np.atleast_1d(np.asarray(along, dtype=float))
        if self.kind == DomainKind.INTERVAL:
            x = 0.0 if edge == "left" else self.lengths[0]
            return np.full((along.size, 1), x)

        lx, ly = self.lengths
        zeros = np.zeros_like(along)
        if edge == "bottom":
            return np.column_stack([along, zeros])
        if edge == "top":
            return np.column_stack([along, zeros + ly])
        if edge == "left":
            return np.column_stack([zeros, along])
        return np.column_stack([zeros + lx, along])

    def axis_grid(self, axis: int) -> np.ndarray:
        return np.linspace(0.0, self.lengths[axis], self.grid_resolution)

    def domain_grid(self) -> Tuple[np.ndarray, np.ndarray]:
        """Tensor grid including the boundary, with trapezoid weights.

        Returns:
            Tuple of points (m, dim) and weights (m,)
        """
        return _domain_grid(self)

    def interior_grid(self) -> np.ndarray:
        """Grid points strictly inside the domain, shape (m, dim)."""
        axes = [self.axis_grid(axis)[1:-1] for axis in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def contains(self, point: Sequence[float], tol: float = 1e-12) -> bool:
        """Whether a point lies in the closure of the domain."""
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dim,):
            return False
        return bool(np.all(point >= -tol) and np.all(point <= np.asarray(self.lengths) + tol))

    def on_boundary(self, point: Sequence[float], tol: float = 1e-12) -> bool:
        """Whether a point lies on the boundary."""
        if not self.contains(point, tol):
            return False
        point = np.asarray(point, dtype=float)
        lengths = np.asarray(self.lengths)
        return bool(np.any(np.abs(point) <= tol) or np.any(np.abs(point - lengths) <= tol))

    def edge_of(self, point: Sequence[float], tol: float = 1e-12) -> Tuple[str, float]:
        """Return an edge containing a boundary point and its along-edge coordinate."""
        if not self.on_boundary(point, tol):
            raise DomainError(f"Point {tuple(point)} is not on the boundary")
        point = np.asarray(point, dtype=float)
        if self.kind == DomainKind.INTERVAL:
            return ("left", 0.0) if abs(point[0]) <= tol else ("right", 0.0)
        lx, ly = self.lengths
        x, y = point
        if abs(y) <= tol:
            return "bottom", float(x)
        if abs(x - lx) <= tol:
            return "right", float(y)
        if abs(y - ly) <= tol:
            return "top", float(x)
        return "left", float(y)

    def _check_edge(self, edge: str) -> None:
        if edge not in self.edges:
            raise DomainError(f"Unknown edge '{edge}' for {self.kind.value} domain")


@lru_cache(maxsize=32)
def _domain_grid(domain: DomainSpec) -> Tuple[np.ndarray, np.ndarray]:
    axes = [domain.axis_grid(axis) for axis in range(domain.dim)]
    axis_weights = [trapezoid_weights(domain.grid_resolution, L) for L in domain.lengths]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([m.ravel() for m in mesh])
    weights = axis_weights[0]
    for extra in axis_weights[1:]:
        weights = np.outer(weights, extra).ravel()
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    """Quadrature nodes of the whole boundary, edge by edge."""

    domain: DomainSpec
    node_edges: Tuple[str, ...]
    along: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    edge_slices: Dict[str, slice]

    @property
    def node_count(self) -> int:
        return len(self.node_edges)


@lru_cache(maxsize=32)
def boundary_grid(domain: DomainSpec) -> BoundaryGrid:
    """Build (and cache) the full-boundary quadrature of a domain.

    Interval endpoints carry counting weight 1. Rectangle edges use
    ``grid_resolution`` uniform nodes with composite trapezoid weights; the
    corners appear once on each adjacent edge.
    """
    node_edges: List[str] = []
    along: List[np.ndarray] = []
    points: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    edge_slices: Dict[str, slice] = {}

    start = 0
    for edge in domain.edges:
        if domain.kind == DomainKind.INTERVAL:
            s = np.zeros(1)
            w = np.ones(1)
        else:
            length = domain.edge_length(edge)
            s = np.linspace(0.0, length, domain.grid_resolution)
            w = trapezoid_weights(domain.grid_resolution, length)
        node_edges.extend([edge] * s.size)
        along.append(s)
        points.append(domain.edge_points(edge, s))
        weights.append(w)
        edge_slices[edge] = slice(start, start + s.size)
        start += s.size

    grid = BoundaryGrid(
        domain=domain,
        node_edges=tuple(node_edges),
        along=np.concatenate(along),
        points=np.vstack(points),
        weights=np.concatenate(weights),
        edge_slices=edge_slices,
    )
    for array in (grid.along, grid.points, grid.weights):
        array.setflags(write=False)
    return grid


@dataclass(frozen=True)
class EdgePiece:
    """A closed interval ``[start, end]`` along one edge of the boundary."""

    edge: str
    start: float = 0.0
    end: Optional[float] = None

    def resolved(self, domain: DomainSpec) -> "EdgePiece":
        """Fill in a missing end with the edge length."""
        end = domain.edge_length(self.edge) if self.end is None else self.end
        return EdgePiece(self.edge, float(self.start), float(end))


def _merge_intervals(intervals: Iterable[Tuple[float, float]]) -> List[Tuple[float, float]]:
    merged: List[Tuple[float, float]] = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


@dataclass(frozen=True, eq=False)
class BoundaryRegion:
    """A boundary region Γ described by edge pieces, with its quadrature.

    ``node_indices`` point into :func:`boundary_grid`; the weight of a node is
    the measure of Γ inside the node's trapezoid dual cell, so the weights add
    up to the measure of Γ and never decrease when Γ grows. A piece end that
    falls between grid nodes gives the first node past it a weight equal to the
    overlap, so quadrature nodes may sit up to half a grid step outside Γ and
    restricted traces are sampled there.
    """

    domain: DomainSpec
    pieces: Tuple[EdgePiece, ...]
    name: str
    node_indices: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_pieces(
        cls,
        domain: DomainSpec,
        pieces: Sequence[EdgePiece],
        name: str = "gamma",
    ) -> "BoundaryRegion":
        """Validate pieces and assemble the region quadrature.

        Args:
            domain: Domain the region belongs to
            pieces: Edge pieces making up the region
            name: Region identifier used in reports

        Returns:
            BoundaryRegion
        """
        if not pieces:
            raise DomainError(f"Region '{name}' is empty")

        resolved = tuple(piece.resolved(domain) for piece in pieces)
        _validate_pieces(domain, resolved, name)

        grid = boundary_grid(domain)
        weights = np.zeros(grid.node_count)
        for piece in resolved:
            edge_slice = grid.edge_slices[piece.edge]
            if domain.kind == DomainKind.INTERVAL:
                weights[edge_slice] += 1.0
                continue
            s = grid.along[edge_slice]
            h = domain.edge_length(piece.edge) / (s.size - 1)
            lo = np.maximum(s - h / 2, 0.0)
            hi = np.minimum(s + h / 2, domain.edge_length(piece.edge))
            overlap = np.minimum(hi, piece.end) - np.maximum(lo, piece.start)
            weights[edge_slice] += np.maximum(overlap, 0.0)

        node_indices = np.flatnonzero(weights > 0)
        region_weights = weights[node_indices]
        node_indices.setflags(write=False)
        region_weights.setflags(write=False)
        logger.debug(f"Region {name}: {node_indices.size} nodes, measure {region_weights.sum():.6g}")
        return cls(domain, resolved, name, node_indices, region_weights)

    @classmethod
    def full(cls, domain: DomainSpec, name: str = "boundary") -> "BoundaryRegion":
        """The whole boundary ∂Ω."""
        return cls.from_pieces(domain, [EdgePiece(edge) for edge in domain.edges], name)

    @property
    def node_count(self) -> int:
        return int(self.node_indices.size)

    @property
    def quadrature_nodes(self) -> np.ndarray:
        return boundary_grid(self.domain).points[self.node_indices]

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    @property
    def is_full(self) -> bool:
        grid = boundary_grid(self.domain)
        return self.node_count == grid.node_count and bool(np.allclose(self.weights, grid.weights))

    def subset_of(self, other: "BoundaryRegion") -> bool:
        """Exact nesting test on the piece descriptions."""
        if self.domain != other.domain:
            return False
        for piece in self.pieces:
            covers = _merge_intervals(
                (p.start, p.end) for p in other.pieces if p.edge == piece.edge
            )
            if not any(a <= piece.start and piece.end <= b for a, b in covers):
                return False
        return True


def _validate_pieces(domain: DomainSpec, pieces: Sequence[EdgePiece], name: str) -> None:
    by_edge: Dict[str, List[EdgePiece]] = {}
    for piece in pieces:
        if piece.edge not in domain.edges:
            raise DomainError(f"Region '{name}': unknown edge '{piece.edge}'", region=name)
        length = domain.edge_length(piece.edge)
        if domain.kind == DomainKind.INTERVAL:
            if piece.start != 0.0 or piece.end != 0.0:
                raise DomainError(
                    f"Region '{name}': interval endpoints take no sub-interval", region=name
                )
        elif not (0.0 <= piece.start < piece.end <= length):
            raise DomainError(
                f"Region '{name}': piece [{piece.start}, {piece.end}] is not a "
                f"non-empty part of edge '{piece.edge}' (length {length})",
                region=name,
            )
        by_edge.setdefault(piece.edge, []).append(piece)

    for edge, edge_pieces in by_edge.items():
        if domain.kind == DomainKind.INTERVAL and len(edge_pieces) > 1:
            raise DomainError(f"Region '{name}': endpoint '{edge}' listed twice", region=name)
        ordered = sorted(edge_pieces, key=lambda p: p.start)
        for left, right in zip(ordered, ordered[1:]):
            if right.start < left.end:
                raise DomainError(f"Region '{name}': overlapping pieces on '{edge}'", region=name)


@dataclass(frozen=True, eq=False)
class InflatedRegion:
    """Interior neighbourhood ω_r of a boundary region, sampled on the grid."""

    region: BoundaryRegion
    radius: float
    points: np.ndarray
    mask: np.ndarray
    covers_domain: bool = field(default=False)

    @property
    def point_count(self) -> int:
        return int(self.points.shape[0])


def _segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    return np.linalg.norm(points - (a + t[:, None] * ab), axis=1)


def distance_to_region(region: BoundaryRegion, points: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the closest piece of a region."""
    domain = region.domain
    distance = np.full(points.shape[0], np.inf)
    for piece in region.pieces:
        ends = domain.edge_points(piece.edge, np.array([piece.start, piece.end]))
        distance = np.minimum(distance, _segment_distance(points, ends[0], ends[1]))
    return distance


def inflate_region(region: BoundaryRegion, r: float) -> InflatedRegion:
    """Interior grid points within distance ``r`` of Γ (the set ω_r = E ∩ Ω).

    Args:
        region: Boundary region Γ
        r: Inflation radius

    Returns:
        InflatedRegion; ``covers_domain`` is set when ω_r takes every
        interior grid point
    """
    if not r > 0:
        raise DomainError(f"Inflation radius must be positive, got {r}")

    interior = region.domain.interior_grid()
    mask = distance_to_region(region, interior) < r
    if not mask.any():
        raise DomainError(
            f"Radius {r} is below the grid spacing {region.domain.grid_spacing}; ω_r is empty"
        )

    covers_domain = bool(mask.all())
    if covers_domain:
        logger.warning(f"Inflating region {region.name} by r={r} covers the whole domain")

    points = interior[mask]
    return InflatedRegion(region, float(r), points, mask, covers_domain)


@lru_cache(maxsize=32)
def full_boundary(domain: DomainSpec) -> BoundaryRegion:
    """Cached whole-boundary region of a domain."""
    return BoundaryRegion.full(domain)
