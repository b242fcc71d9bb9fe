"""Tests for domains, boundary quadrature and regions."""

import numpy as np
import pytest

from gamma_observer.core.domain import (
    BoundaryRegion,
    DomainKind,
    DomainSpec,
    EdgePiece,
    boundary_grid,
    full_boundary,
    inflate_region,
)
from gamma_observer.core.error_handler import DomainError


class TestDomainSpec:
    """Test cases for DomainSpec."""

    def test_interval_properties(self, interval):
        assert interval.dim == 1
        assert interval.edges == ("left", "right")
        assert interval.measure == pytest.approx(1.0)
        assert interval.edge_length("left") == 0.0

    def test_rectangle_edges(self):
        domain = DomainSpec(DomainKind.RECTANGLE, (2.0, 1.0), 1.0, 8)
        assert domain.edge_length("bottom") == 2.0
        assert domain.edge_length("left") == 1.0
        np.testing.assert_allclose(domain.edge_points("top", np.array([0.5])), [[0.5, 1.0]])
        np.testing.assert_allclose(domain.edge_points("right", np.array([0.25])), [[2.0, 0.25]])

    def test_invalid_domains(self):
        with pytest.raises(DomainError):
            DomainSpec(DomainKind.INTERVAL, (-1.0,))
        with pytest.raises(DomainError):
            DomainSpec(DomainKind.RECTANGLE, (1.0,))
        with pytest.raises(DomainError):
            DomainSpec(DomainKind.INTERVAL, (1.0,), diffusivity=0.0)
        with pytest.raises(DomainError):
            DomainSpec("disc", (1.0,))

    def test_boundary_queries(self, rectangle):
        assert rectangle.on_boundary((0.3, 0.0))
        assert not rectangle.on_boundary((0.3, 0.4))
        assert rectangle.edge_of((1.0, 0.4)) == ("right", 0.4)
        with pytest.raises(DomainError):
            rectangle.edge_of((0.5, 0.5))

    def test_domain_grid_weights(self, rectangle):
        points, weights = rectangle.domain_grid()
        assert points.shape == (16 * 16, 2)
        assert weights.sum() == pytest.approx(rectangle.measure)


class TestBoundaryRegion:
    """Test cases for BoundaryRegion."""

    def test_full_boundary_quadrature(self, rectangle):
        grid = boundary_grid(rectangle)
        assert grid.node_count == 4 * rectangle.grid_resolution
        assert grid.weights.sum() == pytest.approx(4.0)
        assert full_boundary(rectangle).is_full

    def test_partial_piece_measure(self, rectangle):
        region = BoundaryRegion.from_pieces(rectangle, [EdgePiece("bottom", 0.0, 0.5)])
        assert region.measure == pytest.approx(0.5)
        assert not region.is_full
        assert np.all(region.quadrature_nodes[:, 1] == 0.0)

    def test_node_past_piece_end_carries_overlap(self, rectangle):
        grid = boundary_grid(rectangle)
        along = grid.along[grid.edge_slices["bottom"]]
        step = along[1] - along[0]
        end = along[8] + 0.7 * step
        region = BoundaryRegion.from_pieces(rectangle, [EdgePiece("bottom", 0.0, end)])
        assert region.measure == pytest.approx(end)
        x = region.quadrature_nodes[:, 0]
        outside = x > end
        assert outside.sum() == 1
        assert x[outside][0] - end <= step / 2
        assert region.weights[outside][0] == pytest.approx(end - (x[outside][0] - step / 2))

    def test_interval_endpoints(self, interval):
        region = BoundaryRegion.from_pieces(interval, [EdgePiece("right")])
        assert region.node_count == 1
        assert region.measure == 1.0
        np.testing.assert_allclose(region.quadrature_nodes, [[1.0]])

    def test_nesting(self, rectangle_nest):
        half, bottom, whole = rectangle_nest
        assert half.subset_of(bottom)
        assert bottom.subset_of(whole)
        assert half.subset_of(whole)
        assert not whole.subset_of(bottom)
        assert not bottom.subset_of(half)

    def test_weights_grow_with_region(self, rectangle_nest):
        half, bottom, _ = rectangle_nest
        lookup = dict(zip(bottom.node_indices, bottom.weights))
        for index, weight in zip(half.node_indices, half.weights):
            assert weight <= lookup[index] + 1e-15

    def test_invalid_pieces(self, rectangle, interval):
        with pytest.raises(DomainError, match="unknown edge"):
            BoundaryRegion.from_pieces(rectangle, [EdgePiece("middle")])
        with pytest.raises(DomainError, match="non-empty part"):
            BoundaryRegion.from_pieces(rectangle, [EdgePiece("bottom", 0.5, 2.0)])
        with pytest.raises(DomainError, match="overlapping"):
            BoundaryRegion.from_pieces(
                rectangle, [EdgePiece("left", 0.0, 0.6), EdgePiece("left", 0.5, 1.0)]
            )
        with pytest.raises(DomainError, match="no sub-interval"):
            BoundaryRegion.from_pieces(interval, [EdgePiece("left", 0.0, 0.5)])
        with pytest.raises(DomainError, match="empty"):
            BoundaryRegion.from_pieces(rectangle, [])


class TestInflateRegion:
    """Test cases for inflate_region."""

    def test_small_radius(self, rectangle):
        region = BoundaryRegion.from_pieces(rectangle, [EdgePiece("bottom")])
        inflated = inflate_region(region, 0.2)
        assert inflated.point_count > 0
        assert not inflated.covers_domain
        assert np.all(inflated.points[:, 1] < 0.2)

    def test_radius_below_spacing(self, rectangle):
        region = BoundaryRegion.from_pieces(rectangle, [EdgePiece("bottom")])
        with pytest.raises(DomainError, match="empty"):
            inflate_region(region, 1e-3)

    def test_large_radius_covers_domain(self, rectangle):
        inflated = inflate_region(full_boundary(rectangle), 10.0)
        assert inflated.covers_domain

    def test_region_nodes_are_near_neighbourhood(self, rectangle_nest):
        for region in rectangle_nest:
            for r in (0.1, 0.2, 0.5):
                inflated = inflate_region(region, r)
                for node in region.quadrature_nodes:
                    gaps = np.linalg.norm(inflated.points - node, axis=1)
                    assert gaps.min() <= r

    def test_non_positive_radius(self, rectangle):
        with pytest.raises(DomainError):
            inflate_region(full_boundary(rectangle), 0.0)
