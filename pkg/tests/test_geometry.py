import numpy as np
import pytest

from collar.errors import ConfigError, DomainError, ResolutionError
from collar.geometry import (
    COLLAR,
    CORE,
    EXTERIOR,
    INTERFACE,
    Domain,
    build_grid,
    collar_decomposition,
    distance_to_boundary,
)


class TestDistance:
    def test_interval_interior_point(self):
        dom = Domain.interval(0.0, 1.0)
        assert distance_to_boundary(dom, 0.3) == pytest.approx(0.3)

    def test_interval_boundary_point_is_zero(self):
        dom = Domain.interval(0.0, 1.0)
        assert distance_to_boundary(dom, 1.0) == 0.0

    def test_annulus_radial_point(self):
        dom = Domain.annulus(1.0, 2.0, dim=2)
        assert distance_to_boundary(dom, 1.75) == pytest.approx(0.25)

    def test_ball_distance_from_outer_boundary(self):
        dom = Domain.ball(1.0, dim=2)
        assert distance_to_boundary(dom, 0.9) == pytest.approx(0.1)
        assert distance_to_boundary(dom, 0.0) == pytest.approx(1.0)

    def test_outside_raises(self):
        dom = Domain.interval(0.0, 1.0)
        with pytest.raises(DomainError):
            distance_to_boundary(dom, 1.5)

    def test_lipschitz_along_grid(self):
        grid = build_grid(Domain.interval(-1.0, 2.0), 97)
        jumps = np.abs(np.diff(grid.distances))
        assert np.all(jumps <= grid.h + 1e-14)


class TestDomainValidation:
    def test_bad_endpoints(self):
        with pytest.raises(DomainError):
            Domain.interval(1.0, 0.0)

    def test_radial_needs_dim_two(self):
        with pytest.raises(DomainError):
            Domain.ball(1.0, dim=1)

    def test_annulus_radii_ordered(self):
        with pytest.raises(DomainError):
            Domain.annulus(0.0, 2.0, dim=2)

    def test_collar_cap_below_half_width(self):
        with pytest.raises(DomainError):
            Domain.interval(0.0, 1.0, collar_cap=0.5)
        Domain.interval(0.0, 1.0, collar_cap=0.49)

    def test_default_cap_is_quarter_width(self):
        assert Domain.interval(0.0, 2.0).collar_cap == pytest.approx(0.5)


class TestGrid:
    def test_minimum_node_count(self):
        with pytest.raises(ConfigError):
            build_grid(Domain.interval(0.0, 1.0), 11)

    def test_spacing(self):
        grid = build_grid(Domain.interval(0.0, 1.0), 101)
        assert grid.h == pytest.approx(0.01)
        assert np.all(np.diff(grid.nodes) > 0)
        assert np.max(np.abs(np.diff(grid.nodes) - grid.h)) <= 1e-12 * grid.h

    def test_ball_grid_covers_radius(self):
        grid = build_grid(Domain.ball(2.0, dim=3), 201)
        assert grid.nodes[0] == 0.0
        assert grid.nodes[-1] == 2.0
        assert grid.h == pytest.approx(0.01)


class TestCollarDecomposition:
    def test_worked_interval_partition(self):
        dom = Domain.interval(0.0, 1.0, collar_cap=0.25)
        grid = build_grid(dom, 21)  # h = 0.05
        cls = collar_decomposition(grid, 0.2)
        assert set(np.round(grid.nodes[cls.interface], 10)) == {0.2, 0.8}
        assert np.all(grid.distances[cls.collar] < 0.2)
        assert np.all(grid.distances[cls.core] > 0.2)

    def test_matches_documented_example_spacing(self):
        # h = 0.1, eps = 0.2: collar {0.1}, interface {0.2}, core 0.3..0.7,
        # mirrored on the right.
        dom = Domain.interval(0.0, 2.0)
        grid = build_grid(dom, 21)  # h = 0.1
        cls = collar_decomposition(grid, 0.2)
        left_collar = [x for x in grid.nodes[cls.collar] if x < 1.0]
        assert left_collar == [pytest.approx(0.1)]
        assert sorted(np.round(grid.nodes[cls.interface], 10)) == [0.2, 1.8]

    def test_unresolved_collar(self):
        grid = build_grid(Domain.interval(0.0, 1.0), 21)  # h = 0.05
        with pytest.raises(ResolutionError):
            collar_decomposition(grid, 0.05)

    def test_ball_interface_radius(self):
        grid = build_grid(Domain.ball(1.0, dim=2), 21)  # h = 0.05
        cls = collar_decomposition(grid, 0.1)
        assert list(np.round(grid.nodes[cls.interface], 10)) == [0.9]

    def test_partition_is_exhaustive(self):
        grid = build_grid(Domain.interval(0.0, 1.0), 41)
        cls = collar_decomposition(grid, 0.1)
        interior = np.count_nonzero(grid.steps_from_boundary > 0)
        assert len(cls.collar) + len(cls.interface) + len(cls.core) == interior
        labels = cls.labels
        assert set(labels) <= {EXTERIOR, COLLAR, INTERFACE, CORE}

    @pytest.mark.parametrize("eps_pair", [(0.05, 0.1), (0.1, 0.2), (0.05, 0.2)])
    def test_core_nesting(self, eps_pair):
        eps1, eps2 = eps_pair
        grid = build_grid(Domain.interval(0.0, 1.0), 81)
        core1 = set(collar_decomposition(grid, eps1).core)
        core2 = set(collar_decomposition(grid, eps2).core)
        assert core2 <= core1

    def test_eps_above_cap_rejected(self):
        grid = build_grid(Domain.interval(0.0, 1.0), 81)
        with pytest.raises(ConfigError):
            collar_decomposition(grid, 0.3)
