"""Bounded domains with exact boundary distance, grids, and collar masks.

Geometry is restricted to 1-D intervals and radially symmetric balls and
annuli, reduced to a single coordinate (position, respectively radius).  On
these shapes the distance to the boundary is exact and the Laplacian reduces
to ``u'' + (N-1)/r u'``, which is all the rest of the package needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, ResolutionError

INTERVAL = "interval"
BALL = "radial-ball"
ANNULUS = "radial-annulus"

_KINDS = (INTERVAL, BALL, ANNULUS)

#: Smallest admissible node count for a grid.
MIN_NODES = 16

#: Node classification codes used in collar masks.
EXTERIOR, COLLAR, INTERFACE, CORE = 0, 1, 2, 3

LABEL_NAMES = {EXTERIOR: "exterior", COLLAR: "collar", INTERFACE: "interface", CORE: "core"}


@dataclass(frozen=True)
class Domain:
    """Interval, ball, or annulus described by its 1-D reduced coordinate.

    ``lo`` and ``hi`` bound the reduced coordinate (endpoints for an
    interval, radii for the radial kinds; a ball has ``lo == 0``).
    ``collar_cap`` is the largest collar width the boundary machinery may
    use; it defaults to a quarter of the domain width.
    """

    kind: str
    lo: float
    hi: float
    dim: int
    collar_cap: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if not (self.lo < self.hi):
            raise DomainError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.kind == INTERVAL and self.dim != 1:
            raise DomainError("an interval is one-dimensional")
        if self.kind != INTERVAL and self.dim < 2:
            raise DomainError(f"{self.kind} requires dimension >= 2")
        if self.kind == BALL and self.lo != 0.0:
            raise DomainError("a ball starts at radius 0")
        if self.kind == ANNULUS and self.lo <= 0.0:
            raise DomainError("an annulus needs 0 < r_in < r_out")
        if not (0.0 < self.collar_cap < 0.5 * self.width):
            raise DomainError(
                f"collar cap {self.collar_cap} must lie in (0, {0.5 * self.width})"
            )

    @classmethod
    def interval(cls, a: float, b: float, collar_cap: float | None = None) -> "Domain":
        cap = 0.25 * (b - a) if collar_cap is None else collar_cap
        return cls(INTERVAL, float(a), float(b), 1, float(cap))

    @classmethod
    def ball(cls, r_out: float, dim: int, collar_cap: float | None = None) -> "Domain":
        cap = 0.25 * r_out if collar_cap is None else collar_cap
        return cls(BALL, 0.0, float(r_out), int(dim), float(cap))

    @classmethod
    def annulus(
        cls, r_in: float, r_out: float, dim: int, collar_cap: float | None = None
    ) -> "Domain":
        cap = 0.25 * (r_out - r_in) if collar_cap is None else collar_cap
        return cls(ANNULUS, float(r_in), float(r_out), int(dim), float(cap))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def boundary_points(self) -> tuple[float, ...]:
        """Reduced coordinates of the boundary components.

        The center of a ball is a regular point, not boundary.
        """
        if self.kind == BALL:
            return (self.hi,)
        return (self.lo, self.hi)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * max(1.0, self.width)
        return (x >= self.lo - tol) & (x <= self.hi + tol)

    def distance(self, x):
        """Exact distance from ``x`` (reduced coordinate) to the boundary set."""
        x = np.asarray(x, dtype=float)
        if not np.all(self.contains(x)):
            bad = np.asarray(x)[~self.contains(x)]
            raise DomainError(f"point {bad.flat[0]} outside the closed domain")
        if self.kind == BALL:
            d = self.hi - x
        else:
            d = np.minimum(x - self.lo, self.hi - x)
        d = np.maximum(d, 0.0)
        return float(d) if np.isscalar(x) or d.ndim == 0 else d

    def nearest_boundary_point(self, x):
        """Boundary coordinate closest to ``x`` (ties go to the outer side)."""
        x = np.asarray(x, dtype=float)
        if self.kind == BALL:
            out = np.full_like(x, self.hi)
        else:
            out = np.where(x - self.lo < self.hi - x, self.lo, self.hi)
        return float(out) if out.ndim == 0 else out


def distance_to_boundary(domain: Domain, x):
    """Distance from a point to the boundary; zero exactly on the boundary."""
    return domain.distance(x)


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the closed reduced coordinate, boundary nodes included."""

    domain: Domain
    nodes: np.ndarray
    h: float
    distances: np.ndarray = field(repr=False, default=None)
    steps_from_boundary: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.nodes.size

    def interior_indices(self) -> np.ndarray:
        return np.nonzero(self.steps_from_boundary > 0)[0]

    def index_of(self, x: float) -> int:
        """Index of the node nearest to coordinate ``x``."""
        i = int(round((float(x) - self.domain.lo) / self.h))
        return min(max(i, 0), self.n - 1)


def build_grid(domain: Domain, node_count: int) -> Grid:
    """Uniform grid with ``node_count`` nodes covering the closed domain."""
    if node_count < MIN_NODES:
        raise ConfigError(f"node_count {node_count} below minimum {MIN_NODES}")
    nodes = np.linspace(domain.lo, domain.hi, int(node_count))
    h = domain.width / (node_count - 1)
    d = domain.distance(nodes)
    steps = np.rint(d / h).astype(int)
    return Grid(domain=domain, nodes=nodes, h=h, distances=d, steps_from_boundary=steps)


@dataclass(frozen=True)
class NodeClassification:
    """Partition of grid nodes into exterior/collar/interface/core at one level.

    ``labels[i]`` is one of the module-level codes; the index arrays are the
    sorted node indices per class.  The interface is snapped to the grid node
    nearest to distance ``eps`` from the boundary.
    """

    eps: float
    eps_snapped: float
    labels: np.ndarray

    @property
    def exterior(self) -> np.ndarray:
        return np.nonzero(self.labels == EXTERIOR)[0]

    @property
    def collar(self) -> np.ndarray:
        return np.nonzero(self.labels == COLLAR)[0]

    @property
    def interface(self) -> np.ndarray:
        return np.nonzero(self.labels == INTERFACE)[0]

    @property
    def core(self) -> np.ndarray:
        return np.nonzero(self.labels == CORE)[0]

    @property
    def computational(self) -> np.ndarray:
        """Interface plus core nodes, the unknowns of a collar-level solve."""
        return np.nonzero(self.labels >= INTERFACE)[0]


def collar_decomposition(grid: Grid, eps: float) -> NodeClassification:
    """Classify nodes into collar (d < eps), interface (d ~ eps), core (d > eps).

    Requires ``2h <= eps <= collar_cap``.  ``eps`` is snapped to the nearest
    integer multiple of the spacing, so levels chosen as such multiples are
    classified without interpolation ambiguity.
    """
    h = grid.h
    cap = grid.domain.collar_cap
    if eps < 2.0 * h * (1.0 - 1e-12):
        raise ResolutionError(f"eps {eps} below 2h = {2 * h}: collar unresolved")
    if eps > cap * (1.0 + 1e-12):
        raise ConfigError(f"eps {eps} exceeds the collar cap {cap}")
    m = int(round(eps / h))
    steps = grid.steps_from_boundary
    labels = np.full(grid.n, CORE, dtype=int)
    labels[steps == 0] = EXTERIOR
    labels[(steps > 0) & (steps < m)] = COLLAR
    labels[steps == m] = INTERFACE
    return NodeClassification(eps=float(eps), eps_snapped=m * h, labels=labels)
