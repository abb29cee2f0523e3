"""Regular rooted metric trees: generations, counting function, weights, truncation.

A regular tree has constant branching number ``k`` and geometric edge lengths
``l0 * r**j`` at generation ``j``.  Edges and vertices are indexed generation-major
(generation ``j`` holds ``k**j`` edges, and the vertex closing edge ``(j, i)`` is
labeled ``(j, i)`` as well), so no per-node adjacency storage is needed.  The root
sits at distance 0 and carries the Dirichlet condition; the vertex at the far end
of a generation-J edge is a truncated tip.
"""

from dataclasses import dataclass

import numpy as np

# Hard cap on k**J before an explicit resource error is raised.
DEFAULT_NODE_BUDGET = 1_000_000


class TreeModelError(ValueError):
    """Invalid tree parameters or out-of-domain query."""


class ResourceBudgetError(TreeModelError):
    """Requested tree exceeds the configured node budget."""


@dataclass(frozen=True)
class TreeSpec:
    """Combinatorial and metric description of a regular rooted tree.

    Parameters
    ----------
    k : branching number (children per vertex), >= 1
    l0 : length of the generation-0 edge
    r : length ratio between consecutive generations, in (0, 1)
    delta : width ratio of the inflated tree, in (0, 1)
    N : ambient dimension of the inflated tree, >= 2
    omega : cross-section measure of the reference section
    J : last generation kept by the truncation, >= 0
    """

    k: int = 2
    l0: float = 1.0
    r: float = 0.5
    delta: float = 0.6
    N: int = 2
    omega: float = 1.0
    J: int = 2

    def validate(self, node_budget: int = DEFAULT_NODE_BUDGET) -> None:
        if self.k < 1:
            raise TreeModelError(f"branching k must be >= 1, got {self.k}")
        if not self.l0 > 0:
            raise TreeModelError(f"base length l0 must be positive, got {self.l0}")
        if not 0.0 < self.r < 1.0:
            raise TreeModelError(f"length ratio r must be in (0, 1), got {self.r}")
        if not 0.0 < self.delta < 1.0:
            raise TreeModelError(f"width ratio delta must be in (0, 1), got {self.delta}")
        if self.N < 2:
            raise TreeModelError(f"dimension N must be >= 2, got {self.N}")
        if not self.omega > 0:
            raise TreeModelError(f"cross-section measure must be positive, got {self.omega}")
        if self.J < 0:
            raise TreeModelError(f"max generation J must be >= 0, got {self.J}")
        if self.k ** self.J > node_budget:
            raise ResourceBudgetError(
                f"k**J = {self.k}**{self.J} exceeds node budget {node_budget}"
            )


@dataclass(frozen=True)
class EdgeId:
    """Edge address: generation ``j`` and index within the generation."""

    j: int
    index: int

    def parent(self, k: int) -> "EdgeId":
        if self.j == 0:
            raise TreeModelError("generation-0 edge has no parent")
        return EdgeId(self.j - 1, self.index // k)

    def child(self, k: int, position: int) -> "EdgeId":
        if not 0 <= position < k:
            raise TreeModelError(f"child position must be in [0, {k}), got {position}")
        return EdgeId(self.j + 1, self.index * k + position)


@dataclass(frozen=True)
class TreePoint:
    """Point on the tree: an edge plus arclength from the edge start."""

    edge: EdgeId
    s: float


class Tree:
    """Truncated regular metric tree built from a :class:`TreeSpec`.

    Shell boundaries ``t_0 = 0 < t_1 < ... < t_{J+1} = radius`` separate the
    generations; edge ``(j, i)`` spans ``[t_j, t_{j+1}]``.  Interior (branching)
    vertices exist at ``t_{j+1}`` for ``j < J``; the counting function is
    right-continuous at the shells.
    """

    def __init__(self, spec: TreeSpec, node_budget: int = DEFAULT_NODE_BUDGET):
        spec.validate(node_budget)
        self.spec = spec
        j = np.arange(spec.J + 2)
        # t_shell[j] = distance from root to the start of generation j.
        self.t_shell = spec.l0 * (1.0 - spec.r ** j) / (1.0 - spec.r)
        self.edge_lengths = spec.l0 * spec.r ** np.arange(spec.J + 1)
        self.radius = float(self.t_shell[-1])
        self.infinite_radius = spec.l0 / (1.0 - spec.r)

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def J(self) -> int:
        return self.spec.J

    def edge_count(self, j: int | None = None) -> int:
        """Number of edges at generation ``j``, or in the whole truncated tree."""
        if j is not None:
            self._check_generation(j)
            return self.spec.k ** j
        return sum(self.spec.k ** i for i in range(self.spec.J + 1))

    def edge_length(self, j: int) -> float:
        self._check_generation(j)
        return float(self.edge_lengths[j])

    def edges(self):
        """Iterate all edge ids, generation-major."""
        for j in range(self.spec.J + 1):
            for i in range(self.spec.k ** j):
                yield EdgeId(j, i)

    def interior_vertices(self):
        """Iterate branching vertices, labeled by the edge they close."""
        for j in range(self.spec.J):
            for i in range(self.spec.k ** j):
                yield EdgeId(j, i)

    def generation_at(self, t: float) -> int:
        """Generation of the shell containing distance ``t`` (right-continuous)."""
        if not 0.0 <= t < self.radius:
            raise TreeModelError(f"t = {t} outside [0, {self.radius})")
        j = int(np.searchsorted(self.t_shell, t, side="right")) - 1
        return min(j, self.spec.J)

    def counting_function(self, t: float) -> int:
        """Number of edges meeting the sphere of radius ``t`` around the root."""
        return self.spec.k ** self.generation_at(t)

    def rho_star(self, j: int) -> float:
        """Canonical weight delta**((N-1)*gen) * |Omega| on a generation-j edge."""
        self._check_generation(j)
        return self.spec.delta ** ((self.spec.N - 1) * j) * self.spec.omega

    def rho_star_at(self, point: TreePoint) -> float:
        self._check_point(point)
        return self.rho_star(point.edge.j)

    def total_cross_section(self, t: float) -> float:
        """H(t) = g(t) * rho_star(t)."""
        j = self.generation_at(t)
        return self.spec.k ** j * self.rho_star(j)

    def tail_radius(self, j: int, truncated: bool = False) -> float:
        """Radius of the maximal connected subtree strictly beyond generation ``j``.

        With ``truncated=False`` the geometric tail of the infinite tree is
        returned; otherwise the sum stops at generation J.
        """
        if not 0 <= j <= self.spec.J:
            raise TreeModelError(f"generation {j} outside [0, {self.spec.J}]")
        r, l0 = self.spec.r, self.spec.l0
        if truncated:
            return l0 * (r ** (j + 1) - r ** (self.spec.J + 1)) / (1.0 - r)
        return l0 * r ** (j + 1) / (1.0 - r)

    def distance_from_root(self, point: TreePoint) -> float:
        self._check_point(point)
        return float(self.t_shell[point.edge.j] + point.s)

    def point_at(self, t: float, branch: int = 0) -> TreePoint:
        """Tree point on branch ``branch`` of the shell containing distance ``t``."""
        j = self.generation_at(t)
        if not 0 <= branch < self.spec.k ** j:
            raise TreeModelError(f"branch {branch} outside generation {j}")
        return TreePoint(EdgeId(j, branch), t - float(self.t_shell[j]))

    def total_length(self) -> float:
        """Sum of all edge lengths of the truncated tree."""
        k = self.spec.k
        return float(sum(k ** j * self.edge_lengths[j] for j in range(self.spec.J + 1)))

    def _check_generation(self, j: int) -> None:
        if not 0 <= j <= self.spec.J:
            raise TreeModelError(f"generation {j} outside [0, {self.spec.J}]")

    def _check_point(self, point: TreePoint) -> None:
        e = point.edge
        self._check_generation(e.j)
        if not 0 <= e.index < self.spec.k ** e.j:
            raise TreeModelError(f"edge index {e.index} outside generation {e.j}")
        if not 0.0 <= point.s <= self.edge_length(e.j) + 1e-12:
            raise TreeModelError(f"arclength {point.s} outside edge of generation {e.j}")


def build_tree(spec: TreeSpec, node_budget: int = DEFAULT_NODE_BUDGET) -> Tree:
    """Build the truncated tree, validating the spec against the node budget."""
    return Tree(spec, node_budget=node_budget)
