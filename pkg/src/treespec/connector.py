"""Vertex-neighborhood analysis: partitions of unity, form matrices, constants.

A tree vertex joins one parent edge to k child edges.  Its 1-D neighborhood is
a star of k+1 arms (the skeleton); its 2-D counterpart is a Lipschitz polygon
(the connector) whose boundary carries one parent section and k child sections.
This module builds affine partitions of unity on the star and discrete harmonic
ones on the connector, assembles the energy/mass form matrices of both, solves
the section-constrained minimization problems, and extracts the two-sided
equivalence constants that enter the modified weights of the width-weighted
operators.

Arm 0 is always the parent arm.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh2d import (
    Mesh2D,
    mesh_polygon,
    section_average_weights,
    stiffness_and_mass,
)


class ConnectorError(ValueError):
    """Invalid connector geometry or violated form-matrix invariant."""


# ---------------------------------------------------------------------------
# 1-D skeleton star
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SkeletonStar:
    """Star of k+1 arms around a vertex; arm 0 is the parent arm.

    Arm lengths default to 1 (canonical scale); arm weights carry the
    piecewise-constant weight of the incident edges.
    """

    arm_lengths: np.ndarray
    arm_weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "arm_lengths", np.asarray(self.arm_lengths, float))
        object.__setattr__(self, "arm_weights", np.asarray(self.arm_weights, float))
        if len(self.arm_lengths) != len(self.arm_weights):
            raise ConnectorError("arm length/weight count mismatch")
        if np.any(self.arm_lengths <= 0) or np.any(self.arm_weights <= 0):
            raise ConnectorError("arm lengths and weights must be positive")

    @property
    def k(self) -> int:
        return len(self.arm_lengths) - 1

    def scaled(self, factor: float) -> "SkeletonStar":
        """Star scaled by factor (lengths only; weights are carried values)."""
        return SkeletonStar(self.arm_lengths * factor, self.arm_weights)

    @staticmethod
    def regular(k: int, delta: float, N: int = 2, omega: float = 1.0,
                arm_lengths=None) -> "SkeletonStar":
        """Star of a regular-tree vertex: parent weight 1, children delta**(N-1),
        times the cross-section measure (the common delta**((N-1) gen) factor of
        the local rho* is divided out)."""
        lengths = np.ones(k + 1) if arm_lengths is None else np.asarray(arm_lengths)
        weights = np.full(k + 1, delta ** (N - 1) * omega)
        weights[0] = omega
        return SkeletonStar(lengths, weights)


@dataclass(frozen=True)
class PartitionOfUnity1D:
    """Affine partition on a star: psi_e has value 1/(k+1) at the center,
    1 at its own endpoint and 0 at the others."""

    star: SkeletonStar

    @property
    def center_value(self) -> float:
        return 1.0 / (self.star.k + 1)

    def value(self, e: int, arm: int, s: float) -> float:
        """psi_(e) at arclength s from the center along the given arm."""
        L = self.star.arm_lengths[arm]
        end = 1.0 if arm == e else 0.0
        t = s / L
        return self.center_value * (1.0 - t) + end * t

    def slope(self, e: int, arm: int) -> float:
        L = self.star.arm_lengths[arm]
        end = 1.0 if arm == e else 0.0
        return (end - self.center_value) / L


def build_partition_1d(star: SkeletonStar) -> PartitionOfUnity1D:
    return PartitionOfUnity1D(star)


def project_off_ones(f: np.ndarray) -> np.ndarray:
    """f minus its projection onto the normalized all-ones vector."""
    f = np.asarray(f)
    ones = np.ones(len(f)) / np.sqrt(len(f))
    return f - np.vdot(ones, f) * ones


def _affine_product_integral(L, a0, aL, b0, bL):
    """Exact integral over [0, L] of two affine functions given by endpoint values."""
    return L / 6.0 * (2 * a0 * b0 + a0 * bL + aL * b0 + 2 * aL * bL)


def skeleton_form_matrices(star: SkeletonStar,
                           partition: PartitionOfUnity1D | None = None):
    """Exact (Abar, Bbar): weighted Dirichlet and mass forms of the affine
    partition functions on the star."""
    if partition is None:
        partition = build_partition_1d(star)
    n = star.k + 1
    Abar = np.zeros((n, n))
    Bbar = np.zeros((n, n))
    cv = partition.center_value
    for arm in range(n):
        L = star.arm_lengths[arm]
        w = star.arm_weights[arm]
        for l in range(n):
            sl = partition.slope(l, arm)
            el = 1.0 if arm == l else 0.0
            for m in range(n):
                sm = partition.slope(m, arm)
                em = 1.0 if arm == m else 0.0
                Abar[l, m] += w * sl * sm * L
                Bbar[l, m] += w * _affine_product_integral(L, cv, el, cv, em)
    return Abar, Bbar


def skeleton_minimized_forms(star: SkeletonStar):
    """Energy forms of the gamma=0 and gamma=1 minimizers with prescribed
    endpoint values.

    The gamma=0 minimizer is edgewise affine with the common center value fixed
    by the weighted Kirchhoff condition; the gamma=1 minimizer is edgewise a
    cosh/sinh combination.  Both minimized energies are exact quadratic forms
    in the endpoint vector, returned as (E0bar, E1bar).
    """
    w = star.arm_weights / star.arm_lengths
    E0 = np.diag(w) - np.outer(w, w) / w.sum()

    c = star.arm_weights * np.cosh(star.arm_lengths) / np.sinh(star.arm_lengths)
    s = star.arm_weights / np.sinh(star.arm_lengths)
    E1 = np.diag(c) - np.outer(s, s) / c.sum()
    return E0, E1


def skeleton_minimizer(star: SkeletonStar, f: np.ndarray, gamma: int):
    """Minimizer of the star energy with endpoint values f; returns the center
    value and the minimized energy."""
    f = np.asarray(f, float)
    if gamma == 0:
        w = star.arm_weights / star.arm_lengths
        hv = float(w @ f / w.sum())
        energy = float(w @ (f - hv) ** 2)
    elif gamma == 1:
        c = star.arm_weights * np.cosh(star.arm_lengths) / np.sinh(star.arm_lengths)
        s = star.arm_weights / np.sinh(star.arm_lengths)
        hv = float(s @ f / c.sum())
        energy = float(c @ f ** 2 - (s @ f) ** 2 / c.sum())
    else:
        raise ConnectorError("gamma must be 0 or 1")
    return hv, energy


def skeleton_kirchhoff_residual(star: SkeletonStar, f: np.ndarray) -> float:
    """Weighted outgoing-derivative sum of the gamma=0 minimizer at the center."""
    hv, _ = skeleton_minimizer(star, f, gamma=0)
    slopes = (np.asarray(f, float) - hv) / star.arm_lengths
    return float(np.abs(np.dot(star.arm_weights, slopes)))


# ---------------------------------------------------------------------------
# 2-D connector
# ---------------------------------------------------------------------------

@dataclass
class ConnectorDomain2D:
    """Planar connector polygon with marked parent/child boundary sections."""

    vertices: np.ndarray
    sections: dict            # label "S0".."Sk" -> (edge index, t0, t1)
    section_lengths: np.ndarray
    center: np.ndarray
    arm_lengths: np.ndarray   # skeleton arm lengths, parent first
    k: int
    delta: float
    c: float

    def skeleton_star(self, N: int = 2) -> SkeletonStar:
        return SkeletonStar.regular(self.k, self.delta, N=N,
                                    omega=float(self.section_lengths[0]),
                                    arm_lengths=self.arm_lengths)


def canonical_connector(delta: float, c: float = 0.3, k: int = 2,
                        omega: float = 1.0) -> ConnectorDomain2D:
    """Reference connector at unit scale (parent section width omega).

    For k = 2 this is the pentagon built from a mirrored quadrangle pair: a
    flat base carrying the parent section, two walls of height c*omega, and a
    roof of pitch c whose two slopes carry the child sections (width
    delta*omega each, centered, so the sections stay separated at the apex).
    For k = 1 it degenerates to a trapezoid with the child section on top.
    """
    if not 0.0 < delta < 1.0:
        raise ConnectorError(f"delta must be in (0, 1), got {delta}")
    if not 0.01 <= c <= 2.0:
        raise ConnectorError(f"apex parameter c = {c} outside (0.01, 2.0)")
    if k == 2:
        e_x = max(1.25 * delta, 0.5) * omega
        e_y = c * omega
        t = c * e_x
        verts = np.array([
            [-0.5 * omega, 0.0],
            [0.5 * omega, 0.0],
            [e_x, e_y],
            [0.0, e_y + t],
            [-e_x, e_y],
        ])
        roof_len = float(np.hypot(e_x, t))
        child_len = delta * omega
        if child_len >= roof_len:
            raise ConnectorError("child section does not fit on the roof slope")
        lo = 0.5 * (1.0 - child_len / roof_len)
        hi = 0.5 * (1.0 + child_len / roof_len)
        sections = {"S0": (0, 0.0, 1.0), "S1": (2, lo, hi), "S2": (3, lo, hi)}
        section_lengths = np.array([omega, child_len, child_len])
        center = np.array([0.0, e_y])
        child_arm = 0.5 * roof_len
        arm_lengths = np.array([e_y, child_arm, child_arm])
    elif k == 1:
        H = max(c, 0.25) * omega
        verts = np.array([
            [-0.5 * omega, 0.0],
            [0.5 * omega, 0.0],
            [0.5 * delta * omega, H],
            [-0.5 * delta * omega, H],
        ])
        sections = {"S0": (0, 0.0, 1.0), "S1": (2, 0.0, 1.0)}
        section_lengths = np.array([omega, delta * omega])
        center = np.array([0.0, 0.5 * H])
        arm_lengths = np.array([0.5 * H, 0.5 * H])
    else:
        raise ConnectorError(f"planar connectors support k in {{1, 2}}, got k={k}")
    return ConnectorDomain2D(verts, sections, section_lengths, center,
                             arm_lengths, k, delta, c)


def mesh_connector(domain: ConnectorDomain2D, h: float = 0.06,
                   section_intervals: int = 3) -> Mesh2D:
    """Mesh the connector with every section resolved into the given number of
    uniform intervals (matching the tube cross subdivisions).

    The interior pitch is floored at the child-section spacing; a strong
    boundary/interior mismatch would otherwise produce sliver triangles.
    """
    pitch = float(domain.section_lengths.min()) / section_intervals
    h_eff = max(h, pitch)
    return mesh_polygon(domain.vertices, h_eff, sections=domain.sections,
                        section_intervals=section_intervals)


def harmonic_partition_2d(domain: ConnectorDomain2D, mesh: Mesh2D) -> np.ndarray:
    """Discrete harmonic partition of unity: column e solves the Laplace
    equation with value 1 on S_e, 0 on the other sections, natural elsewhere.

    Returns the (n_nodes, k+1) matrix of nodal values.
    """
    K, _ = stiffness_and_mass(mesh)
    labels = [f"S{j}" for j in range(domain.k + 1)]
    section_nodes = [np.asarray(mesh.sections[l]) for l in labels]
    constrained = np.unique(np.concatenate(section_nodes))
    free = np.setdiff1d(np.arange(mesh.n_nodes), constrained)
    K_ff = K[np.ix_(free, free)].tocsc()
    K_fc = K[np.ix_(free, constrained)]
    lu = spla.splu(K_ff)

    Phi = np.zeros((mesh.n_nodes, domain.k + 1))
    for e, nodes_e in enumerate(section_nodes):
        bc = np.zeros(len(constrained))
        bc[np.isin(constrained, nodes_e)] = 1.0
        Phi[constrained, e] = bc
        Phi[free, e] = lu.solve(-K_fc @ bc)
    return Phi


def connector_form_matrices(mesh: Mesh2D, Phi: np.ndarray):
    """(A, B): Dirichlet and mass forms of the partition fields."""
    K, M = stiffness_and_mass(mesh)
    A = Phi.T @ (K @ Phi)
    B = Phi.T @ (M @ Phi)
    return 0.5 * (A + A.T), 0.5 * (B + B.T)


def constrained_minimizer_2d(domain: ConnectorDomain2D, mesh: Mesh2D,
                             F: np.ndarray, gamma: int):
    """Minimize integral(|grad g|^2 + gamma |g|^2) subject to prescribed
    section averages F, via Lagrange multipliers appended to the FEM system.

    Returns (field, multipliers kappa, minimized energy).  The saddle system is
    nonsingular for both gamma values: for gamma = 0 its kernel would need a
    constant field with all section averages zero, which forces zero.
    """
    if gamma not in (0, 1):
        raise ConnectorError("gamma must be 0 or 1")
    F = np.asarray(F, float)
    labels = [f"S{j}" for j in range(domain.k + 1)]
    if len(F) != len(labels):
        raise ConnectorError(f"F must have length {len(labels)}")
    K, M = stiffness_and_mass(mesh)
    Kg = (K + M) if gamma == 1 else K
    C = sp.vstack([
        sp.csr_matrix(section_average_weights(mesh, mesh.sections[l]))
        for l in labels
    ])
    n, m = mesh.n_nodes, len(labels)
    saddle = sp.bmat([[Kg, C.T], [C, None]], format="csc")
    rhs = np.concatenate([np.zeros(n), F])
    sol = spla.spsolve(saddle, rhs)
    if not np.all(np.isfinite(sol)):
        raise ConnectorError("singular saddle system in constrained minimizer")
    u, kappa = sol[:n], sol[n:]
    energy = float(u @ (Kg @ u))
    return u, kappa, energy


def connector_minimized_forms(domain: ConnectorDomain2D, mesh: Mesh2D):
    """Quadratic forms F -> minimized connector energy for gamma = 0, 1.

    Assembled from the k+1 unit-vector minimizers; the minimizer depends
    linearly on F, so the minimized energy is exactly quadratic.
    """
    K, M = stiffness_and_mass(mesh)
    n = domain.k + 1
    fields0 = np.zeros((mesh.n_nodes, n))
    fields1 = np.zeros((mesh.n_nodes, n))
    for j in range(n):
        F = np.zeros(n)
        F[j] = 1.0
        fields0[:, j], _, _ = constrained_minimizer_2d(domain, mesh, F, gamma=0)
        fields1[:, j], _, _ = constrained_minimizer_2d(domain, mesh, F, gamma=1)
    E0 = fields0.T @ (K @ fields0)
    E1 = fields1.T @ ((K + M) @ fields1)
    return 0.5 * (E0 + E0.T), 0.5 * (E1 + E1.T)


# ---------------------------------------------------------------------------
# Equivalence constants
# ---------------------------------------------------------------------------

@dataclass
class FormMatrices:
    Abar: np.ndarray
    A: np.ndarray
    Bbar: np.ndarray
    B: np.ndarray
    E0bar: np.ndarray
    E1bar: np.ndarray
    E0: np.ndarray
    E1: np.ndarray


@dataclass
class EquivalenceConstants:
    alpha_Abar: float
    alpha_A: float
    alpha_Bbar: float
    alpha_B: float
    beta_Abar: float
    beta_Bbar: float
    beta_A: float
    beta_B: float

    @property
    def rho_Q_factor(self) -> float:
        return max(self.alpha_A / self.beta_Abar, self.alpha_B / self.beta_Bbar)

    @property
    def rho_P_factor(self) -> float:
        return min(self.beta_A / self.alpha_Abar, self.beta_B / self.alpha_Bbar)

    def as_dict(self) -> dict:
        return {
            "alpha_Abar": self.alpha_Abar, "alpha_A": self.alpha_A,
            "alpha_Bbar": self.alpha_Bbar, "alpha_B": self.alpha_B,
            "beta_Abar": self.beta_Abar, "beta_Bbar": self.beta_Bbar,
            "beta_A": self.beta_A, "beta_B": self.beta_B,
            "rho_Q_factor": self.rho_Q_factor, "rho_P_factor": self.rho_P_factor,
        }


def _ones_complement_basis(n: int) -> np.ndarray:
    return scipy.linalg.null_space(np.ones((1, n)))


def restricted_eigenvalues(Mtx: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix restricted to the complement of ones."""
    Q = _ones_complement_basis(Mtx.shape[0])
    return np.linalg.eigvalsh(Q.T @ Mtx @ Q)


def two_sided_constant(eigs: np.ndarray, what: str) -> float:
    """Smallest alpha with (1/alpha)|f|^2 <= f M f <= alpha |f|^2 on the
    relevant subspace, from the extremal eigenvalues."""
    lo, hi = float(eigs.min()), float(eigs.max())
    if lo <= 0:
        raise ConnectorError(f"{what} is not positive definite on its subspace "
                             f"(min eigenvalue {lo:.3e})")
    return max(hi, 1.0 / lo)


def equivalence_constants(forms: FormMatrices, kernel_tol: float = 1e-8) -> EquivalenceConstants:
    """Extract all two-sided constants from the assembled form matrices.

    alpha constants are the extremal-eigenvalue constants of the partition
    forms (A-type matrices restricted off the ones direction); beta constants
    are the smallest eigenvalues of the minimized-energy forms (gamma = 0
    restricted off ones, gamma = 1 on the full space).
    """
    for name in ("Abar", "A"):
        Mtx = getattr(forms, name)
        kernel_residual = np.abs(Mtx @ np.ones(Mtx.shape[0])).max()
        if kernel_residual > kernel_tol * max(1.0, np.abs(Mtx).max()):
            raise ConnectorError(f"{name} does not annihilate the ones vector "
                                 f"(residual {kernel_residual:.3e})")
    return EquivalenceConstants(
        alpha_Abar=two_sided_constant(restricted_eigenvalues(forms.Abar), "Abar"),
        alpha_A=two_sided_constant(restricted_eigenvalues(forms.A), "A"),
        alpha_Bbar=two_sided_constant(np.linalg.eigvalsh(forms.Bbar), "Bbar"),
        alpha_B=two_sided_constant(np.linalg.eigvalsh(forms.B), "B"),
        beta_Abar=float(restricted_eigenvalues(forms.E0bar).min()),
        beta_Bbar=float(np.linalg.eigvalsh(forms.E1bar).min()),
        beta_A=float(restricted_eigenvalues(forms.E0).min()),
        beta_B=float(np.linalg.eigvalsh(forms.E1).min()),
    )


def analyze_connector(delta: float, c: float = 0.3, k: int = 2, omega: float = 1.0,
                      N: int = 2, h: float = 0.06, section_intervals: int = 3):
    """Full pipeline: geometry, mesh, partitions, forms and constants.

    Returns (domain, mesh, Phi, FormMatrices, EquivalenceConstants).
    """
    domain = canonical_connector(delta, c=c, k=k, omega=omega)
    mesh = mesh_connector(domain, h=h, section_intervals=section_intervals)
    Phi = harmonic_partition_2d(domain, mesh)
    star = domain.skeleton_star(N=N)
    Abar, Bbar = skeleton_form_matrices(star)
    A, B = connector_form_matrices(mesh, Phi)
    E0bar, E1bar = skeleton_minimized_forms(star)
    E0, E1 = connector_minimized_forms(domain, mesh)
    forms = FormMatrices(Abar=Abar, A=A, Bbar=Bbar, B=B,
                         E0bar=E0bar, E1bar=E1bar, E0=E0, E1=E1)
    return domain, mesh, Phi, forms, equivalence_constants(forms)
