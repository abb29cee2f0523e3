import numpy as np
import pytest

from treespec.eigensolver import smallest_eigenpairs
from treespec.fem_2d import (
    Geometry2DError,
    GeometrySpec2D,
    _scatter_assembly,
    assemble_2d,
    build_geometry_2d,
    closed_form_component_areas,
    connector_tail_check,
    jacobian_assumption_check,
    matched_mesh_1d,
    p_eps_project,
    q_eps_lift,
)
from treespec.mesh2d import ROOT_DIRICHLET, eliminate_dirichlet, mesh_quality, mesh_rectangle, stiffness_and_mass
from treespec.tree_model import TreeSpec, build_tree

BINARY = TreeSpec(k=2, l0=1.0, r=0.5, delta=0.6, N=2, J=2)


@pytest.fixture(scope="module")
def tmesh():
    return build_geometry_2d(build_tree(BINARY), GeometrySpec2D(eps=0.2, h=0.05))


# -- geometry -----------------------------------------------------------------

def test_single_rectangle_when_J_zero():
    tree = build_tree(TreeSpec(k=2, l0=1.0, r=0.5, delta=0.6, J=0))
    tm = build_geometry_2d(tree, GeometrySpec2D(eps=0.1, h=0.05))
    assert len(tm.components) == 1
    assert tm.total_area() == pytest.approx(0.1 * 1.0, rel=1e-12)


def test_area_matches_shoelace_oracle():
    for J in (1, 2):
        tree = build_tree(TreeSpec(k=2, l0=1.0, r=0.5, delta=0.6, J=J))
        spec = GeometrySpec2D(eps=0.2, h=0.05)
        tm = build_geometry_2d(tree, spec)
        assert tm.total_area() == pytest.approx(
            closed_form_component_areas(tree, spec), rel=1e-10)


def test_area_increments_grow_when_rd_large():
    # r d > 1/2 makes the generation contributions grow without bound
    spec = GeometrySpec2D(eps=0.1, h=0.05)
    areas = []
    for J in range(1, 5):
        tree = build_tree(TreeSpec(k=2, l0=1.0, r=0.9, delta=0.6, J=J))
        areas.append(closed_form_component_areas(tree, spec))
    increments = np.diff(areas)
    assert np.all(np.diff(increments) > 0)


def test_component_mesh_quality(tmesh):
    for comp in tmesh.components:
        angle, _ = mesh_quality(comp.mesh)
        assert angle >= 20.0


def test_geometry_validation_errors():
    tree = build_tree(BINARY)
    with pytest.raises(Geometry2DError):
        build_geometry_2d(tree, GeometrySpec2D(eps=1.5))
    with pytest.raises(Geometry2DError):
        build_geometry_2d(build_tree(TreeSpec(k=3, J=1)), GeometrySpec2D(eps=0.1))
    # cuts consuming an edge: huge eps against short deep edges
    with pytest.raises(Geometry2DError):
        build_geometry_2d(build_tree(TreeSpec(k=2, l0=0.2, r=0.3, delta=0.9, J=2)),
                          GeometrySpec2D(eps=0.9))


def test_interfaces_identified_once(tmesh):
    # every global dof appears in at most one edge and one connector copy;
    # total node count is consistent with the shared-interface bookkeeping
    seen = {}
    for comp in tmesh.components:
        for g in comp.gids:
            seen[g] = seen.get(g, 0) + 1
    counts = np.array(list(seen.values()))
    assert counts.max() <= 2
    assert len(seen) == tmesh.n_nodes


# -- assembly -----------------------------------------------------------------

def test_k1_J0_matches_interval_spectrum():
    tree = build_tree(TreeSpec(k=1, l0=1.0, r=0.5, delta=0.6, J=0))
    tm = build_geometry_2d(tree, GeometrySpec2D(eps=0.05, h=0.02))
    sysd = assemble_2d(tm)
    spec = smallest_eigenpairs(sysd.K, sysd.M, 2, with_vectors=False)
    assert spec.values[0] == pytest.approx((np.pi / 2) ** 2, rel=0.01)
    assert spec.values[1] == pytest.approx((3 * np.pi / 2) ** 2, rel=0.02)


def test_constant_potential_shift(tmesh):
    base = assemble_2d(tmesh)
    shifted = assemble_2d(tmesh, W=lambda t, s: 2.0 * np.ones_like(t))
    s0 = smallest_eigenpairs(base.K, base.M, 3, with_vectors=False)
    s2 = smallest_eigenpairs(shifted.K, shifted.M, 3, with_vectors=False)
    assert np.allclose(s2.values, s0.values + 2.0, atol=1e-8)


def test_fem_second_order_convergence():
    # single tube, Dirichlet at the bottom: lambda_1 error is O(h^2)
    exact = (np.pi / 2) ** 2

    def lam(n_axial):
        mesh = mesh_rectangle(0.1, 1.0, 3, n_axial, dirichlet_bottom=True)
        K, M = stiffness_and_mass(mesh)
        dn = np.unique(mesh.boundary_edges[mesh.boundary_tags == ROOT_DIRICHLET])
        Kf, Mf, _ = eliminate_dirichlet(K, M, dn)
        return smallest_eigenpairs(Kf, Mf, 1, with_vectors=False).values[0]

    e1 = abs(lam(25) - exact)
    e2 = abs(lam(50) - exact)
    assert 3.5 <= e1 / e2 <= 4.5


# -- P and Q maps -------------------------------------------------------------

def test_p_eps_preserves_constants(tmesh):
    matched = matched_mesh_1d(tmesh)
    u = np.ones(tmesh.n_nodes)
    pu = p_eps_project(tmesh, matched, u)
    assert np.allclose(pu, 1.0, atol=1e-12)


def test_p_eps_linear_in_theta_on_edges(tmesh):
    matched = matched_mesh_1d(tmesh)
    theta = np.zeros(tmesh.n_nodes)
    # assign edge charts last: stations must carry the exact axial coordinate
    # (the connector theta map is only approximate on shared section nodes)
    for comp in sorted(tmesh.components, key=lambda c: c.kind == "edge"):
        theta[comp.gids] = comp.theta
    pu = p_eps_project(tmesh, matched, theta)
    for dof in matched.station_dof_rows:
        assert pu[dof] == pytest.approx(matched.mesh.dof_t[dof], abs=1e-10)


def test_p_eps_commutes_with_scaling(tmesh):
    matched = matched_mesh_1d(tmesh)
    rng = np.random.default_rng(3)
    u = rng.standard_normal(tmesh.n_nodes)
    p1 = p_eps_project(tmesh, matched, 3.0 * u)
    p2 = 3.0 * p_eps_project(tmesh, matched, u)
    assert np.allclose(p1, p2, atol=1e-12)


def test_q_eps_lifts_constants(tmesh):
    matched = matched_mesh_1d(tmesh)
    f = np.ones(matched.mesh.n_dofs)
    u = q_eps_lift(tmesh, matched, f)
    assert np.allclose(u, 1.0, atol=1e-10)


def test_q_then_p_is_identity_at_stations(tmesh):
    matched = matched_mesh_1d(tmesh)
    rng = np.random.default_rng(11)
    f = rng.standard_normal(matched.mesh.n_dofs)
    back = p_eps_project(tmesh, matched, q_eps_lift(tmesh, matched, f))
    stations = np.array(sorted(matched.station_dof_rows))
    assert np.allclose(back[stations], f[stations], atol=1e-12)


def test_q_energy_bound_random_fields(tmesh):
    # Dirichlet energy of the lift is bounded by eps * weighted 1-D energy
    from treespec.connector import analyze_connector
    from treespec.operator_1d import assemble_1d, build_rho_Q, rho_star_profile

    tree = tmesh.tree
    eps = tmesh.spec2d.eps
    matched = matched_mesh_1d(tmesh)
    _, _, _, _, consts = analyze_connector(0.6, 0.3, h=0.06, section_intervals=10)
    rq = build_rho_Q(tree, consts, eps, zones=tmesh.zones())
    sysQ = assemble_1d(tree, matched.mesh, rq, rho_star_profile(tree))
    Kg, _ = _scatter_assembly(tmesh)
    rng = np.random.default_rng(21)
    for _ in range(100):
        f = rng.standard_normal(matched.mesh.n_dofs)
        f[0] = 0.0
        u = q_eps_lift(tmesh, matched, f)
        lhs = u @ (Kg @ u)
        rhs = eps * (f[sysQ.free] @ (sysQ.K @ f[sysQ.free]))
        assert lhs <= rhs * (1 + 1e-9)


def test_p_energy_bound_random_fields(tmesh):
    from treespec.connector import analyze_connector
    from treespec.operator_1d import assemble_1d, build_rho_P, rho_star_profile

    tree = tmesh.tree
    eps = tmesh.spec2d.eps
    matched = matched_mesh_1d(tmesh)
    _, _, _, _, consts = analyze_connector(0.6, 0.3, h=0.06, section_intervals=10)
    rp = build_rho_P(tree, consts, eps, zones=tmesh.zones())
    sysP = assemble_1d(tree, matched.mesh, rp, rho_star_profile(tree))
    Kg, _ = _scatter_assembly(tmesh)
    rng = np.random.default_rng(22)
    for _ in range(100):
        v = rng.standard_normal(tmesh.n_nodes)
        v[tmesh.root_nodes] = 0.0
        pv = p_eps_project(tmesh, matched, v)
        lhs = eps * (pv[sysP.free] @ (sysP.K @ pv[sysP.free]))
        rhs = v @ (Kg @ v)
        assert lhs <= rhs * (1 + 1e-9)


# -- diagnostics --------------------------------------------------------------

def test_connector_tail_zero_and_disjoint_fields(tmesh):
    assert connector_tail_check(tmesh, np.zeros(tmesh.n_nodes)) == 0.0
    # field supported on the generation-0 tube away from its connector end
    u = np.zeros(tmesh.n_nodes)
    comp = tmesh.components[0]
    inside = comp.mesh.nodes[:, 1] < 0.5
    u[comp.gids[inside]] = comp.mesh.nodes[inside, 1]
    assert connector_tail_check(tmesh, u) == 0.0


def test_connector_tail_bounded_over_eps():
    tree = build_tree(BINARY)
    ratios = []
    for eps in (0.2, 0.1, 0.05):
        tm = build_geometry_2d(tree, GeometrySpec2D(eps=eps, h=0.04))
        sysd = assemble_2d(tm)
        spec = smallest_eigenpairs(sysd.K, sysd.M, 1)
        u = np.zeros(tm.n_nodes)
        u[sysd.free] = spec.vectors[:, 0]
        ratios.append(connector_tail_check(tm, u))
    assert max(ratios) <= 5.0 * min(r for r in ratios if r > 0)
    assert max(ratios) < 10.0


def test_jacobian_check_within_bound():
    rep = jacobian_assumption_check(r=0.5, d=0.6, c=0.3)
    assert rep.d_le_p
    assert rep.within_bound
    assert rep.sup_derivative <= rep.bound + 1e-12
    assert rep.jacobian_positive
    assert rep.monotonicity_constant == 1.0


def test_jacobian_check_c_zero_monomial_bound():
    rep = jacobian_assumption_check(r=0.5, d=0.5, c=0.01)
    # with tiny c the derivative is essentially (r/p)^j <= 1
    assert rep.sup_derivative <= 1.0 + 2 * 0.01


def test_jacobian_grid_matches_analytic_sup():
    rep = jacobian_assumption_check(r=0.5, d=0.6, c=0.3, grid=501)
    assert rep.grid_sup <= rep.sup_derivative + 1e-12
    assert rep.grid_sup == pytest.approx(rep.sup_derivative, abs=1e-12)


def test_jacobian_warns_when_d_exceeds_p():
    with pytest.warns(UserWarning):
        jacobian_assumption_check(r=0.3, d=0.9, c=0.1)
