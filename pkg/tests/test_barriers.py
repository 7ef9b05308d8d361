import dataclasses
import math

import numpy as np
import pytest

from collar.barriers import (
    BarrierConstants,
    BarrierParams,
    build_barrier,
    build_boundary_potential,
    build_miller_barrier,
    select_barrier_constants,
    select_localization_radius,
    verify_barrier_residual,
)
from collar.errors import ConfigError, GeometryError, RegimeError
from collar.geometry import Domain, build_grid, collar_decomposition
from collar.models import (
    BoundaryData,
    DensityModel,
    InitialData,
    Nonlinearity,
    PowerMajorant,
)
from collar.operators import assemble_diffusion


class TestBoundaryPotential:
    def test_constant_majorant_closed_form(self):
        # majorant 1, cap 1, margin 1: value d - d^2/2, curvature -1.
        pot = build_boundary_potential(PowerMajorant(1.0, 0.0), 1.0, curvature_margin=1.0)
        ds = np.linspace(0.0, 1.0, 33)
        assert np.max(np.abs(pot.at_distance(ds) - (ds - 0.5 * ds**2))) <= 1e-12
        assert pot.at_distance(1.0) == pytest.approx(0.5)
        dd = 1e-5
        curv = (pot.at_distance(0.4 + dd) - 2 * pot.at_distance(0.4) + pot.at_distance(0.4 - dd)) / dd**2
        assert curv == pytest.approx(-1.0, abs=1e-5)

    def test_log_majorant_closed_form(self):
        pot = build_boundary_potential(PowerMajorant(1.0, 1.0), 1.0, curvature_margin=1.0)
        ds = np.array([0.1, 0.3, 0.7, 1.0])
        expected = ds * (1.0 - np.log(ds))
        assert np.max(np.abs(pot.at_distance(ds) - expected)) <= 1e-12
        assert pot.at_distance(1.0) == pytest.approx(1.0)

    def test_divergent_majorant_rejected(self):
        with pytest.raises(RegimeError):
            build_boundary_potential(PowerMajorant(1.0, 3.0), 1.0)

    def test_vanishes_at_boundary(self):
        # Limit sampling at 1e-2, 1e-4, 1e-6 of the cap, decreasing to 0.
        pot = build_boundary_potential(PowerMajorant(1.0, 1.5), 1.0, curvature_margin=1.0)
        vals = pot.at_distance(np.array([1e-2, 1e-4, 1e-6]))
        assert np.all(np.diff(vals) < 0.0)
        assert vals[-1] < 1e-2 * pot.at_distance(1.0)
        assert pot.at_distance(0.0) == 0.0

    def test_positive_on_geometric_sample(self):
        pot = build_boundary_potential(PowerMajorant(2.0, 0.5), 0.5)
        ds = 0.5 * 2.0 ** (-np.arange(1, 21, dtype=float))
        assert np.all(pot.at_distance(ds) > 0.0)

    def test_numeric_table_matches_closed_form(self):
        pot_num = build_boundary_potential(lambda e: e**-1.2, 0.5, curvature_margin=1.0)
        pot_cf = build_boundary_potential(PowerMajorant(1.0, 1.2), 0.5, curvature_margin=1.0)
        ds = np.linspace(1e-4, 0.5, 61)
        rel = np.abs(pot_num.at_distance(ds) - pot_cf.at_distance(ds)) / pot_cf.at_distance(ds)
        # Table interpolation limits the numeric path, not the quadrature.
        assert np.max(rel) <= 1e-4

    @pytest.mark.parametrize(
        "domain",
        [
            Domain.interval(0.0, 1.0),
            Domain.ball(1.0, dim=2),
            Domain.annulus(1.0, 2.0, dim=3),
        ],
    )
    def test_discrete_laplacian_dominates_density(self, domain):
        # With margin 2 the discrete Laplacian of the composed potential
        # stays below -rho at every collar node.
        grid = build_grid(domain, 161)
        rho = DensityModel.power_law(0.5, domain)
        pot = build_boundary_potential(rho.majorant, domain.collar_cap, curvature_margin=2.0)
        op = assemble_diffusion(grid)
        vals = pot.at_distance(grid.distances)
        lap = op.apply(vals)
        cls = collar_decomposition(grid, domain.collar_cap)
        idx = np.concatenate([cls.collar, cls.interface])
        idx = idx[(idx >= 1) & (idx <= grid.n - 2)]
        bound = -np.asarray(rho.rho(grid.nodes[idx])) + 10.0 * grid.h
        assert np.all(lap[idx] <= bound + 1e-9)


class TestMillerBarrier:
    def test_profile_laplacian_worked_value(self):
        dom = Domain.ball(3.0, dim=2)
        mb = build_miller_barrier(dom, 3.0, radius=1.0, steepness=2.0)
        # Unscaled profile Laplacian at unit distance from the center:
        # (2aN - 4 a^2 s^2) e^{-a s^2} = -8 e^{-2}.
        unscaled = mb.profile_laplacian(1.0) / mb.amplitude
        assert unscaled == pytest.approx(-8.0 * math.exp(-2.0), rel=1e-12)
        # Amplitude is raised until the whole region meets -1.
        s = np.linspace(mb.radius, mb.region_reach, 1001)
        assert np.max(mb.profile_laplacian(s)) <= -1.0

    def test_vanishes_at_anchor_positive_inside(self):
        dom = Domain.interval(0.0, 1.0)
        mb = build_miller_barrier(dom, 0.0, radius=0.25)
        assert mb.evaluate(0.0) == pytest.approx(0.0, abs=1e-15)
        xs = np.linspace(0.01, 1.0, 50)
        assert np.all(mb.evaluate(xs) > 0.0)

    def test_critical_steepness_rejected(self):
        dom = Domain.interval(0.0, 1.0)
        with pytest.raises(GeometryError):
            build_miller_barrier(dom, 0.0, radius=0.5, steepness=1.0 / (2 * 0.5**2))

    def test_annulus_inner_radius_bound(self):
        dom = Domain.annulus(0.2, 1.2, dim=2)
        with pytest.raises(GeometryError):
            build_miller_barrier(dom, 0.2, radius=0.5)
        build_miller_barrier(dom, 0.2, radius=0.2)

    def test_discrete_laplacian_below_minus_one(self):
        dom = Domain.interval(0.0, 2.0)
        grid = build_grid(dom, 401)
        mb = build_miller_barrier(dom, 0.0, radius=0.5)
        op = assemble_diffusion(grid)
        lap = op.apply(mb.evaluate(grid.nodes))
        region = (grid.nodes <= 0.5) & (np.arange(grid.n) >= 1)
        assert np.all(lap[region] <= -1.0 + 10.0 * grid.h)

    def test_radial_discrete_laplacian_below_minus_one(self):
        dom = Domain.ball(1.0, dim=3)
        grid = build_grid(dom, 401)
        mb = build_miller_barrier(dom, 1.0, radius=0.3)
        op = assemble_diffusion(grid)
        lap = op.apply(mb.evaluate(grid.nodes))
        region = (np.abs(grid.nodes - 1.0) <= 0.3) & (np.arange(grid.n) <= grid.n - 2)
        assert np.all(lap[region] <= -1.0 + 10.0 * grid.h)


def _timed_params(**overrides):
    base = dict(
        inf_rho=1.0,
        sup_rho=1.0,
        alpha0=1.0,
        delta=0.5,
        phi_scale=1.0,
        eta_cap=0.1,
        bound_K=1.1,
        dim=1,
        pot_edge=0.35,
    )
    base.update(overrides)
    return BarrierParams(**base)


class TestConstantSelection:
    def test_worked_potential_timed_lower(self):
        G = Nonlinearity.linear(1.0)
        c = select_barrier_constants("potential-timed", "lower", G, _timed_params())
        # beta = lambda = (G(1.1) - G(-1.1)) / 0.25 = 8.8, M = 26.4, then 1.05x.
        assert c.beta == pytest.approx(8.8 * 1.05, rel=1e-12)
        assert c.lam == pytest.approx(8.8 * 1.05, rel=1e-12)
        assert c.M == pytest.approx(26.4 * 1.05, rel=1e-12)

    def test_stationary_pointwise_rule(self):
        G = Nonlinearity.linear(1.0)
        c = select_barrier_constants(
            "potential-stationary", "lower", G, _timed_params(phi_scale=1.0)
        )
        beta_raw = (1.0 + 1.1) / 0.25
        assert c.beta == pytest.approx(beta_raw * 1.05, rel=1e-12)
        assert c.M == pytest.approx(2.0 * beta_raw * 1.05, rel=1e-12)
        assert c.lam is None

    def test_miller_timed_rules(self):
        G = Nonlinearity.linear(1.0)
        c = select_barrier_constants("miller-timed", "upper", G, _timed_params(sup_rho=2.0))
        num = 1.1 + 1.0
        lam_raw = num / 0.25
        assert c.lam == pytest.approx(lam_raw * 1.05, rel=1e-12)
        assert c.M == pytest.approx(max(2 * lam_raw * 0.5 * 2.0, num / 0.35) * 1.05, rel=1e-12)
        assert c.beta is None

    def test_degenerate_timed_rejected(self):
        G = Nonlinearity.porous_medium(2.0)
        with pytest.raises(RegimeError):
            select_barrier_constants("miller-timed", "lower", G, _timed_params(alpha0=0.0))

    def test_potential_case_needs_positive_infimum(self):
        G = Nonlinearity.linear(1.0)
        with pytest.raises(RegimeError):
            select_barrier_constants("potential-timed", "lower", G, _timed_params(inf_rho=0.0))

    def test_miller_case_needs_bounded_density(self):
        G = Nonlinearity.linear(1.0)
        with pytest.raises(RegimeError):
            select_barrier_constants(
                "miller-stationary", "lower", G, _timed_params(sup_rho=np.inf)
            )

    @pytest.mark.parametrize("bump", ["phi_scale", "eta_cap", "bound_K"])
    def test_monotone_in_data_scales(self, bump):
        G = Nonlinearity.linear(1.0)
        base = _timed_params()
        bigger = _timed_params(**{bump: getattr(base, bump) + 0.5})
        for side in ("lower", "upper"):
            c0 = select_barrier_constants("potential-timed", side, G, base)
            c1 = select_barrier_constants("potential-timed", side, G, bigger)
            assert c1.M >= c0.M - 1e-12
            assert c1.beta >= c0.beta - 1e-12
            assert c1.lam >= c0.lam - 1e-12


@pytest.fixture
def worked_setup():
    """The nondegenerate configuration of the worked timed example."""
    dom = Domain.interval(0.0, 2.0, collar_cap=0.6)
    grid = build_grid(dom, 201)
    rho = DensityModel.constant(1.0, dom)
    G = Nonlinearity.linear(1.0)
    phi = BoundaryData.constant(1.0, horizon=1.0)
    u0 = InitialData.constant(1.0)
    pot = build_boundary_potential(rho.majorant, dom.collar_cap, curvature_margin=2.0)
    params = BarrierParams(
        inf_rho=1.0, sup_rho=1.0, alpha0=1.0, delta=0.5, phi_scale=1.0,
        eta_cap=0.1, bound_K=1.1, dim=1,
        pot_edge=float(pot.at_distance(0.5)),
    )
    return dom, grid, rho, G, phi, u0, pot, params


class TestBuildBarrier:
    def test_anchor_exactness(self, worked_setup):
        dom, grid, rho, G, phi, u0, pot, params = worked_setup
        for side, sign in (("lower", -1.0), ("upper", 1.0)):
            c = select_barrier_constants("potential-timed", side, G, params)
            b = build_barrier(
                "potential-timed", side, dom, (0.0, 0.5), 0.1, 0.0, c, pot, G, phi,
                delta=0.5, bound_K=1.1,
            )
            # All penalty terms vanish at the anchor.
            assert b.evaluate(0.0, 0.5) == pytest.approx(1.0 + sign * 0.1, rel=1e-12)

    def test_lower_edge_below_minus_K(self, worked_setup):
        dom, grid, rho, G, phi, u0, pot, params = worked_setup
        c = select_barrier_constants("potential-timed", "lower", G, params)
        b = build_barrier(
            "potential-timed", "lower", dom, (0.0, 0.5), 0.1, 0.0, c, pot, G, phi,
            delta=0.5, bound_K=1.1,
        )
        for t in (0.1, 0.5, 0.9):
            assert b.evaluate(0.5, t) <= -1.1 + 1e-9
        # The time edges also sit below -K.
        assert b.evaluate(0.25, 0.0) <= -1.1 + 1e-9

    def test_lower_below_upper_on_region(self, worked_setup):
        dom, grid, rho, G, phi, u0, pot, params = worked_setup
        lo = select_barrier_constants("potential-timed", "lower", G, params)
        hi = select_barrier_constants("potential-timed", "upper", G, params)
        bl = build_barrier("potential-timed", "lower", dom, (0.0, 0.5), 0.1, 0.0, lo,
                           pot, G, phi, delta=0.5)
        bu = build_barrier("potential-timed", "upper", dom, (0.0, 0.5), 0.1, 0.0, hi,
                           pot, G, phi, delta=0.5)
        xs = grid.nodes[bl.region_node_mask(grid)]
        for t in np.linspace(0.05, 0.95, 7):
            assert np.all(bl.evaluate(xs, t) <= bu.evaluate(xs, t) + 1e-12)

    def test_anchor_must_be_boundary(self, worked_setup):
        dom, grid, rho, G, phi, u0, pot, params = worked_setup
        c = select_barrier_constants("potential-timed", "lower", G, params)
        with pytest.raises(ConfigError):
            build_barrier("potential-timed", "lower", dom, (0.5, 0.5), 0.1, 0.0, c,
                          pot, G, phi, delta=0.5)


class TestLocalizationRadius:
    def test_constant_data_gives_cap(self):
        G = Nonlinearity.linear(1.0)
        phi = BoundaryData.constant(1.0, horizon=1.0)
        d = select_localization_radius("potential-timed", phi, G, (0.0, 0.5), 0.1, 0.0, 0.5)
        assert d == pytest.approx(0.5)

    def test_oscillating_data_shrinks_radius(self):
        G = Nonlinearity.linear(1.0)
        phi = BoundaryData.sine(0.0, 1.0, 1.0, horizon=1.0)
        d = select_localization_radius("potential-timed", phi, G, (0.0, 0.5), 0.1, 0.0, 0.5)
        assert 0.0 < d < 0.5
        # Oscillation of the lifted flux stays within sigma on the window.
        ts = np.linspace(0.5 - d, 0.5 + d, 512)
        target = G.g(phi.phi(0.0, 0.5))
        assert np.max(np.abs(G.g(phi.phi(0.0, ts)) - target)) <= 0.1 + 1e-9

    def test_stationary_uses_initial_modulus(self):
        dom = Domain.interval(0.0, 1.0)
        G = Nonlinearity.linear(1.0)
        phi = BoundaryData.constant(0.0, horizon=1.0)
        u0 = InitialData.sine(dom, 1.0)
        d = select_localization_radius(
            "potential-stationary", phi, G, (0.0, None), 0.1, 0.0, 0.25,
            initial=u0, domain=dom,
        )
        # sin(pi x) <= 0.1 requires x <= asin(0.1)/pi.
        assert d == pytest.approx(math.asin(0.1) / math.pi, rel=1e-3)


class TestResidualVerification:
    def test_worked_configuration_passes(self, worked_setup):
        dom, grid, rho, G, phi, u0, pot, params = worked_setup
        for side in ("lower", "upper"):
            c = select_barrier_constants("potential-timed", side, G, params)
            b = build_barrier("potential-timed", side, dom, (0.0, 0.5), 0.1, 0.0, c,
                              pot, G, phi, delta=0.5, bound_K=1.1)
            rep = verify_barrier_residual(b, grid, rho, G, 1e-3)
            assert rep.verdict, rep.as_dict()

    def test_underscaled_amplitude_fails(self, worked_setup):
        dom, grid, rho, G, phi, u0, pot, params = worked_setup
        c = select_barrier_constants("potential-timed", "lower", G, params)
        weak = dataclasses.replace(c, M=c.M / 100.0)
        b = build_barrier("potential-timed", "lower", dom, (0.0, 0.5), 0.1, 0.0, weak,
                          pot, G, phi, delta=0.5, bound_K=1.1)
        rep = verify_barrier_residual(b, grid, rho, G, 1e-3)
        assert not rep.verdict
        assert rep.max_residual > rep.tolerance

    def test_constant_barrier_residual_zero(self, worked_setup):
        dom, grid, rho, G, phi, u0, pot, params = worked_setup
        # M = 0 and no penalties: the barrier is constant in space and time.
        c = BarrierConstants("potential-stationary", "lower", M=0.0, lam=None,
                             beta=None, safety=1.0)
        b = build_barrier("potential-stationary", "lower", dom, (0.0, None), 0.1, 0.0,
                          c, pot, G, phi, delta=0.5)
        rep = verify_barrier_residual(b, grid, rho, G, 1e-3)
        assert rep.max_residual == pytest.approx(0.0, abs=1e-12)
        assert rep.verdict

    def test_miller_stationary_passes(self):
        dom = Domain.interval(0.0, 2.0, collar_cap=0.6)
        grid = build_grid(dom, 201)
        rho = DensityModel.constant(1.0, dom)
        G = Nonlinearity.linear(1.0)
        phi = BoundaryData.constant(1.0, horizon=1.0)
        mb = build_miller_barrier(dom, 0.0, radius=0.6)
        params = BarrierParams(
            inf_rho=1.0, sup_rho=1.0, alpha0=1.0, delta=0.5, phi_scale=1.0,
            eta_cap=0.1, bound_K=1.1, dim=1, pot_edge=float(mb.at_offset(0.5)),
        )
        for side in ("lower", "upper"):
            c = select_barrier_constants("miller-stationary", side, G, params)
            b = build_barrier("miller-stationary", side, dom, (0.0, None), 0.1, 0.0,
                              c, mb, G, phi, delta=0.5)
            rep = verify_barrier_residual(b, grid, rho, G, 1e-3)
            assert rep.verdict, rep.as_dict()

    def test_report_serializes(self, worked_setup):
        dom, grid, rho, G, phi, u0, pot, params = worked_setup
        c = select_barrier_constants("potential-timed", "lower", G, params)
        b = build_barrier("potential-timed", "lower", dom, (0.0, 0.5), 0.1, 0.0, c,
                          pot, G, phi, delta=0.5)
        rep = verify_barrier_residual(b, grid, rho, G, 1e-3)
        d = rep.as_dict()
        assert d["verdict"] == "pass"
        assert {"max_residual", "tolerance", "h", "dt"} <= set(d)
