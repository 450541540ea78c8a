import math
import pickle

import numpy as np
import pytest

import ptchain.pt as pt
from ptchain.analytic import analytic_threshold_h0, flat_band_count, single_site_max_imag_h0
from ptchain.eig import Spectrum
from ptchain.errors import ConfigError, DomainError, NumericError, SweepError
from ptchain.model import (
    NoPerturbation,
    SingleSite,
    SiteClass,
    SpinChainConfig,
    TwoSiteDoublePlus,
    TwoSiteMinus,
    TwoSitePlus,
    classify_sites,
)
from ptchain.pt import (
    FlowTable,
    ThresholdResult,
    ThresholdSettings,
    certified_max_imag,
    check_breaking,
    count_flat_eigenvalues,
    coupling_sweep,
    default_gamma_max,
    default_tol,
    excludes_zero_field,
    find_threshold,
    first_broken_index,
    fit_field_response,
    flow_sweep,
    hamiltonian_at,
    is_broken,
    max_imag,
    parallel_map,
    phase_grid_gamma_hz,
    phase_grid_single_site,
)

TOL = 2e-3
CHAIN7 = SpinChainConfig(7)


class TestMaxImag:
    def test_reports_largest_positive_part(self):
        s = Spectrum(np.array([1 + 0.3j, 1 - 0.3j, 2.0]), 0.0, 0, scale=3.0)
        assert max_imag(s) == pytest.approx(0.3)

    def test_snaps_roundoff_to_zero(self):
        s = Spectrum(np.array([1 + 1e-9j, 1 - 1e-9j]), 0.0, 0, scale=1.0)
        assert max_imag(s) == 0.0
        assert max_imag(s, snap_tol=1e-10) == pytest.approx(1e-9)

    def test_falls_back_to_spectral_radius(self):
        s = Spectrum(np.array([0.5j, -0.5j]), 0.0, 0, scale=0.0)
        assert max_imag(s) == pytest.approx(0.5)

    def test_negative_snap_rejected(self):
        with pytest.raises(DomainError):
            max_imag(Spectrum(np.array([1.0]), 0.0, 0, scale=1.0), snap_tol=-1.0)

    def test_defective_cluster_roundoff_is_not_breaking(self):
        # sites 4 and 6 both sit on an exceptional point for some neighbour patterns
        h = hamiltonian_at(CHAIN7, TwoSitePlus(4, 6), 0.3)
        assert certified_max_imag(h) == 0.0
        assert certified_max_imag(hamiltonian_at(CHAIN7, TwoSitePlus(4, 6), 0.6)) > 0.1


class TestIsBroken:
    def test_unperturbed_is_never_broken(self):
        assert not is_broken(CHAIN7, NoPerturbation(), 5.0)

    def test_negative_strength(self):
        with pytest.raises(DomainError):
            is_broken(CHAIN7, TwoSitePlus(1, 7), -0.1)

    def test_edge_pair_breaks_at_quarter_coupling(self):
        chain = SpinChainConfig(5)
        assert not is_broken(chain, TwoSitePlus(1, 5), 0.2)
        assert is_broken(chain, TwoSitePlus(1, 5), 0.3)

    def test_anti_hermitian_bulk_breaks_immediately(self):
        assert is_broken(SpinChainConfig(5), TwoSiteMinus(3, 3), 0.01)

    def test_hermitian_stays_real(self):
        assert not is_broken(CHAIN7, TwoSitePlus(2, 2), 1.5)

    def test_edge_and_neighbour_pair_breaks_at_any_strength(self):
        assert is_broken(CHAIN7, TwoSitePlus(2, 1), 0.1)

    def test_anti_diagonal_single_site(self):
        chain = SpinChainConfig(6)
        assert certified_max_imag(hamiltonian_at(chain, SingleSite(2, 0.05, -0.05), 1.0)) > 0.0
        assert certified_max_imag(hamiltonian_at(chain, SingleSite(1, 0.05, -0.05), 1.0)) == 0.0

    def test_check_breaking_counts_francis_iterations(self):
        broken, iterations = check_breaking(SpinChainConfig(4), TwoSitePlus(1, 4), 0.5, solver="francis")
        assert broken
        assert iterations > 0
        assert check_breaking(CHAIN7, NoPerturbation(), 1.0) == (False, 0)


class TestDefaults:
    def test_scale_follows_coupling(self):
        assert default_gamma_max(SpinChainConfig(5, coupling_j=2.0)) == 4.0
        assert default_gamma_max(SpinChainConfig(5, field_hz=0.5)) == 4.0
        assert default_tol(SpinChainConfig(5, coupling_j=2.0)) == pytest.approx(2e-3)

    def test_zero_coupling_uses_field(self):
        assert default_tol(SpinChainConfig(5, coupling_j=0.0, field_hz=0.5)) == pytest.approx(5e-4)

    def test_settings_kwargs(self):
        kwargs = ThresholdSettings(gamma_max=1.0).as_kwargs()
        assert kwargs == {"gamma_max": 1.0, "tol": None, "snap_tol": 1e-7, "coarse_points": 64, "solver": "lapack"}


class TestFindThreshold:
    @pytest.mark.parametrize("pert, expected", [
        (TwoSitePlus(1, 7), 0.25),
        (TwoSitePlus(4, 6), 0.5),
        (TwoSitePlus(1, 4), 0.25),
        (SingleSite(1), 0.25),
        (SingleSite(4), 0.5),
        (TwoSiteMinus(1, 1), 0.25),
        (TwoSiteDoublePlus(1, 1), 0.125),
    ])
    def test_zero_field_categories(self, pert, expected):
        result = find_threshold(CHAIN7, pert)
        assert result.found
        assert result.gamma_pt == pytest.approx(expected, abs=1e-3)
        lo, hi = result.bracket
        assert lo <= result.gamma_pt <= hi
        assert hi - lo <= default_tol(CHAIN7)
        assert not result.reentrant

    @pytest.mark.parametrize("pert", [TwoSitePlus(3, 4), TwoSitePlus(2, 1), TwoSitePlus(6, 7), TwoSiteMinus(4, 4)])
    def test_zero_thresholds(self, pert):
        result = find_threshold(CHAIN7, pert)
        assert result.gamma_pt <= default_tol(CHAIN7)

    def test_hermitian_has_no_threshold(self):
        result = find_threshold(CHAIN7, TwoSitePlus(2, 2))
        assert result.gamma_pt is None
        assert not result.found
        assert result.classification is SiteClass.HERMITIAN
        assert result.bracket == (2.0, math.inf)
        assert result.evaluations == 64

    def test_unperturbed_chain(self):
        result = find_threshold(CHAIN7, NoPerturbation())
        assert result.gamma_pt is None
        assert result.evaluations == 0

    def test_francis_solver_agrees(self):
        result = find_threshold(SpinChainConfig(5), TwoSitePlus(1, 5), solver="francis")
        assert result.gamma_pt == pytest.approx(0.25, abs=1e-3)
        assert result.iterations > result.evaluations

    def test_lapack_reports_no_qr_iterations(self):
        assert find_threshold(SpinChainConfig(4), TwoSitePlus(1, 4)).iterations == 0

    @pytest.mark.parametrize("p, expected", [(1, 0.25), (3, 0.5)])
    def test_sigma_plus_and_sigma_minus_sites_agree(self, p, expected):
        chain = SpinChainConfig(6)
        plus = find_threshold(chain, SingleSite(p, 1.0, 0.0)).gamma_pt
        minus = find_threshold(chain, SingleSite(p, 0.0, 1.0)).gamma_pt
        assert plus == pytest.approx(expected, abs=TOL)
        assert minus == pytest.approx(plus, abs=TOL)

    @pytest.mark.parametrize("p, q", [(1, 6), (2, 5), (1, 3), (3, 4)])
    def test_plus_and_minus_pairs_agree(self, p, q):
        chain = SpinChainConfig(6)
        plus = find_threshold(chain, TwoSitePlus(p, q)).gamma_pt
        assert find_threshold(chain, TwoSiteMinus(p, q)).gamma_pt == pytest.approx(plus, abs=TOL)

    def test_coupling_sets_the_scale(self):
        chain = SpinChainConfig(5, coupling_j=2.0)
        result = find_threshold(chain, TwoSitePlus(1, 5))
        assert result.gamma_pt == pytest.approx(0.5, abs=2e-3)

    def test_order_of_sites_does_not_matter(self):
        a = find_threshold(CHAIN7, TwoSiteMinus(2, 5)).gamma_pt
        b = find_threshold(CHAIN7, TwoSiteMinus(5, 2)).gamma_pt
        c = find_threshold(CHAIN7, TwoSitePlus(2, 5)).gamma_pt
        assert a == pytest.approx(b, abs=1e-3)
        assert a == pytest.approx(c, abs=1e-3)

    @pytest.mark.parametrize("kwargs", [{"gamma_max": 0.0}, {"tol": -1.0}, {"coarse_points": 1}])
    def test_bad_settings(self, kwargs):
        with pytest.raises(DomainError):
            find_threshold(CHAIN7, TwoSitePlus(1, 7), **kwargs)

    def test_reentrant_breaking_is_flagged(self, monkeypatch):
        monkeypatch.setattr(pt, "check_breaking", lambda config, pert, gamma, snap_tol, solver: (0.3 < gamma < 0.6, 2))
        result = find_threshold(CHAIN7, TwoSitePlus(1, 7), gamma_max=1.0, coarse_points=21)
        assert result.reentrant
        assert result.gamma_pt == pytest.approx(0.3, abs=1e-3)
        assert result.iterations == 2 * result.evaluations

    def test_solver_failure_carries_the_point(self, monkeypatch):
        def fail(config, pert, gamma, snap_tol, solver):
            raise NumericError("solver gave up")

        monkeypatch.setattr(pt, "check_breaking", fail)
        with pytest.raises(SweepError) as info:
            find_threshold(CHAIN7, TwoSitePlus(1, 7))
        assert info.value.point["gamma"] == 0.0
        assert "solver gave up" in str(info.value)


class TestFlow:
    def test_single_bulk_site_flow(self):
        chain = SpinChainConfig(5)
        flow = flow_sweep(chain, SingleSite(3), np.linspace(0.0, 1.0, 20))
        assert flow.rows.shape == (20, 32)
        assert first_broken_index(flow) == 10
        assert count_flat_eigenvalues(flow) == flat_band_count(chain, 3) == 2 ** 4
        assert np.all(flow.max_imag_per_row()[:10] == 0.0)

    def test_rows_are_sorted(self):
        flow = flow_sweep(SpinChainConfig(4), TwoSitePlus(1, 4), [0.0, 0.5, 1.0])
        for row in flow.rows:
            order = np.lexsort((row.imag, row.real))
            np.testing.assert_array_equal(order, np.arange(row.size))

    def test_real_flow_never_breaks(self):
        flow = flow_sweep(SpinChainConfig(4), TwoSitePlus(1, 4), [0.0, 0.1, 0.2])
        assert first_broken_index(flow) is None

    @pytest.mark.parametrize("grid", [[0.5, 0.2], [-0.1, 0.3], [], [0.0, float("nan")]])
    def test_bad_grids(self, grid):
        with pytest.raises(DomainError):
            flow_sweep(SpinChainConfig(4), TwoSitePlus(1, 4), grid)

    def test_flat_count_ignores_moving_bands(self):
        rows = np.array([[0.0, 1.0, 1.0], [0.0, 1.5, 0.7], [0.0, 2.0, 0.3]], dtype=complex)
        flow = FlowTable(np.array([0.0, 0.5, 1.0]), rows, np.ones(3))
        assert count_flat_eigenvalues(flow) == 1

    def test_flat_tolerance_follows_snap_and_scale(self):
        rows = np.array([[0.0, 1.0], [1e-8, 1.0 + 5e-6]], dtype=complex)
        flow = FlowTable(np.array([0.0, 1.0]), rows, np.array([2.0, 4.0]))
        assert count_flat_eigenvalues(flow) == 1
        assert count_flat_eigenvalues(flow, snap_tol=2e-6) == 2
        assert count_flat_eigenvalues(flow, snap_tol=1e-9) == 0
        with pytest.raises(DomainError):
            count_flat_eigenvalues(flow, snap_tol=-1.0)

    def test_francis_flow_counts_iterations(self):
        flow = flow_sweep(SpinChainConfig(3), TwoSitePlus(1, 3), [0.0, 0.5], solver="francis")
        assert flow.iterations > 0


class TestPhaseGrids:
    def test_single_site_plane_matches_closed_form(self):
        chain = SpinChainConfig(5)
        axis = np.linspace(-1.0, 1.0, 9)
        grid = phase_grid_single_site(chain, 3, axis, axis)
        assert grid.max_im.shape == (9, 9)
        assert (grid.x_label, grid.y_label) == ("gamma_plus", "gamma_minus")
        for i, gm in enumerate(axis):
            for j, gp in enumerate(axis):
                assert grid.max_im[i, j] == pytest.approx(single_site_max_imag_h0(chain, 3, gp, gm), abs=1e-6)

    def test_single_site_plane_symmetries(self):
        axis = np.linspace(-1.0, 1.0, 11)
        grid = phase_grid_single_site(SpinChainConfig(5), 2, axis, axis).max_im
        np.testing.assert_allclose(grid, grid.T, atol=1e-6)
        np.testing.assert_allclose(grid, np.flip(grid).T, atol=1e-6)
        assert np.all(np.abs(np.diag(grid)) <= 1e-9)

    def test_weak_coupling_never_breaks(self):
        chain = SpinChainConfig(5, coupling_j=0.0)
        hz = [0.5, 1.0]
        grid = phase_grid_gamma_hz(chain, TwoSitePlus(1, 4), np.linspace(0.0, 5.0, 11), hz)
        assert grid.max_im.shape == (2, 11)
        assert (grid.x_label, grid.y_label) == ("gamma", "hz")
        assert np.all(grid.max_im <= 1e-9 * 0.5)

    def test_gamma_hz_plane_at_zero_field_row(self):
        grid = phase_grid_gamma_hz(SpinChainConfig(5), TwoSitePlus(1, 5), [0.1, 0.4], [0.0])
        assert grid.max_im[0, 0] == 0.0
        assert grid.max_im[0, 1] > 0.0

    def test_bad_site(self):
        with pytest.raises(DomainError):
            phase_grid_single_site(SpinChainConfig(4), 5, [0.0, 1.0], [0.0, 1.0])

    def test_francis_cells_count_iterations(self):
        chain = SpinChainConfig(3)
        assert phase_grid_single_site(chain, 2, [0.0, 1.0], [0.0], solver="francis").iterations > 0
        assert phase_grid_gamma_hz(chain, TwoSitePlus(1, 3), [0.5], [0.0, 0.2], solver="francis").iterations > 0
        assert phase_grid_single_site(chain, 2, [0.0, 1.0], [0.0]).iterations == 0


class TestFieldResponse:
    @staticmethod
    def fake_search(intercept, slope):
        def search(config, pert, **kwargs):
            gamma = intercept + slope * config.field_hz
            return ThresholdResult(gamma, (gamma, gamma), classify_sites(config, pert), 1)
        return search

    def test_linear_fit(self, monkeypatch):
        monkeypatch.setattr(pt, "find_threshold", self.fake_search(0.25, 1.5))
        fit = fit_field_response(CHAIN7, TwoSitePlus(1, 7), [0.0, 0.1, 0.2, 0.3])
        assert fit.slope == pytest.approx(1.5)
        assert fit.intercept == pytest.approx(0.25)
        assert fit.residual == pytest.approx(0.0, abs=1e-12)
        assert fit.classification is SiteClass.EDGE_INVOLVED
        assert fit.edge_sites == 2
        assert not fit.excluded_zero
        assert fit.hz_samples == [0.0, 0.1, 0.2, 0.3]

    def test_zero_field_dropped_for_bulk_pairs(self, monkeypatch):
        monkeypatch.setattr(pt, "find_threshold", self.fake_search(0.0, 2.0))
        fit = fit_field_response(CHAIN7, TwoSitePlus(3, 5), [0.0, 0.1, 0.2])
        assert fit.excluded_zero
        assert fit.hz_samples == [0.1, 0.2]
        assert fit.slope == pytest.approx(2.0)

    def test_fit_window_confines_the_line(self, monkeypatch):
        def search(config, pert, **kwargs):
            h = config.field_hz
            gamma = 0.25 + 1.5 * h + 5.0 * max(0.0, h - 0.1) ** 2
            return ThresholdResult(gamma, (gamma, gamma), classify_sites(config, pert), 10, iterations=3)

        monkeypatch.setattr(pt, "find_threshold", search)
        samples = [0.0, 0.05, 0.1, 0.2, 0.3]
        fit = fit_field_response(CHAIN7, TwoSitePlus(1, 7), samples, fit_max_hz=0.1)
        assert fit.intercept == pytest.approx(0.25)
        assert fit.slope == pytest.approx(1.5)
        assert fit.residual == pytest.approx(0.0, abs=1e-12)
        assert (fit.fitted, fit.fit_max_hz) == (3, 0.1)
        assert fit.hz_samples == samples
        assert len(fit.thresholds) == 5
        assert fit.iterations == 15

        unwindowed = fit_field_response(CHAIN7, TwoSitePlus(1, 7), samples)
        assert unwindowed.fitted == 5
        assert unwindowed.fit_max_hz is None
        assert unwindowed.residual > 1e-3

    def test_fit_window_needs_two_samples(self, monkeypatch):
        monkeypatch.setattr(pt, "find_threshold", self.fake_search(0.25, 1.0))
        with pytest.raises(DomainError, match="fit_max_hz"):
            fit_field_response(CHAIN7, TwoSitePlus(1, 7), [0.0, 0.1, 0.2], fit_max_hz=0.05)
        with pytest.raises(DomainError):
            fit_field_response(CHAIN7, TwoSitePlus(1, 7), [0.0, 0.1, 0.2], fit_max_hz=0.0)

    def test_excluded_categories(self):
        assert excludes_zero_field(SiteClass.BULK_PAIR, 0)
        assert excludes_zero_field(SiteClass.SINGLE_BULK, 0)
        assert excludes_zero_field(SiteClass.EDGE_INVOLVED, 1)
        assert not excludes_zero_field(SiteClass.EDGE_INVOLVED, 2)
        assert not excludes_zero_field(SiteClass.ADJACENT, 0)

    def test_missing_threshold_fails_the_fit(self, monkeypatch):
        def search(config, pert, **kwargs):
            if config.field_hz > 0.15:
                return ThresholdResult(None, (2.0, math.inf), SiteClass.EDGE_INVOLVED, 64)
            return ThresholdResult(0.25, (0.25, 0.25), SiteClass.EDGE_INVOLVED, 1)

        monkeypatch.setattr(pt, "find_threshold", search)
        with pytest.raises(SweepError, match="hz=0.2"):
            fit_field_response(CHAIN7, TwoSitePlus(1, 7), [0.0, 0.1, 0.2])

    def test_domain(self):
        with pytest.raises(DomainError):
            fit_field_response(CHAIN7, TwoSitePlus(2, 2), [0.0, 0.1])
        with pytest.raises(DomainError):
            fit_field_response(CHAIN7, NoPerturbation(), [0.0, 0.1])
        with pytest.raises(DomainError):
            fit_field_response(CHAIN7, TwoSitePlus(1, 7), [0.1, -0.1])
        with pytest.raises(DomainError):
            fit_field_response(CHAIN7, SingleSite(4), [0.0, 0.2])

    def test_small_chain_end_to_end(self):
        fit = fit_field_response(SpinChainConfig(5), TwoSitePlus(1, 5), [0.0, 0.1, 0.2])
        assert len(fit.thresholds) == 3
        assert fit.thresholds[0] == pytest.approx(0.25, abs=1e-3)
        assert all(r.found for r in fit.results)
        assert math.isfinite(fit.slope)


class TestCouplingSweep:
    def test_ratios_are_in_units_of_the_field(self, monkeypatch):
        def search(config, pert, **kwargs):
            gamma = 2.0 * config.coupling_j
            return ThresholdResult(gamma, (gamma, gamma), classify_sites(config, pert), 4, iterations=1)

        monkeypatch.setattr(pt, "find_threshold", search)
        sweep = coupling_sweep(SpinChainConfig(5, field_hz=-0.5), TwoSitePlus(1, 5), [0.5, 1.0, 2.0])
        assert sweep.j_grid == [0.5, 1.0, 2.0]
        assert sweep.ratios() == [(1.0, 2.0), (2.0, 4.0), (4.0, 8.0)]
        assert sweep.iterations == 3

    def test_decoupled_chain_never_breaks(self):
        sweep = coupling_sweep(SpinChainConfig(4, field_hz=0.5), TwoSitePlus(1, 4), [0.0, 1.0])
        assert sweep.thresholds[0] is None
        assert sweep.ratios()[0] == (0.0, None)
        assert sweep.ratios()[1][0] == pytest.approx(2.0)

    def test_solver_failure_names_the_coupling(self, monkeypatch):
        def search(config, pert, **kwargs):
            if config.coupling_j > 0.5:
                raise NumericError("solver gave up")
            return ThresholdResult(0.3, (0.3, 0.3), SiteClass.EDGE_INVOLVED, 1)

        monkeypatch.setattr(pt, "find_threshold", search)
        with pytest.raises(SweepError, match="J=1"):
            coupling_sweep(SpinChainConfig(4, field_hz=0.5), TwoSitePlus(1, 4), [0.5, 1.0])

    def test_domain(self):
        with pytest.raises(DomainError):
            coupling_sweep(SpinChainConfig(4), TwoSitePlus(1, 4), [0.5, 1.0])
        chain = SpinChainConfig(4, field_hz=0.5)
        with pytest.raises(DomainError):
            coupling_sweep(chain, NoPerturbation(), [0.5, 1.0])
        with pytest.raises(DomainError):
            coupling_sweep(chain, TwoSitePlus(1, 4), [-0.5, 1.0])
        with pytest.raises(DomainError):
            coupling_sweep(chain, TwoSitePlus(1, 4), [1.0, 0.5])


class TestParallel:
    def test_sequential_and_parallel_agree(self):
        args = [(2, 3), (3, 2), (5, 0)]
        assert parallel_map(pow, args, 1) == [8, 9, 1]
        assert parallel_map(pow, args, 2) == [8, 9, 1]

    def test_errors_survive_pickling(self):
        err = SweepError("flow sweep failed", {"gamma": 0.5}, NumericError("boom"))
        copy = pickle.loads(pickle.dumps(err))
        assert str(copy) == str(err) == "flow sweep failed at gamma=0.5: boom"
        config_err = pickle.loads(pickle.dumps(ConfigError("N: bad", key="N", expected="int")))
        assert (config_err.key, config_err.expected) == ("N", "int")


@pytest.mark.slow
class TestAcceptance:
    @pytest.mark.parametrize("boundary, n", [("open", 7), ("periodic", 8)])
    def test_pair_table_matches_closed_form(self, boundary, n):
        chain = SpinChainConfig(n, boundary=boundary)
        for p in range(1, n + 1):
            for q in range(1, n + 1):
                pert = TwoSitePlus(p, q)
                result = find_threshold(chain, pert)
                expected = analytic_threshold_h0(chain, pert)
                if expected is None:
                    assert result.gamma_pt is None, pert
                else:
                    assert abs(result.gamma_pt - expected) <= TOL, pert

    @pytest.mark.parametrize("n", [6, 8])
    def test_single_site_and_anti_hermitian(self, n):
        chain = SpinChainConfig(n)
        for p in range(1, n + 1):
            for pert in (SingleSite(p), TwoSiteMinus(p, p)):
                expected = analytic_threshold_h0(chain, pert)
                assert abs(find_threshold(chain, pert).gamma_pt - expected) <= TOL, pert

    @pytest.mark.parametrize("pert", [
        TwoSitePlus(1, 4),
        TwoSitePlus(3, 4),
        TwoSitePlus(2, 3),
        TwoSiteMinus(1, 1),
        SingleSite(2),
    ])
    def test_chain_length_independence(self, pert):
        found = [find_threshold(SpinChainConfig(n), pert).gamma_pt for n in range(4, 11)]
        assert max(found) - min(found) <= TOL
        assert abs(found[0] - analytic_threshold_h0(SpinChainConfig(4), pert)) <= TOL

    def test_field_response_structure(self):
        samples = [0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
        adjacent = fit_field_response(CHAIN7, TwoSitePlus(3, 4), [0.0] + samples)
        assert abs(adjacent.intercept) <= TOL
        assert adjacent.slope > 0

        edges = fit_field_response(CHAIN7, TwoSitePlus(1, 7), [0.0] + samples, fit_max_hz=0.1)
        assert edges.fitted == 4
        assert edges.intercept == pytest.approx(0.25, abs=5e-3)
        assert len(edges.thresholds) == len(samples) + 1

        bulk = fit_field_response(CHAIN7, TwoSiteDoublePlus(3, 5), [0.0] + samples)
        assert bulk.excluded_zero
        assert bulk.thresholds[0] < 0.25
        assert all(b > a for a, b in zip(bulk.thresholds, bulk.thresholds[1:]))

    def test_fine_single_site_plane(self):
        axis = np.linspace(-1.0, 1.0, 41)
        grid = phase_grid_single_site(SpinChainConfig(6), 3, axis, axis, jobs=-1).max_im
        np.testing.assert_allclose(grid, grid.T, atol=1e-6)
        np.testing.assert_allclose(grid, np.flip(grid).T, atol=1e-6)
        assert np.all(np.abs(np.diag(grid)) <= 1e-9)

    @pytest.mark.parametrize("p, stop, expected", [(1, 0.6, 0.25), (3, 0.8, 0.5)])
    def test_eight_site_single_site_flows(self, p, stop, expected):
        flow = flow_sweep(SpinChainConfig(8), SingleSite(p), np.linspace(0.0, stop, int(round(stop * 100)) + 1))
        assert flow.rows.shape[1] == 256

        first = first_broken_index(flow)
        assert first is not None and first > 0
        assert flow.gamma_grid[first - 1] - 1e-12 <= expected <= flow.gamma_grid[first] + 1e-12

        ground = flow.rows[:, 0]
        assert np.all(np.abs(ground.imag) <= 1e-7 * flow.scales)
        if p == 3:
            assert count_flat_eigenvalues(flow) >= 1

