import math

import numpy as np
import pytest

from ptchain.analytic import (
    ADJACENT_PATTERNS,
    ReducedKind,
    ReducedProblem,
    adjacent_block_matrix,
    adjacent_block_spectrum,
    analytic_threshold_h0,
    flat_band_count,
    neighbor_patterns,
    pattern_threshold,
    reduced_eigenvalues,
    single_site_max_imag_h0,
    site_threshold,
)
from ptchain.eig import charpoly_roots, eigenvalues, spectrum_distance
from ptchain.errors import DomainError
from ptchain.model import (
    NoPerturbation,
    SingleSite,
    SpinChainConfig,
    TwoSiteDoublePlus,
    TwoSiteMinus,
    TwoSitePlus,
    build_h0,
)


class TestReducedProblem:
    def test_from_pattern(self):
        r = ReducedProblem.from_pattern(1.0, (1, 1), 1.0)
        assert r.h_x == pytest.approx(0.0)
        assert r.gamma == 1.0
        assert r.kind is ReducedKind.TWO_BY_TWO
        assert r.neighbor_pattern == (1, 1)

    def test_bad_patterns(self):
        with pytest.raises(DomainError):
            ReducedProblem.from_pattern(1.0, (), 1.0)
        with pytest.raises(DomainError):
            ReducedProblem.from_pattern(1.0, (1, 1, 1), 1.0)
        with pytest.raises(DomainError):
            ReducedProblem(0.0, 1.0, neighbor_pattern=(2,))

    @pytest.mark.parametrize("h_x, gamma", [(0.75, 0.5), (0.25, 0.5), (0.1, 1.0), (-0.4, 0.3)])
    def test_eigenvalues_match_matrix(self, h_x, gamma):
        r = ReducedProblem(h_x, gamma)
        assert spectrum_distance(reduced_eigenvalues(r), charpoly_roots(r.matrix())) <= 1e-7

    def test_exceptional_point_is_exact(self):
        assert reduced_eigenvalues(ReducedProblem(0.25, 0.5)) == (0j, 0j)

    def test_four_by_four_is_not_reduced_here(self):
        with pytest.raises(DomainError):
            reduced_eigenvalues(ReducedProblem(0.1, 0.1, ReducedKind.FOUR_BY_FOUR))

    @pytest.mark.parametrize("solver", ["francis", "lapack"])
    def test_closed_form_matches_dense_solver(self, rng, solver):
        checked = 0
        for h_x, gamma in zip(rng.uniform(-1.0, 1.0, 60), rng.uniform(0.0, 2.0, 60)):
            if abs(abs(h_x) - 0.5 * gamma) < 0.05:
                continue  # near the exceptional point both sides lose digits
            r = ReducedProblem(float(h_x), float(gamma))
            assert spectrum_distance(reduced_eigenvalues(r), eigenvalues(r.matrix(), solver=solver).eigenvalues) <= 1e-12
            checked += 1
        assert checked >= 40


def ising_levels(config: SpinChainConfig) -> np.ndarray:
    """Diagonal of H_0 in a product basis where only one of J, h_z is nonzero"""
    n = config.n_sites
    signs = 1 - 2 * ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1)
    bonds = sum(signs[:, i - 1] * signs[:, j - 1] for i, j in config.bonds())
    return -(config.coupling_j / 4.0) * bonds - (config.field_hz / 2.0) * signs.sum(axis=1)


class TestCommutingLimits:
    def test_seven_site_chain_has_seven_symmetric_bands(self):
        levels = np.linalg.eigvalsh(build_h0(SpinChainConfig(7)))
        bands, counts = np.unique(np.round(levels, 9), return_counts=True)
        assert bands.size == 7
        np.testing.assert_allclose(bands, -bands[::-1], atol=1e-9)
        np.testing.assert_array_equal(counts, counts[::-1])
        assert counts.sum() == 128

    @pytest.mark.parametrize("n, boundary", [(4, "open"), (6, "periodic"), (8, "open")])
    @pytest.mark.parametrize("j, hz", [(1.0, 0.0), (0.0, 0.7)])
    def test_spectrum_is_the_sign_pattern_multiset(self, n, boundary, j, hz):
        config = SpinChainConfig(n, coupling_j=j, field_hz=hz, boundary=boundary)
        np.testing.assert_allclose(np.linalg.eigvalsh(build_h0(config)), np.sort(ising_levels(config)), atol=1e-10)

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [10, 12])
    def test_large_chains_match_the_sign_pattern_multiset(self, n):
        config = SpinChainConfig(n, boundary="periodic")
        np.testing.assert_allclose(np.linalg.eigvalsh(build_h0(config)), np.sort(ising_levels(config)), atol=1e-9)


class TestPatternThreshold:
    def test_one_sided_sigma_plus(self):
        assert pattern_threshold(1.0, (1,), 1.0, 0.0) == pytest.approx(0.25)
        assert pattern_threshold(1.0, (-1,), 1.0, 0.0) is None
        assert pattern_threshold(1.0, (1, 1), 1.0, 0.0) == pytest.approx(0.5)
        assert pattern_threshold(1.0, (-1, -1), 1.0, 0.0) is None
        # cancelling neighbours sit on the exceptional point for every strength
        assert pattern_threshold(1.0, (1, -1), 1.0, 0.0) is None

    def test_anti_hermitian(self):
        assert pattern_threshold(1.0, (1, -1), 1.0, -1.0) == 0.0
        assert pattern_threshold(1.0, (1,), 1.0, -1.0) == pytest.approx(0.25)
        assert pattern_threshold(1.0, (-1,), 1.0, -1.0) == pytest.approx(0.25)

    def test_hermitian_never_breaks(self):
        for pattern in [(1,), (-1,), (1, 1), (1, -1), (-1, -1)]:
            assert pattern_threshold(1.0, pattern, 1.0, 1.0) is None

    def test_scales_with_coupling(self):
        assert pattern_threshold(3.0, (1, 1), 1.0, 0.0) == pytest.approx(1.5)

    def test_site_threshold_takes_the_smallest_pattern(self):
        chain = SpinChainConfig(5)
        assert neighbor_patterns(chain, 1) == [(1,), (-1,)]
        assert len(neighbor_patterns(chain, 3)) == 4
        assert site_threshold(chain, 3, 1.0, 0.0) == pytest.approx(0.5)
        assert site_threshold(chain, 5, 0.0, 1.0) == pytest.approx(0.25)


class TestZeroFieldThresholds:
    @pytest.mark.parametrize("pert, expected", [
        (TwoSitePlus(1, 7), 0.25),
        (TwoSitePlus(4, 6), 0.5),
        (TwoSitePlus(1, 4), 0.25),
        (TwoSitePlus(3, 4), 0.0),
        (TwoSitePlus(2, 1), 0.0),
        (TwoSiteMinus(3, 3), 0.0),
        (TwoSiteMinus(1, 1), 0.25),
        (TwoSiteMinus(2, 5), 0.5),
        (TwoSiteDoublePlus(1, 1), 0.125),
        (TwoSiteDoublePlus(4, 4), 0.25),
        (TwoSiteDoublePlus(2, 6), 0.5),
        (SingleSite(1), 0.25),
        (SingleSite(4), 0.5),
    ])
    def test_open_chain(self, pert, expected):
        assert analytic_threshold_h0(SpinChainConfig(7), pert) == pytest.approx(expected)

    def test_no_threshold(self):
        chain = SpinChainConfig(7)
        assert analytic_threshold_h0(chain, TwoSitePlus(2, 2)) is None
        assert analytic_threshold_h0(chain, NoPerturbation()) is None
        assert analytic_threshold_h0(chain, SingleSite(3, 0.5, 0.5)) is None

    def test_ring_has_only_bulk_sites(self):
        ring = SpinChainConfig(8, boundary="periodic")
        assert analytic_threshold_h0(ring, TwoSitePlus(1, 5)) == pytest.approx(0.5)
        assert analytic_threshold_h0(ring, TwoSitePlus(1, 8)) == 0.0

    def test_coupling_sets_the_scale(self):
        assert analytic_threshold_h0(SpinChainConfig(7, coupling_j=2.0), TwoSitePlus(1, 7)) == pytest.approx(0.5)

    def test_domain(self):
        with pytest.raises(DomainError):
            analytic_threshold_h0(SpinChainConfig(7, field_hz=0.1), TwoSitePlus(1, 7))
        with pytest.raises(DomainError):
            analytic_threshold_h0(SpinChainConfig(2), TwoSitePlus(1, 2))


class TestSingleSite:
    def test_max_imag_beyond_threshold(self):
        chain = SpinChainConfig(6)
        assert single_site_max_imag_h0(chain, 3, 1.0, 0.0) == pytest.approx(0.5)
        assert single_site_max_imag_h0(chain, 3, 0.4, 0.0) == 0.0
        assert single_site_max_imag_h0(chain, 1, 0.3, 0.0) == pytest.approx(math.sqrt(0.25 * 0.05))

    @pytest.mark.parametrize("gp, gm", [(0.7, -0.2), (1.3, 0.1), (-0.6, 0.9), (0.2, 0.2)])
    def test_symmetries(self, gp, gm):
        chain = SpinChainConfig(6)
        value = single_site_max_imag_h0(chain, 3, gp, gm)
        assert single_site_max_imag_h0(chain, 3, gm, gp) == pytest.approx(value)
        assert single_site_max_imag_h0(chain, 3, -gm, -gp) == pytest.approx(value)

    def test_hermitian_diagonal(self):
        chain = SpinChainConfig(6)
        for g in (-1.0, 0.3, 2.0):
            assert single_site_max_imag_h0(chain, 2, g, g) == 0.0

    def test_flat_bands(self):
        assert flat_band_count(SpinChainConfig(7), 4) == 2 ** 6
        assert flat_band_count(SpinChainConfig(7), 1) == 0
        assert flat_band_count(SpinChainConfig(6, boundary="periodic"), 1) == 2 ** 5


class TestAdjacentBlock:
    def test_nine_patterns(self):
        spectra = adjacent_block_spectrum(1.0, 0.1)
        assert set(spectra) == set(ADJACENT_PATTERNS)
        assert all(values.shape == (4,) for values in spectra.values())

    def test_zero_strength_is_hermitian(self):
        for pattern in ADJACENT_PATTERNS:
            h = adjacent_block_matrix(1.0, 0.0, pattern)
            np.testing.assert_array_equal(h, h.T)

    def test_bulk_pair_breaks_at_first_order(self):
        gamma = 0.01
        values = adjacent_block_spectrum(1.0, gamma)[(1, 1)]
        assert values.imag.max() == pytest.approx(gamma / 2, rel=0.1)

    @pytest.mark.parametrize("pattern", [(1, 0), (0, 1)])
    def test_edge_pair_breaks_at_second_order(self, pattern):
        gamma = 0.01
        expected = gamma ** 1.5 / math.sqrt(2)
        im = np.abs(np.linalg.eigvals(adjacent_block_matrix(1.0, gamma, pattern)).imag).max()
        assert 0.5 * expected < im < 1.5 * expected

    def test_negative_strength(self):
        with pytest.raises(DomainError):
            adjacent_block_spectrum(1.0, -0.1)
