import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfinv

from conftest import centered_grid
from temporal_qudit.errors import GridMismatchError, GridResolutionError
from temporal_qudit.modulation import (
    EXAMPLE_BASIS_4,
    EomSpec,
    ModulationWaveform,
    PhaseProfile,
    Scheme,
    SuperpositionBasis,
    SymbolSet,
    apply_eom_bandwidth,
    average_pairwise_flips,
    combination_symbols,
    cyclic_pair_coefficients,
    equal_intensity_partition,
    gram_schmidt,
    insertion_loss,
    linear_ramp_waveform,
    modulate,
    paired_rotation_basis,
    pfm_phase_profile,
    pfm_symbols,
    ramp_shift,
    ramp_symbols,
    select_symbols,
    superposition_symbols,
    superposition_waveform,
    walsh_matrix,
)
from temporal_qudit.signal import PulseShape, ShapeKind, Wavepacket, inner_product, make_grid, synth_wavepacket, to_spectrum
from temporal_qudit.sweeps import Setup


def overlap_matrix(carrier, waveforms):
    states = [modulate(carrier, m) for m in waveforms]
    return np.array([[abs(inner_product(a, b)) ** 2 for b in states] for a in states])


class TestWalsh:
    def test_order_four(self):
        np.testing.assert_array_equal(
            walsh_matrix(4).entries,
            [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]],
        )

    @pytest.mark.parametrize("n", [4, 8, 16, 32, 64, 128])
    def test_gram_is_exact(self, n):
        e = walsh_matrix(n).entries
        np.testing.assert_array_equal(e @ e.T, n * np.eye(n, dtype=np.int64))
        assert np.all(e[0] == 1)

    @pytest.mark.parametrize("n", [0, 2, 3, 6, 12, 24])
    def test_rejects_non_powers(self, n):
        with pytest.raises(ValueError):
            walsh_matrix(n)

    def test_flip_table_matches_pairwise_count(self):
        W = walsh_matrix(16)
        table = W.flip_table()
        for i, j in itertools.combinations(range(16), 2):
            assert table[i, j] == W.sign_changes(i, j)


class TestPartition:
    def test_two_segments_split_at_centre(self, default_carrier):
        b = equal_intensity_partition(default_carrier, 2).boundaries
        assert abs(b[1]) <= default_carrier.grid.dt
        assert b[0] == default_carrier.grid.t_start and b[-1] == default_carrier.grid.t_end

    def test_rectangular_intensity(self):
        g = centered_grid(1024, 1e-9)
        width = 400e-9
        rect = (np.abs(g.times) < width / 2).astype(complex)
        b = equal_intensity_partition(Wavepacket(g, rect).normalize(), 4).boundaries
        np.testing.assert_allclose(np.diff(b[1:-1]), width / 4, atol=g.dt)

    def test_sixteen_equal_segments(self, default_carrier):
        part = equal_intensity_partition(default_carrier, 16)
        seg = part.segment_index()
        energy = np.bincount(seg, weights=default_carrier.intensity, minlength=16) * default_carrier.grid.dt
        np.testing.assert_allclose(energy, 1 / 16, atol=1e-3)
        assert np.all(np.diff(part.boundaries) > 0)

    @pytest.mark.parametrize("n", [1, 10**6])
    def test_rejects_bad_counts(self, coarse_carrier, n):
        with pytest.raises(ValueError):
            equal_intensity_partition(coarse_carrier, n)


class TestPfmProfile:
    def test_row_zero_is_constant_pi(self, default_carrier):
        W = walsh_matrix(8)
        p = pfm_phase_profile(W, 0, equal_intensity_partition(default_carrier, 8))
        np.testing.assert_array_equal(p.phase, np.pi)

    def test_alternating_row(self, default_carrier):
        W = walsh_matrix(8)
        part = equal_intensity_partition(default_carrier, 8)
        p = pfm_phase_profile(W, 1, part)
        seg = part.segment_index()
        np.testing.assert_array_equal(p.phase, np.where(seg % 2 == 0, np.pi, 0.0))

    @pytest.mark.parametrize("n", [4, 8, 16])
    @pytest.mark.parametrize("kind", list(ShapeKind))
    def test_ideal_profiles_are_orthogonal(self, n, kind):
        pulse = PulseShape(kind)
        carrier = synth_wavepacket(pulse, make_grid(pulse.coherence_time, 8, 16, n_ref=100))
        symbols = pfm_symbols(carrier, n, n, EomSpec(math.inf))
        ov = overlap_matrix(carrier, symbols.waveforms)
        assert np.max(np.abs(ov - np.eye(n))) < 1e-3
        assert np.max(ov - np.diag(np.diag(ov))) < 1e-4

    def test_mismatched_partition(self, default_carrier):
        with pytest.raises(ValueError):
            pfm_phase_profile(walsh_matrix(8), 0, equal_intensity_partition(default_carrier, 4))
        with pytest.raises(IndexError):
            pfm_phase_profile(walsh_matrix(4), 4, equal_intensity_partition(default_carrier, 4))


class TestEom:
    def step_profile(self, n=8192, dt=0.1e-9):
        g = centered_grid(n, dt)
        return PhaseProfile(g, np.where(g.times > 0, np.pi, 0.0))

    def test_infinite_bandwidth_is_identity(self):
        p = self.step_profile()
        assert apply_eom_bandwidth(p, EomSpec(math.inf)) is p

    def test_step_rise_time_matches_erf_oracle(self):
        p = self.step_profile()
        eom = EomSpec(1e9)
        out = apply_eom_bandwidth(p, eom).phase / np.pi
        t = p.grid.times
        t10 = np.interp(0.1, out, t)
        t90 = np.interp(0.9, out, t)
        expected = 2 * math.sqrt(2) * erfinv(0.8) * eom.kernel_sigma
        assert t90 - t10 == pytest.approx(expected, rel=1e-3)

    def test_kernel_power_response_fwhm(self):
        eom = EomSpec(2e9)
        sigma = eom.kernel_sigma
        nu_half = eom.bandwidth / 2
        assert math.exp(-4 * math.pi**2 * sigma**2 * nu_half**2) == pytest.approx(0.5, rel=1e-12)

    def test_linear_input_unchanged_away_from_ends(self):
        g = centered_grid(4096, 0.1e-9)
        # A ramp that is flat near both ends, so edge extension is exact there.
        x = np.clip(g.times / (100e-9), -1, 1)
        eom = EomSpec(1e9)
        out = apply_eom_bandwidth(PhaseProfile(g, x), eom).phase
        w = 6 * eom.kernel_sigma
        interior = np.abs(g.times) < 100e-9 - w
        np.testing.assert_allclose(out[interior], x[interior], atol=1e-9)

    def test_composition(self):
        p = self.step_profile()
        b = 0.8e9
        twice = apply_eom_bandwidth(apply_eom_bandwidth(p, EomSpec(b)), EomSpec(b))
        once = apply_eom_bandwidth(p, EomSpec(b / math.sqrt(2)))
        np.testing.assert_allclose(twice.phase, once.phase, atol=1e-6)

    def test_constant_phase_preserved(self):
        g = centered_grid(1024, 1e-9)
        out = apply_eom_bandwidth(PhaseProfile(g, np.full(1024, 2.5)), EomSpec(1e8)).phase
        np.testing.assert_allclose(out, 2.5, atol=1e-12)

    def test_too_fast_for_grid(self):
        with pytest.raises(GridResolutionError):
            apply_eom_bandwidth(self.step_profile(dt=1e-9), EomSpec(1e9))

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            EomSpec(0.0)

    def test_smoothed_symbols_stay_pure_phase(self, default_carrier, default_pulse):
        s = pfm_symbols(default_carrier, 16, 8, EomSpec(20 * default_pulse.bandwidth))
        assert all(m.is_pure_phase for m in s.waveforms)


class TestSelection:
    def test_full_set(self):
        assert sorted(select_symbols(walsh_matrix(8), 8)) == list(range(8))

    def test_order_four_pair(self):
        W = walsh_matrix(4)
        assert select_symbols(W, 2) == [0, 1]
        assert W.sign_changes(0, 1) == 3

    @pytest.mark.parametrize("n", [16, 32, 64])
    def test_beats_first_rows(self, n):
        W = walsh_matrix(n)
        for d in range(2, n + 1, 3):
            assert average_pairwise_flips(W, select_symbols(W, d)) >= average_pairwise_flips(W, range(d))

    def test_prefix_nested(self):
        W = walsh_matrix(32)
        full = select_symbols(W, 20)
        for d in range(2, 20):
            assert select_symbols(W, d) == full[:d]

    @pytest.mark.parametrize("d", [1, 17])
    def test_out_of_range(self, d):
        with pytest.raises(ValueError):
            select_symbols(walsh_matrix(16), d)


class TestRamp:
    def test_unshifted_symbol(self, coarse_carrier):
        m = linear_ramp_waveform(0, 4, EomSpec(1e8), coarse_carrier.grid)
        np.testing.assert_array_equal(m.samples, 1.0)

    def test_shift_formula(self):
        assert ramp_shift(5, 16, EomSpec(1e9)) == pytest.approx(1e9 / 3)
        assert ramp_shift(15, 16, EomSpec(1e9)) == 1e9

    def test_top_symbol_shift_by_spectrum_peak(self, default_carrier, default_pulse):
        eom = EomSpec(20 * default_pulse.bandwidth)
        g = default_carrier.grid
        m = linear_ramp_waveform(6, 7, eom, g)
        spec = to_spectrum(modulate(default_carrier, m))
        peak = spec.frequencies[np.argmax(spec.power)]
        assert abs(peak - eom.bandwidth) <= g.dnu

    def test_gigahertz_shift_on_fine_grid(self):
        g = centered_grid(2**16, 0.05e-9)
        pulse = PulseShape("gaussian", 100e-9)
        w = synth_wavepacket(pulse, g)
        spec = to_spectrum(modulate(w, linear_ramp_waveform(5, 16, EomSpec(1e9), g)))
        assert abs(spec.frequencies[np.argmax(spec.power)] - 1e9 / 3) <= g.dnu

    def test_shift_preserves_shape(self, coarse_carrier):
        g = coarse_carrier.grid
        k = 12
        eom = EomSpec(3 * k * g.dnu)
        m = linear_ramp_waveform(1, 4, eom, g)
        p0 = to_spectrum(coarse_carrier).power
        p1 = to_spectrum(modulate(coarse_carrier, m)).power
        np.testing.assert_allclose(np.roll(p0, k), p1, atol=1e-6 * p0.max())

    @pytest.mark.parametrize("k", [-1, 4])
    def test_index_out_of_range(self, coarse_carrier, k):
        with pytest.raises(ValueError):
            linear_ramp_waveform(k, 4, EomSpec(1e8), coarse_carrier.grid)

    def test_beyond_nyquist(self, coarse_carrier):
        with pytest.raises(GridResolutionError):
            linear_ramp_waveform(3, 4, EomSpec(1e10), coarse_carrier.grid)

    def test_overlap_matches_analytic_two_sided(self, default_carrier, default_pulse):
        # |<f|f e^{i 2 pi D t}>|^2 for |f|^2 = (ln2/tau) exp(-2 ln2 |t| / tau)
        tau = default_pulse.coherence_time
        g = default_carrier.grid
        for spacing in (1.0, 3.0, 6.0):
            shift = spacing * default_pulse.bandwidth
            m = ModulationWaveform(g, np.exp(2j * np.pi * shift * g.times))
            got = abs(inner_product(default_carrier, modulate(default_carrier, m))) ** 2
            x = math.pi * shift * tau / math.log(2)
            assert got == pytest.approx(1 / (1 + x * x) ** 2, rel=1e-4)

    def test_gaussian_symbols_well_separated(self):
        s = Setup(pulse=PulseShape("gaussian"))
        symbols = ramp_symbols(s.carrier(), 5, s.eom(12.0))
        ov = overlap_matrix(symbols.carrier, symbols.waveforms)
        assert np.max(ov - np.diag(np.diag(ov))) < 1e-2


class TestModulate:
    def test_pure_phase_norm(self, default_carrier, default_pulse):
        s = ramp_symbols(default_carrier, 5, EomSpec(50 * default_pulse.bandwidth))
        for m in s.waveforms:
            assert modulate(default_carrier, m).norm_squared == pytest.approx(1.0, abs=1e-12)

    def test_half_amplitude(self, coarse_carrier):
        m = ModulationWaveform(coarse_carrier.grid, np.full(coarse_carrier.grid.n_samples, 1 / math.sqrt(2)))
        assert modulate(coarse_carrier, m).norm_squared == pytest.approx(0.5, abs=1e-12)

    def test_grid_mismatch(self, coarse_carrier):
        g = centered_grid(16, 1e-9)
        with pytest.raises(GridMismatchError):
            modulate(coarse_carrier, ModulationWaveform(g, np.ones(16)))

    def test_gain_rejected(self):
        with pytest.raises(ValueError):
            ModulationWaveform(centered_grid(8, 1e-9), np.full(8, 1.01))

    def test_pure_phase_required(self, coarse_carrier):
        m = ModulationWaveform(coarse_carrier.grid, np.full(coarse_carrier.grid.n_samples, 0.5))
        with pytest.raises(ValueError):
            SymbolSet((m,), Scheme.LINEAR_RAMP, coarse_carrier, EomSpec(1e8))


class TestGramSchmidt:
    def test_identity(self):
        np.testing.assert_allclose(gram_schmidt(np.eye(5)).coeffs, np.eye(5), atol=1e-15)

    def test_example_basis_is_orthonormal(self):
        np.testing.assert_allclose(gram_schmidt(EXAMPLE_BASIS_4).coeffs, EXAMPLE_BASIS_4, atol=1e-3)

    def test_first_row_normalized_seed(self):
        seed = np.random.default_rng(1).standard_normal((4, 4))
        q = gram_schmidt(seed).coeffs
        np.testing.assert_allclose(q[0], seed[0] / np.linalg.norm(seed[0]), atol=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 12))
    def test_unitarity(self, seed, d):
        rng = np.random.default_rng(seed)
        q = gram_schmidt(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))).coeffs
        assert np.max(np.abs(q @ q.conj().T - np.eye(d))) < 1e-10

    def test_rank_deficient_reports_row(self):
        seed = np.eye(4)
        seed[2] = seed[0] + seed[1]
        with pytest.raises(ValueError, match="row 2"):
            gram_schmidt(seed)

    def test_rejects_non_unitary_basis(self):
        with pytest.raises(ValueError):
            SuperpositionBasis(np.ones((2, 2)))


@pytest.fixture(scope="module")
def ramp4(default_carrier, default_pulse):
    return ramp_symbols(default_carrier, 4, EomSpec(10 * default_pulse.bandwidth))


@pytest.fixture(scope="module")
def fast_ramp4(default_carrier, default_pulse):
    """Symbols beating much faster than the photon, so |cos|^2 envelopes average out."""
    return ramp_symbols(default_carrier, 4, EomSpec(100 * default_pulse.bandwidth))


class TestSuperposition:
    def test_one_hot_row_is_base_waveform(self, ramp4):
        basis = SuperpositionBasis(np.eye(4))
        for k in range(4):
            m = superposition_waveform(basis, k, ramp4)
            np.testing.assert_allclose(m.samples, ramp4.waveforms[k].samples, atol=1e-15)
            assert m.scale == pytest.approx(1.0, abs=1e-12)

    def test_equal_pair_loses_half(self, fast_ramp4):
        basis = paired_rotation_basis(4, 1 / math.sqrt(2))
        for k in range(4):
            m = superposition_waveform(basis, k, fast_ramp4)
            assert insertion_loss(m, fast_ramp4.carrier) == pytest.approx(0.5, abs=0.01)

    def test_slow_beating_loses_less(self, ramp4):
        # A beat period longer than the pulse leaves the in-phase peak at t = 0.
        m = superposition_waveform(paired_rotation_basis(4, 1 / math.sqrt(2)), 0, ramp4)
        assert insertion_loss(m, ramp4.carrier) < 0.49

    def test_example_row_dense_oracle(self, ramp4):
        basis = gram_schmidt(EXAMPLE_BASIS_4)
        m = superposition_waveform(basis, 3, ramp4)
        # Evaluate the target on a 16x denser time axis to bound its peak.
        g = ramp4.carrier.grid
        t = np.linspace(g.times[0], g.times[-1], 16 * g.n_samples)
        shifts = [ramp_shift(k, 4, ramp4.eom) for k in range(4)]
        dense = np.abs(sum(c * np.exp(2j * np.pi * s * t) for c, s in zip(basis.coeffs[3], shifts)))
        assert 1 / m.scale == pytest.approx(dense.max(), rel=1e-6)
        loss = insertion_loss(m, ramp4.carrier)
        assert loss == pytest.approx(1 - modulate(ramp4.carrier, m).norm_squared, abs=1e-15)
        assert 0 < loss < 1

    def test_projection_is_linear_in_coefficients(self, ramp4):
        basis = gram_schmidt(EXAMPLE_BASIS_4)
        c = ramp4.carrier
        comp = [modulate(c, m) for m in ramp4.waveforms]
        gram = np.array([[inner_product(a, b) for b in comp] for a in comp])
        for r in range(4):
            m = superposition_waveform(basis, r, ramp4)
            got = np.array([abs(inner_product(comp[j], modulate(c, m))) ** 2 for j in range(4)])
            expected = np.abs(m.scale * gram @ basis.coeffs[r]) ** 2
            np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_projection_recovers_coefficients_for_separated_symbols(self):
        s = Setup(pulse=PulseShape("gaussian"))
        base = ramp_symbols(s.carrier(), 4, s.eom(30.0))
        basis = gram_schmidt(EXAMPLE_BASIS_4)
        c = base.carrier
        for r in range(4):
            m = superposition_waveform(basis, r, base)
            got = np.array([abs(inner_product(modulate(c, w), modulate(c, m))) ** 2 for w in base.waveforms])
            np.testing.assert_allclose(got, np.abs(basis.coeffs[r]) ** 2 * m.scale**2, rtol=0.02)

    def test_dimension_mismatch(self, ramp4):
        with pytest.raises(ValueError):
            superposition_waveform(SuperpositionBasis(np.eye(3)), 0, ramp4)

    def test_nested_superposition_rejected(self, ramp4):
        sup = superposition_symbols(SuperpositionBasis(np.eye(4)), ramp4)
        with pytest.raises(ValueError):
            superposition_symbols(SuperpositionBasis(np.eye(4)), sup)

    @pytest.mark.parametrize("a", [0.0, 0.3, 1 / math.sqrt(2), 1.0])
    def test_paired_rotation_unitary(self, a):
        c = paired_rotation_basis(5, a, 0.4).coeffs
        np.testing.assert_allclose(c @ c.conj().T, np.eye(5), atol=1e-12)

    def test_cyclic_pairs(self):
        c = cyclic_pair_coefficients(4, 0.6, 0.0)
        np.testing.assert_allclose(c[3], [0.6, 0, 0, 0.8])
        np.testing.assert_allclose(np.linalg.norm(c, axis=1), 1.0)
        with pytest.raises(ValueError):
            cyclic_pair_coefficients(4, 1.5)

    def test_cyclic_symbols_equal_amplitude_loss(self, fast_ramp4):
        sup = combination_symbols(cyclic_pair_coefficients(4, 1 / math.sqrt(2)), fast_ramp4)
        for m in sup.waveforms:
            assert insertion_loss(m, fast_ramp4.carrier) == pytest.approx(0.5, abs=0.01)
            assert np.max(np.abs(m.samples)) == pytest.approx(1.0, abs=1e-12)
