"""Trilinear terms, quotient form, conserved functionals, kernel arithmetic."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_complex_field, random_real_field
from mkdvlab import (
    DenominatorError,
    FieldError,
    FourierField,
    GridSpec,
    Trajectory,
    check_real_symmetry,
    conserved_functionals,
    cosine_field,
    denominator_correction,
    direct_nonlinearity,
    field_from_modes,
    galilean_speed,
    kernel_product_minimum,
    nr_framewise,
    nr_split_by_frequency,
    nr_trilinear,
    nr_trilinear_fast,
    nr_trilinear_naive,
    resonance_identity_residual,
    resonant_term,
    select_frequency_cutoff,
    to_real_samples,
    trilinear_quotient_form,
)


def nr_oracle(v1: FourierField, v2: FourierField, v3: FourierField) -> np.ndarray:
    """Nonresonant term written as four literal loops over the definition."""
    K = v1.K
    out = np.zeros(2 * K + 1, dtype=complex)
    for k in range(-K, K + 1):
        if k == 0:
            continue
        acc = 0.0 + 0.0j
        for k1 in range(-K, K + 1):
            for k2 in range(-K, K + 1):
                k3 = k - k1 - k2
                if abs(k3) > K or 0 in (k1, k2, k3):
                    continue
                if (k1 + k2) * (k2 + k3) * (k3 + k1) == 0:
                    continue
                acc += v1.mode(k1) * v2.mode(k2) * v3.mode(k3)
        out[k + K] = (-1j * k / 3.0) * acc
    return out


def quotient_oracle(
    v1: FourierField,
    v2: FourierField,
    v3: FourierField,
    f: FourierField,
    cutoff: int = 0,
    case: str | None = None,
) -> np.ndarray:
    """Weighted quotient form by literal loops; zero input modes allowed."""
    K = v1.K
    out = np.zeros(2 * K + 1, dtype=complex)
    for k1 in range(-K, K + 1):
        for k2 in range(-K, K + 1):
            for k3 in range(-K, K + 1):
                k = k1 + k2 + k3
                if abs(k) > K or k == 0:
                    continue
                prod = (k1 + k2) * (k2 + k3) * (k3 + k1)
                if prod == 0:
                    continue
                kmax = max(abs(k1), abs(k2), abs(k3))
                kmin = min(abs(k1), abs(k2), abs(k3))
                if kmax <= cutoff:
                    continue
                if case == "comparable" and kmax > 2 * kmin:
                    continue
                if case == "separated" and kmax <= 2 * kmin:
                    continue
                corr = (
                    k1 * abs(f.mode(k1)) ** 2
                    + k2 * abs(f.mode(k2)) ** 2
                    + k3 * abs(f.mode(k3)) ** 2
                    - k * abs(f.mode(k)) ** 2
                )
                out[k + K] += (
                    k * v1.mode(k1) * v2.mode(k2) * v3.mode(k3) / (-3.0 * prod + corr)
                )
    return out


class TestNonresonantTerm:
    def test_cosine_frozen_values(self):
        out = nr_trilinear_naive(*[cosine_field(8)] * 3)
        # only (1,1,1) survives for k = 3; every triple for k = 1 hits a
        # vanishing kernel factor
        assert abs(out.mode(3) - (-0.125j)) < 1e-15
        assert abs(out.mode(-3) - 0.125j) < 1e-15
        assert out.mode(1) == 0.0
        assert out.mode(-1) == 0.0
        assert out.mode(0) == 0.0

    @pytest.mark.parametrize("K", [3, 5, 8])
    def test_naive_matches_loop_oracle(self, K):
        v1 = random_complex_field(K, seed=100 + K)
        v2 = random_complex_field(K, seed=200 + K)
        v3 = random_complex_field(K, seed=300 + K)
        out = nr_trilinear_naive(v1, v2, v3)
        assert np.max(np.abs(out.coeffs - nr_oracle(v1, v2, v3))) < 1e-12

    @pytest.mark.parametrize("K", [4, 8, 16])
    def test_fast_matches_naive(self, K):
        for seed in range(5):
            v1 = random_complex_field(K, seed=3 * seed)
            v2 = random_complex_field(K, seed=3 * seed + 1)
            v3 = random_complex_field(K, seed=3 * seed + 2)
            a = nr_trilinear_fast(v1, v2, v3)
            b = nr_trilinear_naive(v1, v2, v3)
            scale = max(1.0, np.max(np.abs(b.coeffs)))
            assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-12 * scale

    def test_dispatch(self):
        u = cosine_field(4)
        a = nr_trilinear(u, u, u, method="fast")
        b = nr_trilinear(u, u, u, method="naive")
        assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-14
        with pytest.raises(FieldError):
            nr_trilinear(u, u, u, method="spectral")

    def test_output_real_symmetric_data(self):
        u = random_real_field(8, seed=4)
        out = nr_trilinear_fast(u, u, u)
        assert check_real_symmetry(out) < 1e-13

    def test_mean_mode_pinned_to_zero(self):
        v = random_complex_field(6, seed=9)
        assert nr_trilinear_fast(v, v, v).mode(0) == 0.0
        assert nr_trilinear_naive(v, v, v).mode(0) == 0.0

    def test_insensitive_to_mean_mode(self):
        u = random_real_field(6, seed=14)
        shifted = u.coeffs.copy()
        shifted[6] = 0.7  # k = 0 entry never enters the triple sum
        out_a = nr_trilinear_fast(u, u, u)
        out_b = nr_trilinear_fast(*[FourierField(shifted)] * 3)
        assert np.max(np.abs(out_a.coeffs - out_b.coeffs)) < 1e-13

    def test_framewise(self):
        grid = GridSpec(K=4, M=3, T=1.0)
        rng = np.random.default_rng(5)
        coeffs = rng.standard_normal((3, 9)) + 1j * rng.standard_normal((3, 9))
        tr = Trajectory(grid, coeffs)
        out = nr_framewise(tr)
        for m in range(3):
            ref = nr_trilinear_fast(tr.frame(m), tr.frame(m), tr.frame(m))
            assert np.max(np.abs(out.coeffs[m] - ref.coeffs)) == 0.0


class TestSplitByFrequency:
    @pytest.mark.parametrize("cutoff", [0, 1, 2, 5])
    def test_additive(self, cutoff):
        v1 = random_complex_field(6, seed=41)
        v2 = random_complex_field(6, seed=42)
        v3 = random_complex_field(6, seed=43)
        low, high = nr_split_by_frequency(v1, v2, v3, cutoff)
        full = nr_trilinear_naive(v1, v2, v3)
        assert np.max(np.abs(low.coeffs + high.coeffs - full.coeffs)) < 1e-14

    def test_cosine_edges(self):
        u = cosine_field(4)
        low, high = nr_split_by_frequency(u, u, u, 0)
        assert np.max(np.abs(low.coeffs)) == 0.0
        low, high = nr_split_by_frequency(u, u, u, 1)
        assert np.max(np.abs(high.coeffs)) == 0.0
        assert abs(low.mode(3) - (-0.125j)) < 1e-15

    def test_negative_cutoff_rejected(self):
        u = cosine_field(2)
        with pytest.raises(FieldError):
            nr_split_by_frequency(u, u, u, -1)


class TestResonantAndDirect:
    def test_resonant_frozen_values(self):
        out = resonant_term(cosine_field(4))
        assert abs(out.mode(1) - 0.125j) < 1e-16
        v = field_from_modes(4, {2: 1j, -2: 1j})
        assert abs(resonant_term(v).mode(2) - (-2.0)) < 1e-15

    def test_direct_cosine_frozen_values(self):
        out = direct_nonlinearity(cosine_field(8))
        assert abs(out.mode(1) - 0.125j) < 1e-15
        assert abs(out.mode(3) - (-0.125j)) < 1e-15
        assert out.mode(0) == 0.0
        assert out.real_symmetric

    def test_direct_requires_real_field(self):
        c = np.zeros(5, dtype=complex)
        c[3] = 1.0
        with pytest.raises(FieldError):
            direct_nonlinearity(FourierField(c))

    def test_direct_against_pointwise_product(self):
        # -(u^2 - mean u^2) u_x evaluated on a dense grid, then transformed
        u = random_real_field(6, seed=77)
        n = 128
        x = 2.0 * np.pi * np.arange(n) / n
        samples = to_real_samples(u, n)
        slope = np.zeros(n)
        for k in range(-6, 7):
            slope += np.real(1j * k * u.mode(k) * np.exp(1j * k * x))
        w = -(samples**2 - np.mean(samples**2)) * slope
        out = direct_nonlinearity(u)
        for k in range(-6, 7):
            ref = np.sum(w * np.exp(-1j * k * x)) / n
            assert abs(out.mode(k) - ref) < 1e-12

    @pytest.mark.parametrize("K", [8, 16])
    def test_decomposition_identity_mean_zero(self, K):
        for seed in range(10):
            u = random_real_field(K, seed=seed)
            direct = direct_nonlinearity(u)
            nr = nr_trilinear_fast(u, u, u)
            res = resonant_term(u)
            err = np.max(np.abs(direct.coeffs - nr.coeffs - res.coeffs))
            assert err < 1e-13

    def test_decomposition_fails_with_mean(self):
        # the identity needs a mean-zero field; a nonzero k = 0 mode breaks it
        u = random_real_field(8, seed=2)
        c = u.coeffs.copy()
        c[8] = 0.5
        shifted = FourierField(c, real_symmetric=True)
        direct = direct_nonlinearity(shifted)
        nr = nr_trilinear_fast(shifted, shifted, shifted)
        res = resonant_term(shifted)
        assert np.max(np.abs(direct.coeffs - nr.coeffs - res.coeffs)) > 1e-6

    def test_galilean_speed(self):
        assert abs(galilean_speed(cosine_field(4)) - 0.5) < 1e-15


class TestDenominatorCorrection:
    def test_cosine_frozen_value(self):
        f = cosine_field(16)
        assert abs(denominator_correction(f, 1, 1, 1) - 0.75) < 1e-15
        assert abs(denominator_correction(f, 1, 2, 3) - 0.25) < 1e-15
        assert denominator_correction(f, 2, 3, 4) == 0.0

    def test_zero_profile(self):
        f = FourierField.zeros(8)
        assert denominator_correction(f, 3, -5, 11) == 0.0

    @given(
        st.integers(min_value=-8, max_value=8),
        st.integers(min_value=-8, max_value=8),
        st.integers(min_value=-8, max_value=8),
        st.integers(min_value=0, max_value=1000),
    )
    def test_antisymmetric_for_real_profiles(self, k1, k2, k3, seed):
        f = random_real_field(24, seed=seed)
        plus = denominator_correction(f, k1, k2, k3)
        minus = denominator_correction(f, -k1, -k2, -k3)
        assert abs(plus + minus) < 1e-13


class TestQuotientForm:
    def test_single_mode_frozen_weight(self):
        v = field_from_modes(4, {1: 1.0})
        f = FourierField.zeros(4)
        out = trilinear_quotient_form(v, v, v, f)
        # only (1,1,1) contributes: 3 / (-3 * 2 * 2 * 2) = -1/8
        assert abs(out.mode(3) - (-0.125)) < 1e-15
        assert trilinear_quotient_form(v, v, v, f, cutoff=1).mode(3) == 0.0

    @pytest.mark.parametrize("profile", ["zero", "cosine"])
    def test_matches_loop_oracle(self, profile):
        K = 5
        v1 = random_complex_field(K, seed=61)
        v2 = random_complex_field(K, seed=62)
        v3 = random_complex_field(K, seed=63)
        f = FourierField.zeros(K) if profile == "zero" else cosine_field(K)
        for cutoff in (0, 2):
            for case in (None, "comparable", "separated"):
                out = trilinear_quotient_form(v1, v2, v3, f, cutoff, case)
                ref = quotient_oracle(v1, v2, v3, f, cutoff, case)
                assert np.max(np.abs(out.coeffs - ref)) < 1e-12

    def test_zero_input_modes_contribute(self):
        # (0, 1, 1) is admissible here, unlike in the nonresonant table
        v = field_from_modes(3, {0: 1.0, 1: 1.0})
        f = FourierField.zeros(3)
        out = trilinear_quotient_form(v, v, v, f)
        assert np.max(np.abs(out.coeffs - quotient_oracle(v, v, v, f))) < 1e-13
        assert abs(out.mode(2)) > 0.1

    def test_case_bins_partition(self):
        K = 5
        v1 = random_complex_field(K, seed=71)
        v2 = random_complex_field(K, seed=72)
        v3 = random_complex_field(K, seed=73)
        f = cosine_field(K)
        both = trilinear_quotient_form(v1, v2, v3, f)
        comp = trilinear_quotient_form(v1, v2, v3, f, case="comparable")
        sep = trilinear_quotient_form(v1, v2, v3, f, case="separated")
        assert np.max(np.abs(comp.coeffs + sep.coeffs - both.coeffs)) < 1e-13
        with pytest.raises(FieldError):
            trilinear_quotient_form(v1, v2, v3, f, case="resonant")

    def test_denominator_error(self):
        # |f_hat(1)|^2 = 8 makes the corrected denominator vanish at (1,1,1)
        amp = math.sqrt(8.0)
        f = field_from_modes(4, {1: amp, -1: amp})
        v = cosine_field(4)
        with pytest.raises(DenominatorError) as info:
            trilinear_quotient_form(v, v, v, f)
        k1, k2, k3 = info.value.triple
        base = -3.0 * (k1 + k2) * (k2 + k3) * (k3 + k1)
        assert abs(base + denominator_correction(f, k1, k2, k3)) < 1e-9

    def test_select_frequency_cutoff(self):
        assert select_frequency_cutoff(FourierField.zeros(8)) == 0
        assert select_frequency_cutoff(cosine_field(8)) == 0
        amp = math.sqrt(8.0)
        f = field_from_modes(4, {1: amp, -1: amp})
        cutoff = select_frequency_cutoff(f)
        assert cutoff >= 1
        # dropping max |kj| <= cutoff removes every flagged triple
        v = cosine_field(4)
        trilinear_quotient_form(v, v, v, f, cutoff=cutoff)


class TestConservedFunctionals:
    def test_cosine_frozen_values(self):
        mass, l2, energy = conserved_functionals(cosine_field(8))
        assert mass == 0.0
        assert abs(l2 - 0.5) < 1e-15
        assert abs(energy - 0.21875) < 1e-14

    def test_constant_field(self):
        c = 1.2
        mass, l2, energy = conserved_functionals(field_from_modes(2, {0: c}))
        assert abs(mass - c) < 1e-15
        assert abs(l2 - c * c) < 1e-15
        assert abs(energy - (-(c**4) / 12.0)) < 1e-14

    def test_against_quadrature(self):
        u = random_real_field(10, seed=55)
        n = 8192
        x = 2.0 * np.pi * np.arange(n) / n
        samples = to_real_samples(u, n)
        slope = np.zeros(n)
        for k in range(-10, 11):
            slope += np.real(1j * k * u.mode(k) * np.exp(1j * k * x))
        mass, l2, energy = conserved_functionals(u)
        assert abs(mass - np.mean(samples)) < 1e-13
        assert abs(l2 - np.mean(samples**2)) < 1e-13
        assert abs(energy - np.mean(0.5 * slope**2 - samples**4 / 12.0)) < 1e-12

    def test_requires_real_field(self):
        c = np.zeros(5, dtype=complex)
        c[3] = 1.0
        with pytest.raises(FieldError):
            conserved_functionals(FourierField(c))


class TestResonanceIdentity:
    def test_frozen_examples(self):
        assert resonance_identity_residual((1, 8, 27), (1, 2, 3)) == 0.0
        assert resonance_identity_residual((0, 0, 0), (5, -7, 2)) == 0.0
        assert resonance_identity_residual((0.5, -1.25, 3.0), (1, 1, -2)) == 0.0

    @given(
        st.tuples(*[st.integers(min_value=-(10**6), max_value=10**6)] * 3),
        st.tuples(*[st.integers(min_value=-1000, max_value=1000)] * 3),
    )
    def test_exact_for_integers(self, taus, ks):
        assert resonance_identity_residual(taus, ks) == 0.0

    @settings(max_examples=50)
    @given(
        st.tuples(*[st.floats(-1e6, 1e6, allow_nan=False)] * 3),
        st.tuples(*[st.integers(min_value=-100, max_value=100)] * 3),
    )
    def test_small_for_floats(self, taus, ks):
        assert resonance_identity_residual(taus, ks) < 1e-6


class TestKernelProductMinimum:
    def test_frozen_minimum(self):
        best, witness = kernel_product_minimum(128)
        assert best == 1.0
        assert witness == (-2, 1, 1)
        k1, k2, k3 = witness
        prod = (k1 + k2) * (k2 + k3) * (k3 + k1)
        assert abs(prod) == max(abs(k1), abs(k2), abs(k3))

    def test_sliced_large_limit(self):
        best, witness = kernel_product_minimum(1000, k1_values=[1, -2, 537, -1000])
        assert best == 1.0
        assert witness == (1, -2, 1)

    def test_validation(self):
        with pytest.raises(FieldError):
            kernel_product_minimum(0)
        with pytest.raises(FieldError):
            kernel_product_minimum(4, k1_values=[0])
        with pytest.raises(FieldError):
            kernel_product_minimum(4, k1_values=[5])

    @given(st.tuples(*[st.integers(min_value=-200, max_value=200)] * 3))
    def test_lower_bound_holds_pointwise(self, ks):
        k1, k2, k3 = ks
        if 0 in ks:
            return
        prod = (k1 + k2) * (k2 + k3) * (k3 + k1)
        if prod == 0:
            return
        assert abs(prod) >= max(abs(k1), abs(k2), abs(k3))
