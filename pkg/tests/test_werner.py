import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from wernerwit.operators import (
    CapacityError,
    HermitianOperator,
    eigvalsh,
    identity,
    is_psd,
    partial_trace,
    partial_transpose,
    tensor,
)
from wernerwit.werner import (
    ProjectorBasis,
    SpanError,
    SymmetricOperator,
    WernerParams,
    basis_A,
    basis_B,
    basis_full,
    basis_G,
    copy_split,
    dense_dimension,
    eigenvalue_decay_table,
    expand_in_basis,
    extend_to_full,
    g_coords,
    g_coords_from_probs,
    line_state,
    max_entangled,
    qudit_split,
    state_from_probs,
    swap_op,
    twirl_parameter,
    werner_power_coefficients,
    werner_pt,
    werner_state,
    wn_coefficients,
    wn_dense,
    wn_spectrum,
)

betas = st.floats(-1.0, 1.0, allow_nan=False)
entangled_betas = st.floats(-1.0, -0.34, allow_nan=False)
dims = st.sampled_from([2, 3])


class TestWernerParams:
    @pytest.mark.parametrize("beta", [-1.01, 1.5, float("nan")])
    def test_rejects_out_of_range(self, beta):
        with pytest.raises(ValueError):
            WernerParams(3, beta)

    def test_rejects_small_d(self):
        with pytest.raises(ValueError):
            WernerParams(1, -0.5)

    @pytest.mark.parametrize(
        "beta,separable,distillable",
        [(-1.0, False, True), (-0.6, False, True), (-0.5, False, False), (-1 / 3, True, False), (0.5, True, False)],
    )
    def test_classes(self, beta, separable, distillable):
        p = WernerParams(3, beta)
        assert p.is_separable is separable
        assert p.is_one_distillable is distillable


class TestWernerState:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_swap_and_projector(self, d):
        f = swap_op(d)
        np.testing.assert_allclose(f.matrix @ f.matrix, np.eye(d * d), atol=1e-14)
        pt = partial_transpose(f, qudit_split(1))
        np.testing.assert_allclose(pt.matrix / d, max_entangled(d).matrix, atol=1e-14)

    @given(d=dims, beta=betas)
    @settings(max_examples=30, deadline=None)
    def test_unit_trace_and_positive(self, d, beta):
        rho = werner_state(WernerParams(d, beta))
        assert rho.trace() == pytest.approx(1.0, abs=1e-12)
        assert is_psd(rho)

    @given(d=dims, beta=betas)
    @settings(max_examples=30, deadline=None)
    def test_partial_transpose_spectrum(self, d, beta):
        lam = eigvalsh(werner_pt(WernerParams(d, beta)))[0]
        expected = min(1.0 + d * beta, 1.0) / (d * d + d * beta)
        assert lam == pytest.approx(expected, abs=1e-12)

    @given(d=dims, beta=betas)
    @settings(max_examples=30, deadline=None)
    def test_twirl_recovers_beta(self, d, beta):
        assert twirl_parameter(werner_state(WernerParams(d, beta))).beta == pytest.approx(beta, abs=1e-10)


class TestBases:
    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("n", [1, 2])
    def test_b_traces_exact(self, d, n):
        basis = basis_B(n, d)
        assert basis.traces == oracles.b_traces(d, n)
        for e, t in zip(basis.elements, basis.traces):
            assert e.trace() == pytest.approx(t, abs=1e-12)

    @pytest.mark.parametrize("n", [3, 5, 10])
    def test_b_traces_large_n_without_dense(self, n):
        assert basis_B(n, 3).traces == tuple(math.comb(n, j) * 8**j for j in range(n + 1))

    def test_enlarged_traces(self):
        assert basis_full(1, 3).traces == (1, 8, 3, 24)
        assert basis_full(2, 3).traces == oracles.TWO_COPY_TRACES

    @pytest.mark.parametrize("kind,n", [("B", 1), ("B", 2), ("B1copy", 1), ("B2copy", 2)])
    def test_orthogonal_projectors(self, kind, n):
        basis = ProjectorBasis(kind, n, 3)
        els = basis.elements
        for i, a in enumerate(els):
            np.testing.assert_allclose(a.matrix @ a.matrix, a.matrix, atol=1e-12)
            for b in els[i + 1:]:
                assert abs(a.inner(b)) < 1e-12

    @pytest.mark.parametrize("n", [1, 2])
    def test_enlarged_basis_resolves_identity(self, n):
        els = basis_full(n, 3).elements
        total = sum(e.matrix for e in els)
        np.testing.assert_allclose(total, np.eye(dense_dimension(n, 3)), atol=1e-12)

    def test_g_basis_traceless(self):
        for g in basis_G(3).elements:
            assert g.trace() == pytest.approx(0.0, abs=1e-12)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ProjectorBasis("Q", 1, 3)

    @pytest.mark.parametrize("d", [2, 3])
    def test_recurrence_one_to_two(self, d):
        b1 = basis_B(1, d).elements
        b2 = basis_B(2, d).elements
        p = max_entangled(d)
        q = identity((d, d)) - p
        zero = b1[0] * 0.0
        padded = (zero,) + tuple(b1) + (zero,)
        for j in range(3):
            rebuilt = tensor(padded[j + 1], p) + tensor(padded[j], q)
            assert np.max(np.abs(rebuilt.matrix - b2[j].matrix)) <= 1e-12


class TestWnAlgebra:
    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("n", [1, 2])
    @pytest.mark.parametrize("beta", [-1.0, -0.5, -0.4])
    def test_coefficients_match_closed_form(self, d, n, beta):
        lam = wn_coefficients(WernerParams(d, beta), n).coeffs
        np.testing.assert_allclose(lam, [float(x) for x in oracles.wn_eigenvalues(d, beta, n)], rtol=1e-13)

    def test_reference_coefficients(self):
        c = extend_to_full(wn_coefficients(WernerParams(3, -0.5), 1)).normalized_coeffs()
        np.testing.assert_allclose(c, [float(x) for x in oracles.ONE_COPY_C], atol=1e-15)
        lam2 = wn_coefficients(WernerParams(3, -0.5), 2).coeffs
        np.testing.assert_allclose(lam2, [float(x) for x in oracles.TWO_COPY_RAW], atol=1e-16)

    @given(d=dims, beta=betas, n=st.sampled_from([1, 2]))
    @settings(max_examples=30, deadline=None)
    def test_densify_matches_dense(self, d, beta, n):
        p = WernerParams(d, beta)
        diff = wn_coefficients(p, n).densify().matrix - wn_dense(p, n).matrix
        assert np.max(np.abs(diff)) <= 1e-12

    @given(d=dims, beta=betas, n=st.integers(1, 12))
    @settings(max_examples=40, deadline=None)
    def test_unit_trace(self, d, beta, n):
        assert wn_coefficients(WernerParams(d, beta), n).trace() == pytest.approx(1.0, abs=1e-12)

    @given(d=dims, beta=betas)
    @settings(max_examples=20, deadline=None)
    def test_tracing_out_a_copy(self, d, beta):
        p = WernerParams(d, beta)
        w2 = wn_dense(p, 2)
        w1 = wn_dense(p, 1)
        red = partial_trace(w2, range(4))
        assert np.max(np.abs(red.matrix - w1.matrix)) <= 1e-12

    @given(d=dims, beta=betas, n=st.sampled_from([1, 2]))
    @settings(max_examples=20, deadline=None)
    def test_spectrum_formula(self, d, beta, n):
        p = WernerParams(d, beta)
        assert np.max(np.abs(wn_spectrum(p, n) - eigvalsh(wn_dense(p, n)))) <= 1e-10

    def test_dense_capacity(self):
        with pytest.raises(CapacityError):
            wn_dense(WernerParams(3, -0.5), 3)

    @given(d=dims, beta=entangled_betas, n=st.sampled_from([1, 2]))
    @settings(max_examples=20, deadline=None)
    def test_werner_power_expansion(self, d, beta, n):
        p = WernerParams(d, beta)
        dense = tensor(*([werner_state(p)] * n))
        coeffs = werner_power_coefficients(p, n)
        assert np.max(np.abs(coeffs.densify().matrix - dense.matrix)) <= 1e-12

    def test_wn_is_p2_times_power_of_pt(self):
        p = WernerParams(3, -0.6)
        pt = partial_transpose(tensor(werner_state(p), werner_state(p)), copy_split(2).__class__.interleaved(4))
        built = tensor(max_entangled(2), pt)
        assert np.max(np.abs(built.matrix - wn_dense(p, 2).matrix)) <= 1e-12


class TestDecay:
    def test_strictly_decreasing_to_ten(self):
        vals = [v for _, v in eigenvalue_decay_table(WernerParams(3, -0.5), range(1, 11))]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[0] == pytest.approx(16 / 15 / 8)

    @given(d=dims, beta=betas)
    @settings(max_examples=30, deadline=None)
    def test_decays_for_every_beta(self, d, beta):
        vals = [v for _, v in eigenvalue_decay_table(WernerParams(d, beta), range(1, 6))]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestExpansion:
    @pytest.mark.parametrize("n", [1, 2])
    def test_round_trip(self, n):
        basis = basis_full(n, 3)
        rng = np.random.default_rng(n)
        raw = rng.normal(size=basis.size)
        op = SymmetricOperator(basis, raw).densify()
        back = expand_in_basis(op, basis)
        np.testing.assert_allclose(back.raw(), raw, atol=1e-12)
        assert back.residual < 1e-10

    def test_a_basis_gram_solve(self):
        p = WernerParams(3, -0.6)
        sym = expand_in_basis(werner_state(p), basis_A(1, 3))
        np.testing.assert_allclose(sym.raw(), werner_power_coefficients(p, 1).raw(), atol=1e-12)

    def test_normalized_round_trip(self):
        basis = basis_full(1, 3)
        sym = SymmetricOperator(basis, np.array([0.1, 0.2, 0.3, 0.4]), normalized=True)
        np.testing.assert_allclose(sym.as_raw().as_normalized().coeffs, sym.coeffs, atol=1e-15)
        assert sym.trace() == pytest.approx(1.0)

    def test_off_span_raises(self):
        basis = basis_full(1, 3)
        rng = np.random.default_rng(0)
        a = rng.normal(size=(36, 36))
        with pytest.raises(SpanError) as err:
            expand_in_basis(HermitianOperator(a + a.T, basis.dims), basis)
        assert err.value.residual > 0

    def test_dims_mismatch(self):
        with pytest.raises(ValueError):
            expand_in_basis(identity((2, 2)), basis_full(1, 3))

    def test_extend_requires_b_basis(self):
        with pytest.raises(ValueError):
            extend_to_full(SymmetricOperator(basis_A(1, 3), np.ones(2)))

    @given(probs=st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4).filter(lambda v: sum(v) > 1e-3))
    @settings(max_examples=30, deadline=None)
    def test_g_coordinates_agree(self, probs):
        probs = np.array(probs) / sum(probs)
        dense = g_coords(state_from_probs(basis_full(1, 3), probs))
        fast = g_coords_from_probs(probs, 3)
        np.testing.assert_allclose(dense, fast, atol=1e-12)

    def test_g_coordinates_reconstruct_state(self):
        probs = np.array([float(x) for x in oracles.PI_STAR])
        g = g_coords_from_probs(probs, 3)
        gmat = np.array(oracles.G_MATRIX, dtype=float)
        tr = np.array(basis_full(1, 3).traces, dtype=float)
        rebuilt = tr / 36 * (1.0 / tr) + g @ gmat
        np.testing.assert_allclose(rebuilt * tr, probs, atol=1e-14)

    def test_line_state(self):
        els = basis_full(1, 3).elements
        mid = line_state(els[0], els[3], 0.5)
        assert mid.trace() == pytest.approx(1.0)
