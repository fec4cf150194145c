"""Estimator tests: moduli enumeration, weights, Bessel bounds, and the
bilinear approximation against brute-force products."""

import math
from fractions import Fraction

import numpy as np
import pytest

from sqfrep.arith import CapacityError, euler_phi, factorize
from sqfrep.counting import psi_in_ap, squarefree_count_in_ap
from sqfrep.localmodel import ProgressionContext, local_product
import sqfrep.estimator as est
from sqfrep.estimator import (
    _local_dot,
    ModuliSet,
    SparseFunction,
    Weights,
    bessel_defect,
    build_moduli_set,
    compute_weights,
    estimate_inner,
    global_inner,
    lambda_progression_function,
    model_family,
    per_q_breakdown,
    periodic_cross,
    predicted_main_terms,
    squarefree_mirror_function,
)


def dense_int(values):
    return np.array(values, dtype=np.int64)


class TestModuliSet:
    def test_smallest_family(self, tables):
        ctx = ProgressionContext(50, 1, 1)
        ms = build_moduli_set(2, 1, ctx, tables)
        assert ms.members == (1, 2)

    def test_mixed_family(self, tables):
        ctx = ProgressionContext(50, 1, 1)
        ms = build_moduli_set(3, 2, ctx, tables)
        assert ms.members == (1, 2, 3, 4, 12)

    def test_members_are_cubefree_and_distinct(self, tables):
        ctx = ProgressionContext(101, 1, 1)
        ms = build_moduli_set(10, 4, ctx, tables)
        assert len(set(ms.members)) == len(ms.members)
        for q in ms.members:
            assert factorize(q, tables).is_cubefree

    def test_trivial_modulus_always_exceptional(self, tables):
        for ctx in (
            ProgressionContext(50, 1, 1),
            ProgressionContext(51, 1, 2),
            ProgressionContext(55, 2, 3),
        ):
            ms = build_moduli_set(3, 1, ctx, tables)
            assert 1 in ms.exceptional

    def test_known_exceptional_member(self, tables):
        # q = 4 splits into g1 = 1, m2 = 4; 4 divides 5 - 1.
        ctx = ProgressionContext(5, 1, 4)
        ms = build_moduli_set(3, 2, ctx, tables)
        assert 4 in ms.exceptional

    def test_exceptional_iff_diff_vector_vanishes(self, tables):
        for ctx in (
            ProgressionContext(1000, 1, 1),
            ProgressionContext(1001, 1, 2),
            ProgressionContext(997, 2, 15),
        ):
            ms = build_moduli_set(6, 2, ctx, tables)
            fam = model_family(ms, tables)
            for q, (_, kappa) in fam.items():
                norm = local_product(kappa, kappa).coeff
                assert (norm == 0) == (q in ms.exceptional)
                if q not in ms.exceptional:
                    assert norm >= Fraction(euler_phi(factorize(q, tables)), 4)

    def test_degenerate_iff_sum_vector_vanishes(self, tables):
        # odd target, trivial progression: the modulus-2 sum vector dies
        ctx = ProgressionContext(999, 1, 1)
        ms = build_moduli_set(6, 2, ctx, tables)
        assert 2 in ms.degenerate
        fam = model_family(ms, tables)
        for q, (eta, _) in fam.items():
            norm = local_product(eta, eta).coeff
            assert (norm == 0) == (q in ms.degenerate)

    def test_rejects_bad_bounds(self, tables):
        ctx = ProgressionContext(50, 1, 1)
        with pytest.raises(ValueError):
            build_moduli_set(0, 1, ctx, tables)
        with pytest.raises(ValueError):
            build_moduli_set(1, 0, ctx, tables)


class TestGlobalBuilders:
    def test_log_weights_match_chebyshev(self, tables):
        ctx = ProgressionContext(100, 1, 1)
        f = lambda_progression_function(ctx, tables)
        assert math.isclose(
            math.fsum(f.float_values), psi_in_ap(100, 1, 1, tables), rel_tol=1e-12
        )
        assert 64 in f.indices and 81 in f.indices and 100 not in f.indices

    def test_log_weights_respect_progression(self, tables):
        ctx = ProgressionContext(200, 3, 4)
        f = lambda_progression_function(ctx, tables)
        assert all(n % 4 == 3 for n in f.indices)
        assert 27 in f.indices  # 3^3 sits in the lane
        assert math.isclose(
            math.fsum(f.float_values), psi_in_ap(200, 3, 4, tables), rel_tol=1e-12
        )

    def test_mirror_small_case(self, tables):
        h = squarefree_mirror_function(10, tables)
        assert h.tolist() == [0, 0, 1, 1, 1, 0, 1, 1, 1, 0]
        assert int(h.sum()) == squarefree_count_in_ap(10, 1, 1, tables)

    def test_capacity_gate(self, tables, monkeypatch):
        monkeypatch.setattr(est, "MATERIALIZE_CAP", 100)
        with pytest.raises(CapacityError):
            squarefree_mirror_function(101, tables)
        with pytest.raises(CapacityError):
            lambda_progression_function(ProgressionContext(101, 1, 1), tables)

    def test_sparse_validation(self):
        with pytest.raises(ValueError):
            SparseFunction.from_floats(10, [0], [1.0])
        with pytest.raises(ValueError):
            SparseFunction.from_floats(10, [11], [1.0])

    def test_global_inner_variants(self, tables):
        g = squarefree_mirror_function(10, tables)
        f = SparseFunction.from_floats(10, [3, 6, 9], [0.5, 0.25, 2.0])
        # positions 3 and 9 survive the mirror mask, 6 does not
        assert global_inner(f, g) == Fraction(5, 2)
        assert global_inner(g, f) == Fraction(5, 2)
        assert global_inner(g, g) == 6
        assert global_inner(f, f) == Fraction(1, 4) + Fraction(1, 16) + 4
        other = SparseFunction.from_floats(10, [6, 9], [4.0, 0.5])
        assert global_inner(f, other) == Fraction(2)
        with pytest.raises(ValueError):
            global_inner(f, squarefree_mirror_function(11, tables))


class TestCrossProducts:
    def test_matches_brute_force(self, tables):
        ctx = ProgressionContext(97, 1, 1)
        fam = model_family(build_moduli_set(3, 2, ctx, tables), tables)
        length = 97
        for qa, (ua, _) in fam.items():
            for qb, (_, vb) in fam.items():
                brute = sum(
                    ua.entries[n % qa] * vb.entries[n % qb]
                    for n in range(1, length + 1)
                )
                assert periodic_cross(ua, vb, length) == brute

    def test_diagonal_at_full_periods(self, tables):
        ctx = ProgressionContext(120, 1, 1)
        fam = model_family(build_moduli_set(5, 1, ctx, tables), tables)
        for q, (eta, _) in fam.items():
            norm = local_product(eta, eta).coeff
            assert periodic_cross(eta, eta, 120) == 120 * norm


class TestWeights:
    def test_singleton_exact_weight_is_length(self, tables):
        ctx = ProgressionContext(50, 1, 1)
        ms = build_moduli_set(1, 1, ctx, tables)
        w = compute_weights(ms, tables)
        assert w.m_phi == {1: 50}
        assert w.m_psi == {}
        assert w.mode == "exact-cross-sum"

    def test_family_splits_match_classification(self, tables):
        ctx = ProgressionContext(1000, 1, 1)
        ms = build_moduli_set(5, 2, ctx, tables)
        w = compute_weights(ms, tables)
        assert set(w.m_phi) == set(ms.members) - ms.degenerate
        assert set(w.m_psi) == set(ms.members) - ms.exceptional
        for value in list(w.m_phi.values()) + list(w.m_psi.values()):
            assert isinstance(value, Fraction) and value > 0

    def test_exact_weights_near_diagonal(self, tables):
        # the cross sum is the diagonal plus divisor-size boundary terms
        ctx = ProgressionContext(10_000, 1, 1)
        ms = build_moduli_set(3, 1, ctx, tables)
        w = compute_weights(ms, tables)
        fam = model_family(ms, tables)
        for q, weight in w.m_phi.items():
            diagonal = 10_000 * local_product(fam[q][0], fam[q][0]).coeff
            assert abs(weight / diagonal - 1) <= Fraction(1, 4)

    def test_paper_form_values(self, tables):
        ctx = ProgressionContext(10**6, 1, 1)
        ms = build_moduli_set(4, 1, ctx, tables)
        w = compute_weights(
            ms, tables, mode="paper-form", padding_constant=1e4, padding_exponent=0.1
        )
        fam = model_family(ms, tables)
        for q, weight in w.m_phi.items():
            norm = local_product(fam[q][0], fam[q][0]).coeff
            assert weight == pytest.approx(10**6 * float(norm) + 1e4 * (10**6) ** 0.1)
            assert weight >= 10**6 * euler_phi(factorize(q, tables)) / 4

    def test_paper_form_rejects_bad_padding(self, tables):
        ctx = ProgressionContext(100, 1, 1)
        ms = build_moduli_set(2, 1, ctx, tables)
        with pytest.raises(ValueError):
            compute_weights(ms, tables, mode="paper-form", padding_constant=-1.0,
                            padding_exponent=0.1)
        with pytest.raises(ValueError):
            compute_weights(ms, tables, mode="paper-form")
        with pytest.raises(ValueError):
            compute_weights(ms, tables, padding_constant=1.0, padding_exponent=0.1)
        with pytest.raises(ValueError):
            compute_weights(ms, tables, mode="no-such-mode")

    def test_weights_must_be_positive(self):
        with pytest.raises(ValueError):
            Weights(m_phi={1: 0}, m_psi={}, mode="exact-cross-sum")


class TestEstimateInner:
    def test_singleton_is_rank_one(self, tables):
        ctx = ProgressionContext(12, 1, 1)
        ms = build_moduli_set(1, 1, ctx, tables)
        w = compute_weights(ms, tables)
        f = dense_int([3, 0, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5])
        g = dense_int([2, 7, 1, 8, 2, 8, 1, 8, 2, 8, 4, 5])
        got = estimate_inner(f, g, ms, w, tables)
        assert got == Fraction(int(f.sum()) * int(g.sum()), 12)

    def test_symmetric_and_bilinear(self, tables):
        ctx = ProgressionContext(60, 1, 1)
        ms = build_moduli_set(3, 2, ctx, tables)
        w = compute_weights(ms, tables)
        rng = np.random.default_rng(7)
        f1 = dense_int(rng.integers(-5, 6, size=60))
        f2 = dense_int(rng.integers(-5, 6, size=60))
        g = dense_int(rng.integers(-5, 6, size=60))
        a, b = Fraction(2, 3), Fraction(-7, 5)
        combo = [a * x + b * y for x, y in zip(f1.tolist(), f2.tolist())]
        lhs = estimate_inner(combo, g, ms, w, tables)
        rhs = a * estimate_inner(f1, g, ms, w, tables) + b * estimate_inner(
            f2, g, ms, w, tables
        )
        assert lhs == rhs
        assert estimate_inner(f1, g, ms, w, tables) == estimate_inner(
            g, f1, ms, w, tables
        )

    def test_constant_function_captured_exactly(self, tables):
        ctx = ProgressionContext(40, 1, 1)
        ms = build_moduli_set(1, 1, ctx, tables)
        w = compute_weights(ms, tables)
        h = dense_int([1] * 40)
        assert bessel_defect(h, ms, w, tables) == 0

    def test_bessel_defect_nonnegative_random(self, tables):
        rng = np.random.default_rng(0xBE55E1)
        for ctx in (
            ProgressionContext(500, 1, 1),
            ProgressionContext(501, 1, 2),
            ProgressionContext(502, 2, 5),
        ):
            ms = build_moduli_set(4, 2, ctx, tables)
            w = compute_weights(ms, tables)
            for _ in range(6):
                h = dense_int(rng.integers(-9, 10, size=ctx.target))
                assert bessel_defect(h, ms, w, tables) >= 0

    def test_bessel_defect_on_canonical_functions(self, tables):
        ctx = ProgressionContext(2000, 1, 2)
        ms = build_moduli_set(4, 1, ctx, tables)
        w = compute_weights(ms, tables)
        f = lambda_progression_function(ctx, tables)
        g = squarefree_mirror_function(ctx.target, tables)
        df = bessel_defect(f, ms, w, tables)
        assert 0 <= df <= global_inner(f, f)
        dg = bessel_defect(g, ms, w, tables)
        assert 0 <= dg <= global_inner(g, g)

    def test_almost_orthogonality_expansion(self, tables):
        # ||sum xi_u u||^2 <= sum M_u xi_u^2, expanded exactly
        rng = np.random.default_rng(0x0AB1E)
        configs = [
            ProgressionContext(5000, 1, 1),
            ProgressionContext(5001, 1, 2),
            ProgressionContext(9999, 2, 5),
            ProgressionContext(10_000, 5, 6),
        ]
        for ctx in configs:
            ms = build_moduli_set(6, 2, ctx, tables)
            w = compute_weights(ms, tables)
            fam = model_family(ms, tables)
            vectors = [(fam[q][0], w.m_phi[q]) for q in ms.members
                       if q in w.m_phi]
            vectors += [(fam[q][1], w.m_psi[q]) for q in ms.members
                        if q in w.m_psi]
            crosses = [
                [periodic_cross(u, v, ctx.target) for v, _ in vectors]
                for u, _ in vectors
            ]
            for _ in range(25):
                xi = [
                    Fraction(int(p), int(r))
                    for p, r in zip(
                        rng.integers(-9, 10, size=len(vectors)),
                        rng.integers(1, 5, size=len(vectors)),
                    )
                ]
                lhs = sum(
                    xi[i] * xi[j] * crosses[i][j]
                    for i in range(len(vectors))
                    for j in range(len(vectors))
                )
                rhs = sum(x * x * m for x, (_, m) in zip(xi, vectors))
                assert lhs <= rhs

    def test_tracks_true_product_moderate_size(self, tables):
        ctx = ProgressionContext(10_000, 1, 1)
        ms = build_moduli_set(8, 2, ctx, tables)
        w = compute_weights(ms, tables)
        f = lambda_progression_function(ctx, tables)
        g = squarefree_mirror_function(ctx.target, tables)
        approx = float(estimate_inner(f, g, ms, w, tables))
        truth = float(global_inner(f, g))
        assert truth > 0
        assert abs(approx / truth - 1) < 0.3


class TestBreakdownAndPredictions:
    def test_rows_sum_to_estimate(self, tables):
        ctx = ProgressionContext(3000, 1, 1)
        ms = build_moduli_set(4, 2, ctx, tables)
        w = compute_weights(ms, tables)
        f = lambda_progression_function(ctx, tables)
        g = squarefree_mirror_function(ctx.target, tables)
        rows = per_q_breakdown(f, g, ms, w, tables)
        assert [row["q"] for row in rows] == list(ms.members)
        total = math.fsum(row["contribution"] for row in rows)
        assert total == pytest.approx(
            float(estimate_inner(f, g, ms, w, tables)), rel=1e-9
        )
        for row in rows:
            if row["degenerate"]:
                assert row["m_phi"] == 0.0 and row["f_phi"] == 0.0
            if row["exceptional"]:
                assert row["m_psi"] == 0.0 and row["f_psi"] == 0.0

    def test_predicted_log_weight_twist_sign(self, tables):
        # modulus 3 with target = 2 mod 3: the diff-vector twist's main
        # term is positive, matching the empirical product
        ctx = ProgressionContext(20_000, 1, 1)
        assert ctx.target % 3 == 2
        ms = build_moduli_set(3, 1, ctx, tables)
        pred = predicted_main_terms(ms, 3, tables)
        assert pred["f_psi"] == pytest.approx(ctx.target * 0.75)
        f = lambda_progression_function(ctx, tables)
        fam = model_family(ms, tables)
        empirical = float(_local_dot(f, fam[3][1], ctx.target))
        assert empirical > 0
        assert abs(empirical / pred["f_psi"] - 1) < 0.1

    def test_predicted_mirror_products_track(self, tables):
        ctx = ProgressionContext(20_000, 1, 1)
        ms = build_moduli_set(5, 1, ctx, tables)
        g = squarefree_mirror_function(ctx.target, tables)
        fam = model_family(ms, tables)
        for q in ms.members:
            pred = predicted_main_terms(ms, q, tables)
            got = float(_local_dot(g, fam[q][0], ctx.target))
            if abs(pred["phi_g"]) > 1:
                assert got == pytest.approx(pred["phi_g"], rel=0.05)
