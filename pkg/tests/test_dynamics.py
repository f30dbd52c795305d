import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from antoine.errors import DegenerateFit, NonInvertibleJacobian, UndefinedAtOrigin
from antoine.dynamics import (
    DEFAULT_BUDGET,
    ESCAPED,
    EXTERIOR,
    SURVIVED,
    EscapeKind,
    ExteriorModel,
    StepKind,
    _one_sided_hausdorff,
    box_dimension_estimate,
    chaos_game_sample,
    classify_points,
    coding_point,
    density_report,
    dilatation_estimate,
    dilatation_report,
    enumerate_periodic,
    escape_depth,
    exterior_model_map,
    inner_step,
    involution,
    orbit,
    periodic_point,
    similarity_dimension,
    winding_map,
)
from antoine.geom3 import Membership, point_circle_distance
from antoine.necklace import stage_summary, torus_at, two_slot_rotation, word_map

coords = st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)
vectors = st.builds(lambda x, y, z: np.array([x, y, z]), coords, coords, coords)


class TestInnerStep:
    def test_origin_not_in_parent(self, necklace40):
        assert inner_step(necklace40, np.zeros(3)).kind is StepKind.NOT_IN_T0

    def test_core_point_maps_to_base_circle(self, necklace40):
        p = necklace40.child_circles[0].sample(16)[5]
        r = inner_step(necklace40, p)
        assert r.kind is StepKind.MAPPED
        assert r.digit == 1
        assert point_circle_distance(necklace40.base_torus.core, r.point) < 1e-12

    def test_gap_point_exits(self, necklace40):
        # the base-circle point midway between child centers is in no child
        p = necklace40.base_torus.core.point_at(0.0)
        for c in necklace40.child_circles:
            d = point_circle_distance(c, p)
            assert d > necklace40.child_tube
        assert inner_step(necklace40, p).kind is StepKind.EXITS

    def test_conjugacy(self, necklace40):
        rng = np.random.default_rng(21)
        for _ in range(20):
            j = int(rng.integers(1, 41))
            angle = rng.uniform(0, 2 * math.pi)
            p = torus_at(necklace40, (j,)).core.point_at(angle)
            r = inner_step(necklace40, p)
            back = necklace40.child_maps[r.digit - 1].apply(r.point)
            assert np.linalg.norm(back - p) <= 1e-12 * (1.0 + np.linalg.norm(p))


class TestEscapeDepth:
    def test_origin_exterior(self, necklace40):
        assert escape_depth(necklace40, np.zeros(3), 40).kind is EscapeKind.EXTERIOR

    def test_fixed_point_survives_any_budget(self, necklace40):
        fp = word_map(necklace40, (1,)).fixed_point()
        for budget in (5, 20, 40):
            out = escape_depth(necklace40, fp, budget)
            assert out.kind is EscapeKind.SURVIVED
            assert out.depth == budget

    def test_gap_point_depth_zero(self, necklace40):
        out = escape_depth(necklace40, necklace40.base_torus.core.point_at(0.0), 40)
        assert out.kind is EscapeKind.ESCAPED
        assert out.depth == 0

    def test_matches_direct_containment_exhaustively_depth_two(self, necklace40):
        # oracle: scan every address of length 1 and 2 for containment
        m = necklace40.multiplicity
        rng = np.random.default_rng(22)
        pts = [necklace40.child_circles[7].sample(4)[0]]
        pts += [torus_at(necklace40, (3, 9)).core.point_at(0.4)]
        pts += [necklace40.base_torus.core.point_at(0.0)]
        pts += list(rng.uniform(-1.3, 1.3, size=(30, 3)))
        for p in pts:
            out = escape_depth(necklace40, p, 2)
            if out.kind is EscapeKind.EXTERIOR:
                continue
            in_stage1 = [
                j
                for j in range(1, m + 1)
                if torus_at(necklace40, (j,)).contains(p) is not Membership.OUTSIDE
            ]
            depth_oracle = 0
            if in_stage1:
                assert len(in_stage1) == 1
                j = in_stage1[0]
                depth_oracle = 1
                in_stage2 = [
                    k
                    for k in range(1, m + 1)
                    if torus_at(necklace40, (j, k)).contains(p) is not Membership.OUTSIDE
                ]
                if in_stage2:
                    assert len(in_stage2) == 1
                    depth_oracle = 2
            if out.kind is EscapeKind.SURVIVED:
                assert depth_oracle == 2
            else:
                assert out.depth == depth_oracle

    def test_bulk_matches_scalar(self, necklace40):
        rng = np.random.default_rng(23)
        pts = np.concatenate(
            [rng.uniform(-1.6, 1.6, size=(50, 3)), chaos_game_sample(necklace40, 10, 12, seed=5)]
        )
        status, depth, _ = classify_points(necklace40, pts, 15)
        for p, s, d in zip(pts, status, depth):
            out = escape_depth(necklace40, p, 15)
            assert {EXTERIOR: EscapeKind.EXTERIOR, ESCAPED: EscapeKind.ESCAPED, SURVIVED: EscapeKind.SURVIVED}[
                int(s)
            ] is out.kind
            if out.kind is EscapeKind.ESCAPED:
                assert out.depth == int(d)

    def test_expansion_rate(self, necklace40):
        # separation large enough that subtraction cancellation stays two
        # orders below the 1e-10 contract
        w = (3, 1)
        tor = torus_at(necklace40, w + w)
        x, y = tor.core.point_at(1.0), tor.core.point_at(1.2)
        a, b = x, y
        for _ in range(len(w)):
            a = inner_step(necklace40, a).point
            b = inner_step(necklace40, b).point
        ratio = np.linalg.norm(a - b) / np.linalg.norm(x - y)
        assert ratio == pytest.approx(necklace40.expansion ** len(w), rel=1e-10)


class TestCodingPoint:
    def test_pure_tail_is_fixed_point(self, necklace40):
        assert np.allclose(
            coding_point(necklace40, (), (1,)), word_map(necklace40, (1,)).fixed_point()
        )

    def test_prefix_pushes_into_child(self, necklace40):
        p = coding_point(necklace40, (2,), (1,))
        assert torus_at(necklace40, (2,)).contains(p) is Membership.INSIDE

    def test_lies_in_prefix_plus_tail_torus(self, necklace40):
        p = coding_point(necklace40, (2, 5), (1, 3))
        assert torus_at(necklace40, (2, 5, 1, 3)).contains(p) is Membership.INSIDE

    def test_survives_budget_and_stage_containment(self, necklace40):
        rng = np.random.default_rng(24)
        for _ in range(10):
            prefix = tuple(rng.integers(1, 41, size=rng.integers(0, 3)))
            tail = tuple(rng.integers(1, 41, size=rng.integers(1, 4)))
            p = coding_point(necklace40, prefix, tail)
            assert escape_depth(necklace40, p, 50).kind is EscapeKind.SURVIVED
            # cross-check the itinerary address against direct containment
            _, _, itin = classify_points(necklace40, p[None, :], 12, itinerary_digits=12)
            word = tuple(int(d) for d in itin[0] if d > 0)
            expected = (prefix + tail * 12)[:12]
            assert word == expected
            for L in (4, 8, 12):
                assert torus_at(necklace40, word[:L]).contains(p, 1e-9) is not Membership.OUTSIDE

    def test_empty_tail_rejected(self, necklace40):
        with pytest.raises(ValueError):
            coding_point(necklace40, (1,), ())


class TestPeriodicPoints:
    def test_single_digit_fixed(self, necklace40):
        pp = periodic_point(necklace40, (4,))
        r = inner_step(necklace40, pp.point)
        assert r.digit == 4
        assert np.linalg.norm(r.point - pp.point) < 1e-12

    def test_two_cycle_roundtrip(self, necklace40):
        pp = periodic_point(necklace40, (1, 2))
        assert torus_at(necklace40, (1, 2)).contains(pp.point) is Membership.INSIDE
        z = pp.point
        digits = []
        for _ in range(2):
            r = inner_step(necklace40, z)
            digits.append(r.digit)
            z = r.point
        c0 = stage_summary(necklace40, 0).max_diameter
        assert np.linalg.norm(z - pp.point) <= 1e-9 * c0
        assert digits == [1, 2]

    def test_multiplier_m16(self, necklace16):
        assert periodic_point(necklace16, (1, 2)).multiplier == pytest.approx(16.0)

    def test_enumerate_period_one(self, necklace16):
        pts = enumerate_periodic(necklace16, 1)
        assert len(pts) == 16
        words = {pp.word for pp in pts}
        assert words == {(j,) for j in range(1, 17)}

    def test_enumerate_period_two_orbit_count(self, necklace16):
        pts = enumerate_periodic(necklace16, 2)
        m = 16
        assert len(pts) == m + (m * m - m) // 2

    def test_enumerate_all_survive(self, necklace40):
        pts = enumerate_periodic(necklace40, 2, cap=100)
        arr = np.array([pp.point for pp in pts])
        status, _, _ = classify_points(necklace40, arr, DEFAULT_BUDGET)
        assert np.all(status == SURVIVED)

    def test_density_identity_is_zero(self):
        pts = np.random.default_rng(25).normal(size=(50, 3))
        assert _one_sided_hausdorff(pts, pts) == 0.0

    def test_density_monotone_and_bounded(self, necklace40):
        k = 8
        d = [density_report(necklace40, p, k, ref_count=128, seed=7) for p in (1, 2, 3)]
        assert d[0] >= d[1] >= d[2]
        c3 = stage_summary(necklace40, 3).max_diameter
        ck = stage_summary(necklace40, k).max_diameter
        assert d[2] <= c3 + ck


class TestModelMaps:
    def test_winding_fixes_angle_zero(self):
        assert np.allclose(winding_map(np.array([1.0, 0, 0]), 16), [1, 0, 0])

    def test_winding_m16_eighth_turn(self):
        p = np.array([math.cos(math.pi / 8), math.sin(math.pi / 8), 0.0])
        assert np.allclose(winding_map(p, 16), [-1, 0, 0], atol=1e-15)

    @given(vectors, st.sampled_from([10, 16, 40]))
    def test_winding_preserves_radius_and_height(self, p, m):
        q = winding_map(p, m)
        assert np.hypot(q[0], q[1]) == pytest.approx(np.hypot(p[0], p[1]), rel=1e-12, abs=1e-12)
        assert q[2] == p[2]

    def test_winding_collapses_rotated_children(self, necklace40):
        # the two-slot rotation is absorbed: w(rho(x)) = w(x), so all odd
        # children share one image and all even children share another
        rho = two_slot_rotation(necklace40.multiplicity)
        x = necklace40.child_circles[2].sample(32)
        assert np.allclose(
            winding_map(rho.apply(x), necklace40.multiplicity),
            winding_map(x, necklace40.multiplicity),
            atol=1e-12,
        )
        img_1 = winding_map(necklace40.child_circles[0].sample(256), 40)
        img_3 = winding_map(necklace40.child_circles[2].sample(256), 40)
        d = np.linalg.norm(img_3[:, None, :] - img_1[None, :, :], axis=2).min(axis=1)
        assert np.max(d) < 2e-2  # same point set up to sampling resolution

    def test_involution(self):
        assert np.allclose(involution(np.array([1.0, 2, 3])), [1, -2, -3])
        p = np.array([0.3, -0.8, 2.2])
        assert np.allclose(involution(involution(p)), p)
        axis_point = np.array([5.0, 0, 0])
        assert np.allclose(involution(axis_point), axis_point)

    def test_exterior_model_examples(self):
        m4 = ExteriorModel(4)
        p = np.array([2.0, 0, 0])
        assert np.linalg.norm(exterior_model_map(p, m4)) == pytest.approx(16.0)
        sphere_pt = np.array([0.6, 0.8, 0.0])
        assert np.allclose(exterior_model_map(sphere_pt, ExteriorModel(3)), sphere_pt)
        assert np.allclose(exterior_model_map(np.array([0.0, 2, 0]), ExteriorModel(2)), [0, 4, 0])

    def test_exterior_model_origin(self):
        with pytest.raises(UndefinedAtOrigin):
            exterior_model_map(np.zeros(3), ExteriorModel(2))

    def test_model_validation(self):
        with pytest.raises(ValueError):
            ExteriorModel(1)
        assert ExteriorModel.for_multiplicity(16).degree_root == 4
        assert ExteriorModel.for_multiplicity(40).degree_root == 2
        assert ExteriorModel(3).outer_radius == 8.0


class TestOrbit:
    def test_exterior_norm_sequence(self, necklace40):
        rec = orbit(necklace40, ExteriorModel(2), np.array([3.0, 0, 0]), max_iter=4)
        assert rec.exit is EscapeKind.EXTERIOR
        assert rec.exterior_norms[:3] == pytest.approx((3.0, 9.0, 81.0))
        assert rec.escape_certified
        assert not rec.handoff_clamped

    def test_periodic_never_exits(self, necklace40):
        pp = periodic_point(necklace40, (2, 9, 5))
        rec = orbit(necklace40, ExteriorModel(2), pp.point, max_iter=30)
        assert rec.exit is EscapeKind.SURVIVED
        assert rec.exterior_norms == ()
        period = 3
        digits = rec.itinerary[: 4 * period]
        assert digits == ((2, 9, 5) * 4)

    def test_gap_exit_is_clamped(self, necklace40):
        p = necklace40.base_torus.core.point_at(0.0)  # norm 1, exits at once
        rec = orbit(necklace40, ExteriorModel(2), p, max_iter=8)
        assert rec.exit is EscapeKind.ESCAPED
        assert rec.exit_depth == 0
        assert rec.handoff_clamped
        assert rec.exterior_norms[0] == pytest.approx(2.0)
        assert rec.escape_certified

    def test_perturbed_periodic_exit_bound(self, necklace40):
        m = necklace40.multiplicity
        bound = math.ceil(math.log(8e3 / m) / math.log(m / 4.0)) + 1
        pp = periodic_point(necklace40, (6, 2))
        rng = np.random.default_rng(26)
        for _ in range(10):
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            rec = orbit(necklace40, ExteriorModel(2), pp.point + 1e-3 * d, max_iter=40)
            assert rec.exit is EscapeKind.ESCAPED
            assert rec.exit_depth <= bound


class TestDilatation:
    def test_child_maps_conformal(self, necklace40):
        rng = np.random.default_rng(27)
        for j in (0, 13, 39):
            p = rng.normal(size=3)
            ko, ki = dilatation_estimate(necklace40.child_maps[j].apply, p)
            assert 1.0 <= ko <= 1.0 + 1e-6
            assert 1.0 <= ki <= 1.0 + 1e-6

    def test_winding_analytic_singular_values(self):
        # angular stretch m/2 gives singular values (m/2, 1, 1) off axis
        ko, ki = dilatation_estimate(lambda p: winding_map(p, 16), np.array([1.1, 0.3, 0.2]))
        assert ko == pytest.approx(64.0, rel=1e-2)
        assert ki == pytest.approx(8.0, rel=1e-2)

    def test_diagonal_map(self):
        ko, ki = dilatation_estimate(lambda p: p * np.array([2.0, 1.0, 1.0]), np.zeros(3))
        assert ko == pytest.approx(4.0, rel=1e-9)
        assert ki == pytest.approx(2.0, rel=1e-9)

    def test_composed_pullback_conformal(self, necklace40):
        pullback = word_map(necklace40, (3, 17, 9)).invert()
        p = torus_at(necklace40, (3, 17, 9, 1)).core.point_at(0.7)
        ko, ki = dilatation_estimate(pullback.apply, p)
        assert 1.0 <= ko <= 1.0 + 1e-6
        assert 1.0 <= ki <= 1.0 + 1e-6

    def test_singular_map_rejected(self):
        with pytest.raises(NonInvertibleJacobian):
            dilatation_estimate(lambda p: p * np.array([1.0, 1.0, 0.0]), np.zeros(3))

    def test_step_out_of_range(self):
        with pytest.raises(ValueError):
            dilatation_estimate(lambda p: p, np.zeros(3), h=1.0)

    def test_report_sense_preserving(self, necklace40):
        rng = np.random.default_rng(28)
        rep = dilatation_report(necklace40.child_maps[4].apply, rng.normal(size=(10, 3)))
        assert rep.sense_preserving
        assert rep.max_outer <= 1.0 + 1e-6
        assert rep.max_inner <= 1.0 + 1e-6


class TestDimensions:
    def test_similarity_dimension_exact(self):
        assert similarity_dimension(16) == pytest.approx(2.0)
        assert similarity_dimension(8) == pytest.approx(3.0)

    def test_similarity_dimension_monotone(self):
        vals = [similarity_dimension(m) for m in range(6, 200, 2)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_similarity_dimension_domain(self):
        with pytest.raises(ValueError):
            similarity_dimension(4)

    def test_segment_fixture(self):
        rng = np.random.default_rng(29)
        pts = np.zeros((10000, 3))
        pts[:, 0] = rng.uniform(0, 1, 10000)
        d = box_dimension_estimate(pts, np.geomspace(1e-3, 1e-1, 6))
        assert d == pytest.approx(1.0, abs=0.1)

    def test_square_fixture(self):
        rng = np.random.default_rng(30)
        pts = np.zeros((10000, 3))
        pts[:, :2] = rng.uniform(0, 1, (10000, 2))
        d = box_dimension_estimate(pts, np.geomspace(0.03, 0.1, 5))
        assert d == pytest.approx(2.0, abs=0.15)

    def test_degenerate_fit(self):
        pts = np.full((2000, 3), 0.5)
        with pytest.raises(DegenerateFit):
            box_dimension_estimate(pts, [0.1, 0.2])

    def test_input_validation(self):
        with pytest.raises(ValueError):
            box_dimension_estimate(np.zeros((2000, 3)), [0.1])
        with pytest.raises(ValueError):
            box_dimension_estimate(np.zeros((10, 3)), [0.1, 0.2])


class TestChaosGame:
    def test_deterministic(self, necklace40):
        a = chaos_game_sample(necklace40, 50, 20, seed=3)
        b = chaos_game_sample(necklace40, 50, 20, seed=3)
        assert a.tobytes() == b.tobytes()

    def test_distinct_points(self, necklace40):
        pts = chaos_game_sample(necklace40, 100, 20, seed=4)
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        np.fill_diagonal(d, np.inf)
        assert d.min() > 0.0

    def test_min_depth_enforced(self, necklace40):
        with pytest.raises(ValueError):
            chaos_game_sample(necklace40, 10, 4)

    def test_samples_live_in_their_address_tori(self, necklace40):
        # regenerate the addresses from the seed and check stage membership
        seed, count, depth = 31, 20, 10
        pts = chaos_game_sample(necklace40, count, depth, seed=seed)
        digits = np.random.default_rng(seed).integers(1, 41, size=(count, depth))
        for p, addr in zip(pts, digits.tolist()):
            for L in (1, 3, 6):
                assert torus_at(necklace40, tuple(addr[:L])).contains(p, 1e-9) is not Membership.OUTSIDE

    def test_samples_survive_their_depth(self, necklace40):
        pts = chaos_game_sample(necklace40, 200, 12, seed=6)
        status, _, _ = classify_points(necklace40, pts, 12)
        assert np.all(status == SURVIVED)


class TestBoundaryWitness:
    def test_coding_points_on_escape_boundary(self, necklace40):
        # each coding point survives; nearby points at every scale escape
        rng = np.random.default_rng(32)
        for _ in range(5):
            tail = tuple(rng.integers(1, 41, size=2))
            p = coding_point(necklace40, (), tail)
            assert escape_depth(necklace40, p, DEFAULT_BUDGET).kind is EscapeKind.SURVIVED
            for eps in (1e-2, 1e-3, 1e-4):
                found = False
                for _ in range(8):
                    d = rng.normal(size=3)
                    q = p + eps * d / np.linalg.norm(d)
                    out = escape_depth(necklace40, q, DEFAULT_BUDGET)
                    if out.kind is EscapeKind.ESCAPED:
                        found = True
                        break
                assert found
