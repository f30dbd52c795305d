import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from antoine.errors import NoUniqueFixedPoint
from antoine.geom3 import (
    Circle3,
    Membership,
    Rotation3,
    Similarity3,
    SolidTorus,
    circle_circle_distance,
    point_circle_distance,
    vec3,
)

E3 = np.array([0.0, 0.0, 1.0])

coords = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
vectors = st.builds(lambda x, y, z: np.array([x, y, z]), coords, coords, coords)
axes = vectors.filter(lambda v: np.linalg.norm(v) > 1e-2)
angles = st.floats(-math.pi, math.pi)
rotations = st.builds(Rotation3.about_axis, axes, angles)
scales = st.floats(0.05, 5.0)
similarities = st.builds(Similarity3, scales, rotations, vectors)


def random_similarity(rng):
    axis = rng.normal(size=3)
    return Similarity3(
        float(rng.uniform(0.2, 3.0)),
        Rotation3.about_axis(axis, float(rng.uniform(-math.pi, math.pi))),
        rng.normal(size=3),
    )


class TestSimilarityApply:
    def test_identity(self):
        assert np.allclose(Similarity3.identity().apply(vec3(1, 2, 3)), [1, 2, 3])

    def test_pure_scale(self):
        s = Similarity3(0.5, Rotation3.identity(), np.zeros(3))
        assert np.allclose(s.apply(vec3(2, 0, 0)), [1, 0, 0])

    def test_quarter_turn(self):
        s = Similarity3(1.0, Rotation3.about_axis(E3, math.pi / 2), np.zeros(3))
        assert np.allclose(s.apply(vec3(1, 0, 0)), [0, 1, 0], atol=1e-15)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(0)
        s = random_similarity(rng)
        pts = rng.normal(size=(20, 3))
        batch = s.apply(pts)
        for p, q in zip(pts, batch):
            assert np.allclose(s.apply(p), q)

    @given(similarities, vectors, vectors)
    def test_scale_law(self, s, p, q):
        lhs = np.linalg.norm(s.apply(p) - s.apply(q))
        rhs = s.scale * np.linalg.norm(p - q)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestSimilarityCompose:
    def test_identity_left(self):
        rng = np.random.default_rng(1)
        s = random_similarity(rng)
        c = Similarity3.identity().compose(s)
        p = vec3(0.3, -0.7, 2.0)
        assert np.allclose(c.apply(p), s.apply(p))

    def test_translations_add(self):
        t1 = Similarity3.translation(vec3(1, 2, 3))
        t2 = Similarity3.translation(vec3(-4, 0, 1))
        assert np.allclose(t1.compose(t2).shift, [-3, 2, 4])
        assert t1.compose(t2).scale == 1.0

    def test_scales_multiply_pointwise(self):
        # oracle: apply the two maps sequentially
        rng = np.random.default_rng(2)
        a = Similarity3(0.5, Rotation3.about_axis(rng.normal(size=3), 0.9), rng.normal(size=3))
        b = Similarity3(0.5, Rotation3.about_axis(rng.normal(size=3), -1.7), rng.normal(size=3))
        c = a.compose(b)
        assert c.scale == pytest.approx(0.25)
        for p in rng.normal(size=(100, 3)):
            assert np.allclose(c.apply(p), a.apply(b.apply(p)), atol=1e-12)


class TestSimilarityInvert:
    def test_identity(self):
        inv = Similarity3.identity().invert()
        assert np.allclose(inv.apply(vec3(5, -1, 2)), [5, -1, 2])

    def test_explicit(self):
        s = Similarity3(0.5, Rotation3.identity(), vec3(1, 0, 0))
        inv = s.invert()
        assert inv.scale == pytest.approx(2.0)
        assert np.allclose(inv.shift, [-2, 0, 0])

    def test_roundtrip_oracle(self):
        rng = np.random.default_rng(3)
        s = random_similarity(rng)
        inv = s.invert()
        for p in rng.normal(size=(100, 3)):
            assert np.allclose(inv.apply(s.apply(p)), p, atol=1e-12)
            assert np.allclose(s.apply(inv.apply(p)), p, atol=1e-12)


class TestFixedPoint:
    def test_pure_contraction(self):
        s = Similarity3(0.5, Rotation3.identity(), vec3(1, 0, 0))
        assert np.allclose(s.fixed_point(), [2, 0, 0])

    def test_with_half_turn(self):
        s = Similarity3(0.5, Rotation3.about_axis(E3, math.pi), vec3(1, 0, 0))
        assert np.allclose(s.fixed_point(), [2 / 3, 0, 0], atol=1e-14)

    def test_iteration_oracle(self):
        # the fixed point of a contraction is the limit of iteration
        rng = np.random.default_rng(4)
        s = Similarity3(0.3, Rotation3.about_axis(rng.normal(size=3), 1.1), rng.normal(size=3))
        x = np.zeros(3)
        for _ in range(200):
            x = s.apply(x)
        assert np.allclose(s.fixed_point(), x, atol=1e-10)

    def test_scale_one_rejected(self):
        s = Similarity3(1.0, Rotation3.about_axis(E3, 0.3), vec3(1, 0, 0))
        with pytest.raises(NoUniqueFixedPoint):
            s.fixed_point()

    @given(similarities)
    def test_residual(self, s):
        if abs(s.scale - 1.0) < 0.05:
            return
        x = s.fixed_point()
        assert np.linalg.norm(s.apply(x) - x) <= 1e-12 * (1.0 + np.linalg.norm(x))


class TestRotationNormalForm:
    def test_thousand_compositions(self):
        rng = np.random.default_rng(5)
        r = Rotation3.identity()
        for _ in range(1000):
            r = r.compose(Rotation3.about_axis(rng.normal(size=3), rng.uniform(-3, 3)))
        assert r.orthonormality_defect() < 1e-12
        assert np.linalg.det(r.matrix) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            Rotation3(np.ones((3, 3)))

    def test_aligning(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            a, b = rng.normal(size=3), rng.normal(size=3)
            r = Rotation3.aligning(a, b)
            assert np.allclose(r.apply(a / np.linalg.norm(a)), b / np.linalg.norm(b), atol=1e-12)

    def test_aligning_antiparallel(self):
        r = Rotation3.aligning(E3, -E3)
        assert np.allclose(r.apply(E3), -E3, atol=1e-12)


class TestPointCircleDistance:
    unit = Circle3(np.zeros(3), 1.0, E3)

    def test_on_circle(self):
        assert point_circle_distance(self.unit, vec3(1, 0, 0)) == pytest.approx(0.0, abs=1e-15)

    def test_axis_case(self):
        assert point_circle_distance(self.unit, np.zeros(3)) == pytest.approx(1.0)

    def test_off_plane(self):
        assert point_circle_distance(self.unit, vec3(2, 0, 1)) == pytest.approx(math.sqrt(2))

    def test_batch(self):
        pts = np.array([[1, 0, 0], [0, 0, 0], [2, 0, 1]], dtype=float)
        d = point_circle_distance(self.unit, pts)
        assert np.allclose(d, [0.0, 1.0, math.sqrt(2)])

    @given(similarities, vectors, st.floats(0.1, 3.0), axes)
    def test_similarity_invariance(self, s, center, radius, normal):
        c = Circle3(center, radius, normal)
        rng = np.random.default_rng(7)
        p = rng.normal(size=3)
        before = point_circle_distance(c, p)
        after = point_circle_distance(c.transform(s), s.apply(p))
        assert after == pytest.approx(s.scale * before, rel=1e-10, abs=1e-12)


class TestTorusContains:
    torus = SolidTorus(Circle3(np.zeros(3), 1.0, E3), 0.5)  # the m = 16 parent

    def test_core_point_inside(self):
        assert self.torus.contains(vec3(1, 0, 0)) is Membership.INSIDE

    def test_origin_outside(self):
        assert self.torus.contains(np.zeros(3)) is Membership.OUTSIDE

    def test_exact_boundary(self):
        assert self.torus.contains(vec3(1.5, 0, 0)) is Membership.BOUNDARY

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            SolidTorus(Circle3(np.zeros(3), 1.0, E3), 1.5)


class TestCircleCircleDistance:
    def test_coaxial(self):
        a = Circle3(np.zeros(3), 1.0, E3)
        b = Circle3(vec3(0, 0, 3), 1.0, E3)
        bound = circle_circle_distance(a, b, 64)
        assert 2.9 <= bound <= 3.0

    def test_concentric_coplanar(self):
        a = Circle3(np.zeros(3), 1.0, E3)
        b = Circle3(np.zeros(3), 3.0, E3)
        bound = circle_circle_distance(a, b, 64)
        assert 1.95 <= bound <= 2.0

    def test_necklace_pair_certified_vs_dense_oracle(self, necklace40):
        # dense-sampling oracle: the true minimum can only be below the
        # sampled minimum, and the certified bound must sit below both
        a, b = necklace40.child_circles[0], necklace40.child_circles[2]
        bound = circle_circle_distance(a, b, 64)
        pa, pb = a.sample(4096), b.sample(4096)
        oracle = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=2).min()
        assert bound <= oracle
        assert bound > 2.0 * necklace40.child_tube

    def test_grid_too_small(self):
        a = Circle3(np.zeros(3), 1.0, E3)
        with pytest.raises(ValueError):
            circle_circle_distance(a, a, 4)

    def test_bound_is_lower_bound_random(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            a = Circle3(rng.normal(size=3), rng.uniform(0.5, 2), rng.normal(size=3))
            b = Circle3(rng.normal(size=3) + 4.0, rng.uniform(0.5, 2), rng.normal(size=3))
            bound = circle_circle_distance(a, b, 128)
            oracle = np.linalg.norm(a.sample(2048)[:, None] - b.sample(2048)[None], axis=2).min()
            assert bound <= oracle + 1e-12


class TestVec3:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            vec3(float("nan"), 0, 0)

    def test_circle_rejects_zero_normal(self):
        with pytest.raises(ValueError):
            Circle3(np.zeros(3), 1.0, np.zeros(3))
