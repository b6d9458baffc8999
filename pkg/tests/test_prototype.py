import math

import numpy as np
import pytest

from flexhull.prototype import (
    Homothet,
    PrototypeError,
    custom_prototype,
    homothet_contains,
    homothet_from_json,
    homothet_halfspaces,
    homothet_vertices,
    prototype_from_json,
    regular_prototype,
)


def rows_as_set(A, b):
    return {(round(a[0], 12), round(a[1], 12), round(bi, 12)) for a, bi in zip(A, b)}


def verts_as_set(v):
    return {(round(x, 9), round(y, 9)) for x, y in v}


class TestRegular:
    def test_square_is_unit_square(self, square):
        assert rows_as_set(square.A, square.b) == {
            (1.0, 0.0, 1.0), (-1.0, 0.0, 1.0), (0.0, 1.0, 1.0), (0.0, -1.0, 1.0),
        }
        assert verts_as_set(square.vertices) == {(1, 1), (1, -1), (-1, 1), (-1, -1)}

    def test_hexagon_circumradius(self, hexagon):
        radii = np.linalg.norm(hexagon.vertices, axis=1)
        assert np.allclose(radii, 2 / math.sqrt(3), atol=1e-12)

    def test_triangle_circumradius(self, triangle):
        assert len(triangle.vertices) == 3
        assert np.allclose(np.linalg.norm(triangle.vertices, axis=1), 2.0, atol=1e-12)

    @pytest.mark.parametrize("n", range(3, 9))
    def test_area_formula(self, n):
        proto = regular_prototype(n)
        assert math.isclose(proto.area(), n * math.tan(math.pi / n), abs_tol=1e-9)

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_vertex_halfspace_duality(self, n):
        proto = regular_prototype(n, rotation=0.3)
        resid = proto.A @ proto.vertices.T - proto.b[:, None]
        assert np.max(resid) <= 1e-9
        for k in range(n):
            assert np.sum(np.abs(resid[:, k]) <= 1e-9) == 2

    def test_first_vertex_convention(self, square):
        # vertices[0] closes the loop: edges n-1 and 0 meet there
        v0 = square.vertices[0]
        assert abs(square.A[0] @ v0 - square.b[0]) <= 1e-12
        assert abs(square.A[-1] @ v0 - square.b[-1]) <= 1e-12

    def test_rotation(self):
        proto = regular_prototype(4, rotation=math.pi / 4)
        expected = np.array(
            [[math.sqrt(2), 0.0], [0.0, math.sqrt(2)],
             [-math.sqrt(2), 0.0], [0.0, -math.sqrt(2)]]
        )
        assert verts_as_set(proto.vertices) == verts_as_set(expected)

    def test_too_few_edges(self):
        with pytest.raises(PrototypeError):
            regular_prototype(2)


class TestCustom:
    def test_diamond(self):
        # |p| + |q| <= 1 once rows are unit-normalized
        proto = custom_prototype([[1, 1], [-1, 1], [-1, -1], [1, -1]], [1, 1, 1, 1])
        assert np.allclose(np.linalg.norm(proto.A, axis=1), 1.0)
        assert verts_as_set(proto.vertices) == {
            (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0),
        }

    def test_origin_outside_rejected(self):
        with pytest.raises(PrototypeError, match="origin"):
            custom_prototype([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, -0.5, 1, 1])

    def test_redundant_row_rejected(self):
        with pytest.raises(PrototypeError):
            custom_prototype(
                [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 0.0001]], [1, 1, 1, 1, 5]
            )


class TestHomothet:
    def test_identity_halfspaces(self, square):
        _, rhs = homothet_halfspaces(Homothet(square, 1.0, (0.0, 0.0)))
        assert np.allclose(rhs, 1.0)

    def test_scaled_translated_halfspaces(self, square):
        h = Homothet(square, 2.0, (1.0, 0.0))
        A, rhs = homothet_halfspaces(h)
        by_normal = {tuple(np.round(a, 9)): r for a, r in zip(A, rhs)}
        assert math.isclose(by_normal[(1.0, 0.0)], 3.0)
        assert math.isclose(by_normal[(-1.0, 0.0)], 1.0)
        assert math.isclose(by_normal[(0.0, 1.0)], 2.0)
        assert math.isclose(by_normal[(0.0, -1.0)], 2.0)

    def test_vertices_affine_image(self, square):
        v = homothet_vertices(Homothet(square, 0.5, (2.0, 3.0)))
        assert verts_as_set(v) == {(2.5, 3.5), (1.5, 3.5), (1.5, 2.5), (2.5, 2.5)}
        order_preserved = 0.5 * square.vertices + np.array([2.0, 3.0])
        assert np.allclose(v, order_preserved)

    def test_hexagon_scaled(self, hexagon):
        v = homothet_vertices(Homothet(hexagon, 2.0, (0.0, 0.0)))
        assert np.allclose(np.linalg.norm(v, axis=1), 4 / math.sqrt(3))

    def test_contains(self, square):
        identity = Homothet(square, 1.0, (0.0, 0.0))
        assert homothet_contains(identity, (0.0, 0.0))
        assert not homothet_contains(identity, (1.001, 0.0), tol=0.0)
        moved = Homothet(square, 2.0, (1.0, 0.0))
        assert homothet_contains(moved, (3.0, 2.0), tol=1e-12)  # vertex

    def test_vertex_duality_random(self, hexagon, rng):
        for _ in range(16):
            h = Homothet(hexagon, float(rng.uniform(0.1, 3)), tuple(rng.uniform(-2, 2, 2)))
            A, rhs = h.halfspaces()
            resid = A @ h.vertices().T - rhs[:, None]
            assert np.max(resid) <= 1e-9
            for k in range(hexagon.n_edges):
                assert np.sum(np.abs(resid[:, k]) <= 1e-9) == 2

    def test_composition(self, square, rng):
        # H[a1,b1; H[a2,b2;F0]] has the same point set as H[a1*a2, a1*b2+b1; F0]
        a1, a2 = 1.5, 0.7
        b1, b2 = np.array([0.3, -0.2]), np.array([-1.0, 0.5])
        inner_vertices = a2 * square.vertices + b2
        composed = a1 * inner_vertices + b1
        direct = Homothet(square, a1 * a2, tuple(a1 * b2 + b1)).vertices()
        assert np.allclose(composed, direct, atol=1e-12)

    def test_alpha_positive(self, square):
        with pytest.raises(PrototypeError):
            Homothet(square, 0.0, (0.0, 0.0))

    def test_distance_to(self, square):
        h = Homothet(square, 1.0, (0.0, 0.0))
        assert h.distance_to((0.5, 0.5)) == 0.0
        assert math.isclose(h.distance_to((2.0, 0.0)), 1.0)
        assert math.isclose(h.distance_to((2.0, 2.0)), math.sqrt(2))

    def test_area(self, square):
        assert math.isclose(Homothet(square, 2.0, (5.0, 5.0)).area(), 16.0)


class TestJson:
    def test_regular_roundtrip(self):
        proto = regular_prototype(6, rotation=0.25)
        again = prototype_from_json(proto.to_json())
        assert again.same_shape(proto)

    def test_custom_roundtrip(self):
        proto = custom_prototype([[2, 0], [-1, 0], [0, 3], [0, -1]], [2, 1, 3, 1])
        again = prototype_from_json(proto.to_json())
        assert again.same_shape(proto)

    def test_homothet_roundtrip(self, hexagon):
        h = Homothet(hexagon, 1.25, (0.5, -0.75))
        h2 = homothet_from_json(h.to_json())
        assert h2.alpha == h.alpha and h2.beta == h.beta
        assert h2.proto.same_shape(hexagon)

    def test_missing_fields(self):
        with pytest.raises(PrototypeError, match="n"):
            prototype_from_json({"kind": "regular"})
        with pytest.raises(PrototypeError, match="A"):
            prototype_from_json({"kind": "custom", "b": [1, 1, 1]})
        with pytest.raises(PrototypeError, match="kind"):
            prototype_from_json({"n": 4})
