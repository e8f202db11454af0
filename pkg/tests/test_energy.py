import numpy as np
import pytest

from hyperlap import (
    Hypergraph,
    NotAnOrdinaryGraph,
    canonical_subgradient,
    component_average,
    edge_face,
    energy,
    graph_laplacian_check,
    poincare_constant,
    spreads,
)
from hyperlap.energy import default_tol_active, edge_faces, subgradient_from_coefficients
from hyperlap.generators import random_hypergraph, random_ordinary_graph, random_potential, random_selection
from hyperlap.projection import distance_to_face, face_product

PS = (1.0, 1.5, 2.0, 3.0)


class TestEdgeFace:
    @pytest.mark.parametrize("a,b", [(0.3, -0.7), (-0.5, 0.2), (0.99, -0.99)])
    def test_interior_middle_values(self, four_vertex, a, b):
        face = edge_face(four_vertex, np.array([1.0, a, b, -1.0]), 0)
        assert (face.spread, face.argmax_set, face.argmin_set) == (2.0, (0,), (3,))

    def test_constant(self, four_vertex):
        face = edge_face(four_vertex, np.full(4, 0.25), 0)
        assert face.spread == 0.0
        assert face.argmax_set == face.argmin_set == (0, 1, 2, 3)

    def test_symmetric_datum(self, four_vertex):
        face = edge_face(four_vertex, np.array([2.0, 1.0, -1.0, -2.0]), 0)
        assert (face.spread, face.argmax_set, face.argmin_set) == (4.0, (0,), (3,))

    def test_ties_within_tolerance(self, four_vertex):
        x = np.array([1.0, 1.0 - 1e-12, 0.0, -1.0])
        face = edge_face(four_vertex, x, 0)
        assert face.argmax_set == (0, 1)
        assert face.spread == 2.0
        assert edge_face(four_vertex, x, 0, tol_active=0.0).argmax_set == (0,)

    def test_default_tolerance(self):
        assert default_tol_active(np.array([3.0, -5.0])) == pytest.approx(6e-9)

    def test_negative_tolerance(self, four_vertex):
        with pytest.raises(ValueError):
            edge_face(four_vertex, np.zeros(4), 0, tol_active=-1.0)

    def test_shape_check(self, four_vertex):
        with pytest.raises(ValueError):
            spreads(four_vertex, np.zeros(3))


class TestEnergy:
    def test_symmetric_datum(self, four_vertex):
        assert energy(four_vertex, np.array([2.0, 1.0, -1.0, -2.0]), 2.0) == 8.0

    def test_weighted_sum(self):
        G = Hypergraph(3, [[0, 1], [0, 1, 2]], [2.0, 0.5])
        x = np.array([1.0, -1.0, 3.0])
        assert energy(G, x, 3.0) == pytest.approx((2.0 * 2**3 + 0.5 * 4**3) / 3)

    def test_translation_invariance(self, rng):
        for _ in range(50):
            G = random_hypergraph(rng)
            x = random_potential(rng, G.n)
            for p in PS:
                assert energy(G, x + 1.0, p) == pytest.approx(energy(G, x, p), rel=1e-12, abs=1e-12)

    def test_rejects_small_p(self, four_vertex):
        with pytest.raises(ValueError):
            energy(four_vertex, np.zeros(4), 0.9)


class TestCanonicalSubgradient:
    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
    def test_degenerate_pair(self, four_vertex, p):
        want = np.array([2 ** (p - 1), 0.0, 0.0, -(2 ** (p - 1))])
        for x in ([1.0, 0.3, -0.7, -1.0], [1.0, -0.5, 0.2, -1.0]):
            assert np.array_equal(canonical_subgradient(four_vertex, np.array(x), p).vector, want)

    def test_constant_p2(self, four_vertex):
        assert np.array_equal(canonical_subgradient(four_vertex, np.full(4, 3.0), 2.0).vector, np.zeros(4))

    def test_constant_p1_is_centroid_zero(self, four_vertex):
        sg = canonical_subgradient(four_vertex, np.full(4, 3.0), 1.0)
        assert np.array_equal(sg.vector, np.zeros(4))
        assert sg.coefficients[0].scale == 1.0

    def test_two_pair_face(self, four_vertex):
        sg = canonical_subgradient(four_vertex, np.array([1.0, 1.0, -1.0, -1.0]), 2.0)
        assert np.array_equal(sg.vector, [1.0, 1.0, -1.0, -1.0])
        np.testing.assert_array_equal(sg.coefficients[0].lam, [0.5, 0.5])

    def test_reconstructs_exactly(self, rng):
        for _ in range(100):
            G = random_hypergraph(rng)
            x = random_potential(rng, G.n)
            sg = canonical_subgradient(G, x, float(rng.choice(PS)))
            assert np.array_equal(sg.reconstruct(), sg.vector)

    def test_in_the_operator(self, rng):
        for _ in range(100):
            G = random_hypergraph(rng)
            x = random_potential(rng, G.n)
            p = float(rng.choice(PS))
            y = canonical_subgradient(G, x, p).vector
            assert distance_to_face(face_product(G, x, p), y) <= 1e-10

    def test_oddness(self, rng):
        for _ in range(200):
            G = random_hypergraph(rng)
            x = random_potential(rng, G.n)
            p = float(rng.choice(PS))
            assert np.array_equal(canonical_subgradient(G, -x, p).vector, -canonical_subgradient(G, x, p).vector)

    def test_mean_free(self, rng):
        for _ in range(100):
            G = random_hypergraph(rng)
            x = random_potential(rng, G.n)
            y = canonical_subgradient(G, x, float(rng.choice(PS))).vector
            assert np.max(np.abs(component_average(y, G.components))) <= 1e-13


class TestSelections:
    def test_rejects_non_probability(self, four_vertex):
        x = np.array([1.0, 1.0, -1.0, -1.0])
        with pytest.raises(ValueError):
            subgradient_from_coefficients(four_vertex, x, 2.0, [([0.7, 0.7], [0.5, 0.5])])
        with pytest.raises(ValueError):
            subgradient_from_coefficients(four_vertex, x, 2.0, [([1.0], [0.5, 0.5])])

    def test_subgradient_inequality(self, rng):
        for _ in range(300):
            G = random_hypergraph(rng)
            p = float(rng.choice(PS))
            x, xi = random_potential(rng, G.n), random_potential(rng, G.n)
            y = random_selection(rng, G, x, p).vector
            gap = energy(G, xi, p) - energy(G, x, p) - float(y @ (xi - x))
            assert gap >= -1e-10 * (1 + energy(G, xi, p) + energy(G, x, p))

    def test_monotonicity_lower_bound(self, rng):
        for _ in range(300):
            G = random_hypergraph(rng)
            p = float(rng.choice(PS))
            x1, x2 = random_potential(rng, G.n), random_potential(rng, G.n)
            y1 = random_selection(rng, G, x1, p).vector
            y2 = random_selection(rng, G, x2, p).vector
            f1, f2 = spreads(G, x1), spreads(G, x2)
            bound = float(np.sum(G.weights * (f1 ** (p - 1) - f2 ** (p - 1)) * (f1 - f2)))
            pairing = float((y1 - y2) @ (x1 - x2))
            assert bound >= -1e-12
            assert pairing >= bound - 1e-10 * (1 + abs(pairing))

    def test_translation_keeps_faces(self, rng):
        for _ in range(100):
            G = random_hypergraph(rng)
            P = G.components
            x = random_potential(rng, G.n, ties=True)
            shift = rng.integers(-3, 4, size=P.count)[P.labels].astype(float)
            a, b = edge_faces(G, x), edge_faces(G, x + shift)
            assert [(f.argmax_set, f.argmin_set, f.spread) for f in a] == [
                (f.argmax_set, f.argmin_set, f.spread) for f in b
            ]


class TestPoincare:
    def test_random_instances(self, rng):
        for _ in range(200):
            G = random_hypergraph(rng)
            x = random_potential(rng, G.n)
            p = float(rng.choice(PS))
            C = poincare_constant(G, p=p)
            d = x - component_average(x, G.components)
            rhs = p * C * energy(G, x, p)
            for q in (1, 2, np.inf):
                assert np.linalg.norm(d, q) ** p <= rhs * (1 + 1e-9)


class TestGraphLaplacian:
    def test_path(self):
        G = Hypergraph(2, [[0, 1]])
        assert np.array_equal(graph_laplacian_check(G, np.array([1.0, 0.0])), [1.0, -1.0])

    def test_triangle(self):
        G = Hypergraph(3, [[0, 1], [1, 2], [0, 2]])
        assert np.array_equal(graph_laplacian_check(G, np.array([1.0, 0.0, 0.0])), [2.0, -1.0, -1.0])

    def test_constant(self):
        G = Hypergraph(3, [[0, 1], [1, 2]])
        assert np.array_equal(graph_laplacian_check(G, np.full(3, 5.0)), np.zeros(3))

    def test_agrees_with_canonical_exactly(self, rng):
        for _ in range(200):
            G = random_ordinary_graph(rng)
            x = rng.integers(-3, 4, size=G.n).astype(float)
            assert np.array_equal(canonical_subgradient(G, x, 2.0).vector, graph_laplacian_check(G, x))

    def test_rejects_hyperedges(self, four_vertex):
        with pytest.raises(NotAnOrdinaryGraph):
            graph_laplacian_check(four_vertex, np.zeros(4))

    def test_rejects_other_p(self):
        with pytest.raises(ValueError):
            graph_laplacian_check(Hypergraph(2, [[0, 1]]), np.zeros(2), 3.0)
