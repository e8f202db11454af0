import numpy as np
import pytest

from hyperlap import Hypergraph, canonical_subgradient, component_average, energy, prox
from hyperlap.generators import random_hypergraph, random_potential
from hyperlap.projection import distance_to_face, face_product
from hyperlap.resolvent import prox_shifted, rounding_floor

PS = (1.0, 1.2, 1.5, 2.0, 2.5, 3.0)


def objective(G, x, y, lam, p):
    return 0.5 * float(np.sum((x - y) ** 2)) + lam * energy(G, x, p)


class TestClosedForm:
    @pytest.mark.parametrize("lam", [0.05, 0.25, 0.5])
    def test_symmetric_datum(self, four_vertex, lam):
        r = prox(four_vertex, np.array([2.0, 1.0, -1.0, -2.0]), lam, 2.0)
        a = 4 * lam / (1 + 2 * lam)
        np.testing.assert_allclose(r.x, [2 - a, 1, -1, -2 + a], atol=1e-12)
        assert r.residual <= 1e-12

    @pytest.mark.parametrize("p", PS)
    def test_constant_is_fixed(self, four_vertex, p):
        y = np.full(4, -0.7)
        assert np.array_equal(prox(four_vertex, y, 3.0, p).x, y)

    def test_inverse_problem(self, rng):
        for _ in range(100):
            G = random_hypergraph(rng)
            p = float(rng.choice(PS))
            x_star = rng.standard_normal(G.n)
            lam = float(rng.uniform(0.01, 1.0))
            y = x_star + lam * canonical_subgradient(G, x_star, p).vector
            np.testing.assert_allclose(prox(G, y, lam, p).x, x_star, atol=1e-8)


class TestCertificate:
    def test_residual_and_certificate(self, rng):
        for _ in range(150):
            G = random_hypergraph(rng)
            p = float(rng.choice(PS))
            y = random_potential(rng, G.n)
            lam = float(rng.uniform(0.01, 2.0))
            r = prox(G, y, lam, p)
            assert r.residual <= 1e-10 + r.floor
            target = (y - r.x) / lam
            np.testing.assert_allclose(r.certificate.reconstruct(), r.certificate.vector, atol=1e-12)
            assert np.linalg.norm(target - r.certificate.vector) <= r.residual + 1e-12
            assert distance_to_face(face_product(G, r.x, p), target) <= 1e-10 + r.floor

    def test_minimises_objective(self, rng):
        for _ in range(100):
            G = random_hypergraph(rng)
            p = float(rng.choice(PS))
            y = random_potential(rng, G.n)
            lam = float(rng.uniform(0.05, 1.0))
            x = prox(G, y, lam, p).x
            best = objective(G, x, y, lam, p)
            for _ in range(20):
                z = x + 1e-3 * rng.standard_normal(G.n)
                assert objective(G, z, y, lam, p) >= best - 1e-12

    def test_norm_bound(self, rng):
        for _ in range(100):
            G = random_hypergraph(rng)
            y = random_potential(rng, G.n)
            x = prox(G, y, float(rng.uniform(0.01, 3.0)), float(rng.choice(PS))).x
            assert np.linalg.norm(x) <= np.linalg.norm(y) * (1 + 1e-12)

    def test_nearly_merged_edge(self):
        # spread ~1e-13 at |x| ~ 1: the p < 2 scale cannot be resolved below the floor
        G = Hypergraph(2, [[1, 0], [0, 1], [0, 1], [0, 1]], [1.6484294240355124, 0.7886192065792956, 0.3982340500923731, 1.5440423766084501])
        y = np.array([-1.18863764, -1.18863762])
        r = prox(G, y, 0.01, 1.5)
        assert r.floor > 1e-10
        assert r.residual <= 1e-10 + r.floor
        assert abs(r.x[0] - r.x[1]) < 1e-12

    def test_tied_columns(self):
        G = Hypergraph(5, [[4, 2, 0, 3]], [2.8334355676323835])
        y = np.array([0.22911132, 0.0980231, -0.09629806, 0.22911132, -0.09629806])
        r = prox(G, y, 0.01, 1.5)
        assert r.residual <= 1e-12

    @pytest.mark.parametrize(
        "n,edges,weights,y,lam",
        [
            (
                5,
                [[3, 2], [3, 0, 1], [4, 0, 2], [1, 3, 2, 4]],
                [2.8651588346888253, 2.8469971594175276, 2.0996753086067343, 0.33000717364436377],
                [0.34291789, 1.97878739, -0.14751907, -1.57944705, -0.65970014],
                1.483877611135495,
            ),
            (
                4,
                [[2, 1, 3], [1, 2, 3, 0], [3, 1, 2], [0, 1, 2, 3]],
                [1.5296803016725258, 1.8239933985660113, 2.539629967124118, 1.2868281967392403],
                [0.98128785, 1.385052, -1.53136285, 0.69841152],
                1.6603729828818479,
            ),
        ],
    )
    def test_rank_deficient_newton_systems(self, n, edges, weights, y, lam):
        r = prox(Hypergraph(n, edges, weights), np.array(y), lam, 1.2)
        assert r.residual <= 1e-10 + r.floor

    def test_floor_vanishes_for_p1_and_flat_edges(self, four_vertex):
        assert rounding_floor(four_vertex, np.array([1.0, 0.0, 0.0, -1.0]), 1.0) == 0.0
        assert rounding_floor(four_vertex, np.zeros(4), 1.5) == 0.0
        assert rounding_floor(four_vertex, np.array([1.0, 0.0, 0.0, -1.0]), 2.0) < 1e-14


class TestStructure:
    def test_nonexpansive(self, rng):
        for _ in range(200):
            G = random_hypergraph(rng)
            p = float(rng.choice(PS))
            lam = float(rng.uniform(0.01, 2.0))
            y1, y2 = random_potential(rng, G.n), random_potential(rng, G.n)
            a, b = prox(G, y1, lam, p).x, prox(G, y2, lam, p).x
            assert np.linalg.norm(a - b) <= np.linalg.norm(y1 - y2) + 2e-10

    def test_translation_equivariance(self, rng):
        for _ in range(100):
            G = random_hypergraph(rng)
            P = G.components
            p = float(rng.choice(PS))
            y = random_potential(rng, G.n)
            shift = rng.standard_normal(P.count)[P.labels]
            a, b = prox(G, y, 0.3, p).x, prox(G, y + shift, 0.3, p).x
            np.testing.assert_allclose(b, a + shift, atol=1e-8)

    def test_mean_preservation(self, rng):
        for _ in range(100):
            G = random_hypergraph(rng)
            P = G.components
            y = random_potential(rng, G.n)
            x = prox(G, y, float(rng.uniform(0.01, 2.0)), float(rng.choice(PS))).x
            np.testing.assert_allclose(component_average(x, P), component_average(y, P), atol=1e-12)

    def test_isolated_vertices_untouched(self):
        G = Hypergraph(4, [[0, 1]])
        y = np.array([1.0, -1.0, 5.0, -7.0])
        x = prox(G, y, 0.1, 2.0).x
        assert x[2] == 5.0 and x[3] == -7.0

    def test_shifted_resolvent(self, rng):
        G = random_hypergraph(rng)
        y = random_potential(rng, G.n)
        dt, eps = 0.1, 0.5
        r = prox_shifted(G, y, dt, eps, 2.0)
        # (1 + dt eps) x + dt L(x) contains y
        target = (y - (1 + dt * eps) * r.x) / dt
        assert distance_to_face(face_product(G, r.x, 2.0), target) <= 1e-9

    def test_deterministic(self, rng):
        G = random_hypergraph(rng)
        y = random_potential(rng, G.n)
        assert prox(G, y, 0.3, 1.5).x.tobytes() == prox(G, y, 0.3, 1.5).x.tobytes()


class TestArguments:
    def test_bad_inputs(self, four_vertex):
        y = np.zeros(4)
        for kwargs in ({"lam": 0.0}, {"lam": -1.0}, {"lam": 1.0, "p": 0.5}, {"lam": 1.0, "tol_opt": 0.0}):
            with pytest.raises(ValueError):
                prox(four_vertex, y, **kwargs)
        with pytest.raises(ValueError):
            prox(four_vertex, np.zeros(3), 1.0)
        with pytest.raises(ValueError):
            prox_shifted(four_vertex, y, 0.1, -1.0)
