import numpy as np
import pytest

import oracles
from wernerwit.figures import (
    CSV_HEADER,
    PI_STAR,
    FigurePoint,
    SeparableHull,
    fibonacci_sphere,
    figure_data,
    fit_common_axis,
    plane_residual,
    plane_state_probs,
    read_csv,
)
from wernerwit.werner import g_coords_from_probs


@pytest.fixture(scope="module")
def hull():
    return SeparableHull.build()


@pytest.fixture(scope="module")
def data(hull):
    return figure_data(samples=2000, hull=hull)


class TestHull:
    def test_origin_interior(self, hull):
        assert hull.contains(np.zeros(3))[0]

    def test_pi_star_exit_scale(self, hull):
        g = g_coords_from_probs(np.array(PI_STAR))
        assert hull.exit_scale(g)[0] == pytest.approx(float(oracles.PI_STAR_EXIT_SCALE), abs=1e-4)

    def test_separable_vertex_inside(self, hull):
        # B3 and B4 weights alone describe PPT, separable twirled states.
        assert hull.contains(g_coords_from_probs(np.array([0.0, 0.0, 0.0, 1.0])), tol=1e-6)[0]

    def test_entangled_vertex_outside(self, hull):
        assert not hull.contains(g_coords_from_probs(np.array([1.0, 0.0, 0.0, 0.0])))[0]

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            SeparableHull(np.eye(4)[[3, 3, 3, 3]] + np.array([[0, 0, 0, 0]]))


class TestPlane:
    @pytest.mark.parametrize("beta", [-0.5, -0.45, -0.4, -1.0 / 3.0])
    def test_plane_states_on_plane(self, beta):
        rng = np.random.default_rng(0)
        probs = rng.dirichlet(np.ones(4), size=200)
        ph, ok = plane_state_probs(probs, beta)
        assert ok.any()
        for g in g_coords_from_probs(ph[ok])[:50]:
            assert abs(plane_residual(FigurePoint(*g, "plane", beta))) <= 1e-12

    def test_masked_rows(self):
        # pi* itself lies below the beta = -1/2 plane; the row is kept and rescaled.
        ph, ok = plane_state_probs(np.array(PI_STAR), -0.5)
        assert ok[0]
        assert ph[0].sum() == pytest.approx(1.0)

    @pytest.mark.parametrize("beta", [-0.5, -0.4])
    def test_common_line(self, beta):
        # g1 = 0, g3 = 1/108 lies on every plane, for any g2.
        for g2 in (-0.1, 0.0, 0.3):
            pt = FigurePoint(0.0, g2, float(oracles.AXIS_G3), "plane", beta)
            assert abs(plane_residual(pt)) <= 1e-14


class TestFigureData:
    def test_counters(self, data):
        c = data.counters
        assert c["drawn"] == 2000
        assert c["border"] + c["separable_skipped"] == 2000
        assert c["plane"] + c["plane_skipped"] == 2000 * 4
        assert len(data.of_kind("plane")) == c["plane"]
        assert len(data.of_kind("pi-star")) == 1
        assert len(data.of_kind("basis-vertex")) == 4

    def test_border_points_on_hull(self, data, hull):
        g = np.array([p.g for p in data.of_kind("border-separable")])
        np.testing.assert_allclose(hull.exit_scale(g), 1.0, atol=1e-9)

    def test_hyperplane_identity(self, data):
        assert max(abs(plane_residual(p)) for p in data.of_kind("plane")) <= 1e-8

    def test_csv_round_trip(self, data):
        text = data.to_csv()
        assert text.splitlines()[0] == ",".join(CSV_HEADER)
        back = read_csv(text)
        assert back == data.points

    def test_reproducible(self, hull):
        assert figure_data(samples=300, seed=4, hull=hull).to_csv() == figure_data(samples=300, seed=4, hull=hull).to_csv()

    def test_rejects_no_samples(self, hull):
        with pytest.raises(ValueError):
            figure_data(samples=0, hull=hull)

    def test_read_csv_needs_header(self):
        with pytest.raises(ValueError):
            read_csv("a,b\n")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            FigurePoint(0.0, 0.0, 0.0, "cloud")


class TestCommonAxis:
    def test_fit(self, data):
        fit = fit_common_axis(data.points)
        assert fit.plane_residual <= 1e-6
        assert fit.line_residual <= 1e-6

    def test_axis_is_g2(self, data):
        fit = fit_common_axis(data.points)
        axis = int(np.argmax(oracles.AXIS_DIRECTION))
        assert fit.deviation_from(axis) <= 1e-6
        # Least-norm point of the line g1 = 0, g3 = 1/108.
        np.testing.assert_allclose(fit.anchor, [0.0, 0.0, float(oracles.AXIS_G3)], atol=1e-6)

    def test_needs_two_betas(self):
        with pytest.raises(ValueError):
            fit_common_axis([FigurePoint(0, 0, 0, "plane", -0.5)])


def test_fibonacci_sphere_unit():
    v = fibonacci_sphere(50)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0)

