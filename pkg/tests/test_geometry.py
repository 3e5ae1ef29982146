import os
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from fsibeam.errors import CollisionError, DimensionError, DomainError
from fsibeam.geometry import (BeamProfile, build_geometry, eta_tilde_expansion, map_forward, map_inverse,
                              node_derivatives, profile_values, transport_trace,
                              transport_trace_inverse)


def bump(amplitude, nodes=65, length=1.0):
    return profile_values({'kind': 'bump', 'amplitude': amplitude}, length, nodes)


class TestNodeDerivatives(unittest.TestCase):
    def test_clamped_sine_squared(self):
        x = np.linspace(0.0, 1.0, 129)
        h = x[1] - x[0]
        fx, fxx, fxxx = node_derivatives(np.sin(np.pi * x)**2, h)
        assert_allclose(fx, np.pi * np.sin(2 * np.pi * x), atol=1e-3 * np.pi)
        assert_allclose(fxx, 2 * np.pi**2 * np.cos(2 * np.pi * x), atol=1e-3 * 2 * np.pi**2)
        exact = -4 * np.pi**3 * np.sin(2 * np.pi * x)
        assert_allclose(fxxx[2:-2], exact[2:-2], atol=2e-3 * 4 * np.pi**3)

    def test_too_few_nodes(self):
        with self.assertRaises(DimensionError):
            node_derivatives(np.zeros(5), 0.25)


class TestProfiles(unittest.TestCase):
    def test_bump_peak_and_clamping(self):
        eta = bump(0.3)
        self.assertAlmostEqual(eta[32], 0.3)
        self.assertEqual(eta[0], 0.0)
        self.assertEqual(eta[-1], 0.0)

    def test_polynomial_is_clamped(self):
        eta = profile_values({'kind': 'polynomial', 'coefficients': [1.0, -2.0, 0.5]}, 2.0, 33)
        self.assertEqual(eta[0], 0.0)
        self.assertAlmostEqual(eta[-1], 0.0)
        BeamProfile(eta, 2.0)

    def test_csv_column_by_header(self):
        values = bump(0.1, nodes=17)
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'eta.csv')
            with open(path, 'w') as fh:
                fh.write("x,eta\n")
                for x, v in zip(np.linspace(0, 1, 17), values):
                    fh.write("{!r},{!r}\n".format(x, v))
            eta = profile_values({'kind': 'csv', 'path': path, 'column': 'eta'}, 1.0, 17)
            assert_allclose(eta, values)
            with self.assertRaises(DimensionError):
                profile_values({'kind': 'csv', 'path': path, 'column': 'eta'}, 1.0, 33)

    def test_unknown_kind(self):
        with self.assertRaises(DomainError):
            profile_values({'kind': 'spline'}, 1.0, 17)


class TestBeamProfile(unittest.TestCase):
    def test_mode_defaults(self):
        self.assertEqual(BeamProfile.flat(1.0, 33).mode, 'rect')
        self.assertEqual(BeamProfile(bump(0.2, 33), 1.0).mode, 'graph')

    def test_rect_requires_flat_reference(self):
        with self.assertRaises(DomainError):
            BeamProfile(bump(0.2, 33), 1.0, mode='rect')

    def test_collapsed_reference(self):
        with self.assertRaises(CollisionError):
            BeamProfile(bump(-1.5, 33), 1.0)

    def test_unclamped_reference(self):
        x = np.linspace(0.0, 1.0, 33)
        with self.assertRaises(DomainError):
            BeamProfile(0.1 * np.sin(np.pi * x), 1.0)


class TestGeometryMap(unittest.TestCase):
    def setUp(self):
        self.profile = BeamProfile(bump(0.3), 1.0)

    def test_reference_position(self):
        gm = build_geometry(self.profile, self.profile.eta, np.zeros(65))
        self.assertTrue(gm.is_reference)
        assert_allclose(gm.at('centers', 'one_plus'), 1.0)

    def test_collision(self):
        with self.assertRaises(CollisionError) as ctx:
            build_geometry(self.profile, bump(-1.2), np.zeros(65))
        self.assertLess(ctx.exception.margin, 0.0)

    def test_wrong_shape(self):
        with self.assertRaises(DimensionError):
            build_geometry(self.profile, np.zeros(33), np.zeros(33))

    def test_maps_are_inverse(self):
        gm = build_geometry(self.profile, bump(-0.2), np.zeros(65))
        x = np.array([0.1, 0.5, 0.9])
        top = 1.0 + np.interp(x, self.profile.x, gm.eta)
        y = 0.7 * top
        _, z = map_forward(gm, x, y)
        assert_allclose(z, 0.7 * (1.0 + np.interp(x, self.profile.x, self.profile.eta)))
        _, back = map_inverse(gm, x, z)
        assert_allclose(back, y)

    def test_point_outside_domain(self):
        gm = build_geometry(self.profile, self.profile.eta, np.zeros(65))
        with self.assertRaises(DomainError):
            map_forward(gm, np.array([0.5]), np.array([2.0]))
        with self.assertRaises(DomainError):
            map_inverse(gm, np.array([1.5]), np.array([0.5]))

    def test_tilde_slope_expansion(self):
        profile = BeamProfile(bump(0.3, 257), 1.0)
        eta = bump(0.1, 257)
        gm = build_geometry(profile, eta, np.zeros(257))
        assert_allclose(eta_tilde_expansion(profile, eta), gm.tilde_x, atol=1e-3)

    def test_trace_transport(self):
        g = bump(0.05)
        assert_allclose(transport_trace(self.profile, g), g)
        with self.assertRaises(DimensionError):
            transport_trace(self.profile, g[:-1])
        rng = np.random.default_rng(0)
        h = rng.standard_normal(g.size)
        assert_array_equal(transport_trace_inverse(self.profile, transport_trace(self.profile, h)), h)


if __name__ == '__main__':
    unittest.main()
