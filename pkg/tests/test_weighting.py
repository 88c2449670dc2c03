import numpy as np
import pytest

from kdiff import (Domain, ValidationError, apply_weight, grid_center,
                   make_weight, unweight)
from conftest import rand_grid


class TestMakeWeight:
    def test_p_zero_gives_identity(self):
        w = make_weight(8, 8, r=0.075, p=0.0)
        assert np.all(w.values == 1.0)

    def test_center_clamped_to_eps(self):
        w = make_weight(9, 9, r=0.075, p=0.5, eps=1e-6)
        cu, cv = grid_center(9, 9)
        assert w.values[cu, cv] == 1e-6

    def test_offset_3_4_value(self):
        # (0.075 * (3^2 + 4^2)) ** 0.5 evaluated directly
        w = make_weight(11, 11, r=0.075, p=0.5)
        cu, cv = grid_center(11, 11)
        assert w.values[cu + 3, cv + 4] == pytest.approx(1.3693063937629153, abs=1e-12)
        assert w.values[cu - 3, cv + 4] == w.values[cu + 3, cv - 4]

    def test_radial_monotone_for_positive_p(self):
        for p in (0.25, 0.5, 1.0):
            w = make_weight(12, 9, r=0.075, p=p)
            cu, cv = grid_center(12, 9)
            du = np.arange(12)[:, None] - cu
            dv = np.arange(9)[None, :] - cv
            dist = np.sqrt(du**2 + dv**2).ravel()
            order = np.argsort(dist)
            vals = w.values.ravel()[order]
            assert np.all(np.diff(vals) >= -1e-15)

    def test_every_value_at_least_eps(self):
        w = make_weight(8, 8, r=1e-9, p=2.0, eps=1e-4)
        assert np.all(w.values >= 1e-4)

    def test_negative_p_stays_finite(self):
        w = make_weight(8, 8, r=0.075, p=-0.5)
        assert np.all(np.isfinite(w.values))
        assert np.all(w.values > 0)

    def test_invalid_parameters(self):
        with pytest.raises(ValidationError):
            make_weight(8, 8, r=0.0, p=0.5)
        with pytest.raises(ValidationError):
            make_weight(8, 8, r=-1.0, p=0.5)
        with pytest.raises(ValidationError):
            make_weight(8, 8, r=0.075, p=0.5, eps=0.0)


class TestApplyUnweight:
    def test_all_ones_is_identity(self, rng):
        w = make_weight(8, 8, r=0.075, p=0.0)
        x = rand_grid(rng, 8, 8)
        assert np.array_equal(apply_weight(x, w).data, x.data)
        assert np.array_equal(unweight(x, w).data, x.data)

    @pytest.mark.parametrize("p", [0.25, 0.5, 1.0])
    def test_round_trip_identity(self, rng, p):
        w = make_weight(16, 16, r=0.075, p=p)
        x = rand_grid(rng, 16, 16)
        back = unweight(apply_weight(x, w), w)
        assert np.max(np.abs(back.data - x.data)) < 1e-12
        forth = apply_weight(unweight(x, w), w)
        assert np.max(np.abs(forth.data - x.data)) < 1e-12

    def test_matches_scalar_loop(self, rng):
        w = make_weight(16, 16, r=0.2, p=0.7)
        x = rand_grid(rng, 16, 16)
        prod = apply_weight(x, w)
        quot = unweight(x, w)
        for u in range(16):
            for v in range(16):
                assert prod.data[u, v] == x.data[u, v] * w.values[u, v]
                assert quot.data[u, v] == x.data[u, v] / w.values[u, v]

    def test_shape_mismatch_rejected(self, rng):
        w = make_weight(8, 8, r=0.075, p=0.5)
        x = rand_grid(rng, 8, 9)
        with pytest.raises(ValidationError):
            apply_weight(x, w)

    def test_image_domain_rejected(self, rng):
        w = make_weight(8, 8, r=0.075, p=0.5)
        x = rand_grid(rng, 8, 8, Domain.IMAGE)
        with pytest.raises(ValidationError):
            apply_weight(x, w)
