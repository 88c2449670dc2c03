import numpy as np
import pytest

from kdiff import (ComplexGrid, Domain, FunctionScore, GaussianPrior,
                   GaussianScore, MlpDimensionError, MlpLayer, MlpMagicError,
                   MlpScore, MlpScoreWeights, MlpValueError, ValidationError,
                   ZeroScore, dsm_loss, gaussian_score, load_mlp,
                   make_schedule, perturb, save_mlp)
from conftest import rand_grid


class TestSchedule:
    def test_default_ladder_endpoints_and_ratio(self):
        s = make_schedule(0.01, 378.0, 1000)
        assert s.sigmas[0] == 0.01
        assert s.sigmas[-1] == 378.0
        ratios = s.sigmas[1:] / s.sigmas[:-1]
        assert np.allclose(ratios, (378.0 / 0.01) ** (1 / 1000), rtol=1e-12)

    def test_single_step(self):
        s = make_schedule(0.5, 2.0, 1)
        assert list(s.sigmas) == [0.5, 2.0]

    def test_geometric_midpoint(self):
        s = make_schedule(1.0, 4.0, 2)
        assert np.allclose(s.sigmas, [1.0, 2.0, 4.0], rtol=1e-12)

    def test_closed_form(self):
        s = make_schedule(0.02, 120.0, 377)
        i = np.arange(378)
        expect = 0.02 * (120.0 / 0.02) ** (i / 377)
        assert np.allclose(s.sigmas, expect, rtol=1e-12)

    def test_strictly_increasing(self):
        s = make_schedule(0.01, 378.0, 1000)
        assert np.all(np.diff(s.sigmas) > 0)

    def test_invalid_ordering(self):
        with pytest.raises(ValidationError):
            make_schedule(2.0, 1.0, 10)
        with pytest.raises(ValidationError):
            make_schedule(0.0, 1.0, 10)
        with pytest.raises(ValidationError):
            make_schedule(0.1, 1.0, 0)


class TestPerturb:
    def test_sigma_zero_is_identity(self, rng):
        x = rand_grid(rng, 8, 8)
        assert np.array_equal(perturb(x, 0.0, rng).data, x.data)

    def test_monte_carlo_variance(self):
        x = ComplexGrid(np.zeros((100, 100)), Domain.KSPACE)
        out = perturb(x, 2.0, np.random.default_rng(4))
        var = 0.5 * (out.data.real.var() + out.data.imag.var())
        assert abs(var - 4.0) / 4.0 < 0.1

    def test_monte_carlo_mean(self, rng):
        n = 10_000
        x = ComplexGrid(np.full((4, 4), 1.5 - 0.5j), Domain.KSPACE)
        acc = np.zeros((4, 4), dtype=complex)
        r = np.random.default_rng(12)
        for _ in range(n):
            acc += perturb(x, 2.0, r).data
        mean = acc / n
        bound = 3 * 2.0 / np.sqrt(n)
        assert np.all(np.abs(mean.real - 1.5) < bound)
        assert np.all(np.abs(mean.imag + 0.5) < bound)

    def test_composition_variance(self):
        # perturb at sigma then sigma' stacks like a single sqrt(s^2+s'^2)
        x = ComplexGrid(np.zeros((100, 100)), Domain.KSPACE)
        r = np.random.default_rng(5)
        out = perturb(perturb(x, 1.5, r), 2.0, r)
        var = 0.5 * (out.data.real.var() + out.data.imag.var())
        expect = 1.5**2 + 2.0**2
        assert abs(var - expect) / expect < 0.1

    def test_negative_sigma_rejected(self, rng):
        with pytest.raises(ValidationError):
            perturb(rand_grid(rng, 4, 4), -1.0, rng)


def log_density(prior: GaussianPrior, data: np.ndarray, sigma: float) -> float:
    s = prior.variance + sigma**2
    diff = data - prior.mean.data
    return float(np.sum(-(diff.real**2) / (2 * s) - (diff.imag**2) / (2 * s)))


def fd_score(prior: GaussianPrior, x: ComplexGrid, sigma: float,
             h: float = 1e-5) -> np.ndarray:
    """Central finite differences of the analytic log density."""
    out = np.zeros(x.shape, dtype=complex)
    for u in range(x.shape[0]):
        for v in range(x.shape[1]):
            for part, unit in ((0, 1.0), (1, 1.0j)):
                plus = x.data.copy()
                minus = x.data.copy()
                plus[u, v] += h * unit
                minus[u, v] -= h * unit
                g = (log_density(prior, plus, sigma)
                     - log_density(prior, minus, sigma)) / (2 * h)
                out[u, v] += g * unit
    return out


class TestGaussianScore:
    def test_zero_at_mean(self, rng):
        mu = rand_grid(rng, 6, 6)
        prior = GaussianPrior.isotropic(mu, 0.7)
        for sigma in (0.0, 1.0, 25.0):
            s = gaussian_score(prior, mu, sigma)
            assert np.all(s.data == 0)

    def test_single_pixel_substitution(self):
        mu = ComplexGrid(np.zeros((4, 4)), Domain.KSPACE)
        prior = GaussianPrior.isotropic(mu, 1.0)
        data = np.zeros((4, 4), dtype=complex)
        data[2, 1] = 2.0
        s = gaussian_score(prior, ComplexGrid(data, Domain.KSPACE), 0.0)
        assert s.data[2, 1] == -2.0
        assert np.count_nonzero(s.data) == 1

    @pytest.mark.parametrize("sigma", [0.0, 0.8])
    def test_matches_finite_differences(self, rng, sigma):
        mu = rand_grid(rng, 8, 8)
        var = 0.3 + rng.random((8, 8))
        prior = GaussianPrior(mu, var)
        x = rand_grid(rng, 8, 8)
        analytic = gaussian_score(prior, x, sigma).data
        numeric = fd_score(prior, x, sigma)
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-12)
        assert np.max(rel) < 1e-6

    def test_positive_variance_required(self, rng):
        mu = rand_grid(rng, 4, 4)
        with pytest.raises(ValidationError):
            GaussianPrior(mu, np.zeros((4, 4)))


class TestDsmLoss:
    def test_exact_kernel_score_is_near_zero(self, rng):
        x0 = rand_grid(rng, 4, 4)
        prior = GaussianPrior.isotropic(x0, 1e-12)
        provider = GaussianScore(prior)
        sched = make_schedule(0.1, 10.0, 16)
        loss = dsm_loss(provider, [x0], sched, np.random.default_rng(0), mc_draws=200)
        assert loss < 1e-10 * 2 * 16

    def test_zero_provider_matches_closed_form(self, rng):
        x0 = rand_grid(rng, 4, 4)
        sched = make_schedule(0.1, 10.0, 16)
        loss = dsm_loss(ZeroScore(), [x0], sched, np.random.default_rng(1),
                        mc_draws=3000)
        expect = 2 * 4 * 4  # E[sigma^2 ||z/sigma||^2] = E||z||^2 = 2*H*W
        assert abs(loss - expect) / expect < 0.05

    def test_exact_score_beats_zero_provider(self, rng):
        mu = rand_grid(rng, 4, 4)
        prior = GaussianPrior.isotropic(mu, 0.5)
        sched = make_schedule(0.05, 20.0, 32)
        samples = [perturb(mu, np.sqrt(0.5), rng) for _ in range(8)]
        exact = dsm_loss(GaussianScore(prior), samples, sched,
                         np.random.default_rng(2), mc_draws=200)
        zero = dsm_loss(ZeroScore(), samples, sched,
                        np.random.default_rng(2), mc_draws=200)
        assert exact < zero

    def test_offset_corruption_raises_loss(self, rng):
        mu = rand_grid(rng, 4, 4)
        prior = GaussianPrior.isotropic(mu, 0.5)
        sched = make_schedule(0.05, 20.0, 32)
        samples = [perturb(mu, np.sqrt(0.5), rng) for _ in range(4)]
        base = dsm_loss(GaussianScore(prior), samples, sched,
                        np.random.default_rng(3), mc_draws=300)
        for k in range(5):
            offset = 0.5 * (rng.standard_normal() + 1j * rng.standard_normal())

            def corrupted(x, sigma, _off=offset):
                s = gaussian_score(prior, x, sigma)
                return s.with_data(s.data + _off)

            worse = dsm_loss(FunctionScore(corrupted), samples, sched,
                             np.random.default_rng(3), mc_draws=300)
            assert worse > base

    def test_unit_weighting_variant(self, rng):
        x0 = rand_grid(rng, 4, 4)
        sched = make_schedule(0.5, 2.0, 8)
        flat = dsm_loss(ZeroScore(), [x0], sched, np.random.default_rng(5),
                        mc_draws=2000, weight_fn="one")
        # lambda = 1 leaves the kernel-score magnitude 2*H*W*E[1/sigma^2]
        sig = sched.sigmas
        expect = 2 * 16 * float(np.mean(1.0 / sig**2))
        assert abs(flat - expect) / expect < 0.1

    def test_unknown_weighting_rejected(self, rng):
        sched = make_schedule(0.1, 1.0, 4)
        with pytest.raises(ValidationError):
            dsm_loss(ZeroScore(), [rand_grid(rng, 2, 2)], sched, rng,
                     weight_fn="cubic")

    def test_empty_samples_rejected(self, rng):
        sched = make_schedule(0.1, 1.0, 4)
        with pytest.raises(ValidationError):
            dsm_loss(ZeroScore(), [], sched, rng)


def toy_weights(rng, dims=(9, 12, 8), activations=("tanh", "none")) -> MlpScoreWeights:
    layers = []
    for i in range(len(dims) - 1):
        w = rng.standard_normal((dims[i + 1], dims[i])).astype(np.float32) * 0.3
        b = rng.standard_normal(dims[i + 1]).astype(np.float32) * 0.1
        layers.append(MlpLayer(weight=w, bias=b, activation=activations[i]))
    return MlpScoreWeights(tuple(layers))


class TestMlpWeights:
    def test_zero_single_layer_gives_zero_scores(self, rng, tmp_path):
        n = 2 * 2
        layer = MlpLayer(weight=np.zeros((2 * n, 2 * n + 1), dtype=np.float32),
                         bias=np.zeros(2 * n, dtype=np.float32),
                         activation="none")
        path = tmp_path / "zero.mlps"
        save_mlp(MlpScoreWeights((layer,)), path)
        provider = load_mlp(path)
        x = rand_grid(rng, 2, 2)
        assert np.all(provider(x, 0.5).data == 0)

    def test_round_trip_forward_bit_identical(self, rng, tmp_path):
        weights = toy_weights(rng)
        path = tmp_path / "toy.mlps"
        save_mlp(weights, path)
        reloaded = load_mlp(path).weights
        for _ in range(10):
            vec = rng.standard_normal(9).astype(np.float32)
            assert np.array_equal(weights.forward(vec), reloaded.forward(vec))

    def test_provider_shapes_and_input_convention(self, rng, tmp_path):
        weights = toy_weights(rng)
        path = tmp_path / "toy.mlps"
        save_mlp(weights, path)
        provider = load_mlp(path)
        x = rand_grid(rng, 2, 2)
        out = provider(x, 0.7)
        vec = np.concatenate([x.data.real.ravel(), x.data.imag.ravel(),
                              [np.log(0.7)]]).astype(np.float32)
        flat = weights.forward(vec).astype(np.float64)
        expect = flat[:4].reshape(2, 2) + 1j * flat[4:].reshape(2, 2)
        assert np.array_equal(out.data, expect)

    def test_wrong_grid_size_rejected(self, rng, tmp_path):
        weights = toy_weights(rng)
        path = tmp_path / "toy.mlps"
        save_mlp(weights, path)
        with pytest.raises(ValidationError):
            load_mlp(path)(rand_grid(rng, 3, 3), 1.0)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.mlps"
        path.write_bytes(b"XXXX" + b"\x00" * 32)
        with pytest.raises(MlpMagicError):
            load_mlp(path)

    def test_bad_version(self, rng, tmp_path):
        weights = toy_weights(rng)
        path = tmp_path / "toy.mlps"
        save_mlp(weights, path)
        raw = bytearray(path.read_bytes())
        raw[4] = 9  # version field
        path.write_bytes(bytes(raw))
        with pytest.raises(MlpMagicError):
            load_mlp(path)

    def test_dimension_chain_mismatch(self, rng, tmp_path):
        layers = (
            MlpLayer(np.zeros((5, 9), np.float32), np.zeros(5, np.float32), "tanh"),
            MlpLayer(np.zeros((8, 6), np.float32), np.zeros(8, np.float32), "none"),
        )
        path = tmp_path / "chain.mlps"
        save_mlp(MlpScoreWeights(layers), path)
        with pytest.raises(MlpDimensionError):
            load_mlp(path)

    def test_truncated_payload(self, rng, tmp_path):
        weights = toy_weights(rng)
        path = tmp_path / "toy.mlps"
        save_mlp(weights, path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-8])
        with pytest.raises(MlpDimensionError):
            load_mlp(path)

    def test_non_finite_weights(self, rng, tmp_path):
        weights = toy_weights(rng)
        path = tmp_path / "toy.mlps"
        save_mlp(weights, path)
        raw = bytearray(path.read_bytes())
        nan = np.array([np.nan], dtype="<f4").tobytes()
        raw[-4:] = nan
        path.write_bytes(bytes(raw))
        with pytest.raises(MlpValueError):
            load_mlp(path)


class TestMlpScoreInSampler:
    def test_mlp_provider_runs_in_corrector(self, rng, tmp_path):
        from kdiff import corrector_step
        weights = toy_weights(rng)
        path = tmp_path / "toy.mlps"
        save_mlp(weights, path)
        provider = load_mlp(path)
        x = rand_grid(rng, 2, 2)
        out = corrector_step(x, provider, 0.5, 0.16, np.random.default_rng(0))
        assert out.shape == x.shape
