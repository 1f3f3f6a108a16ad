"""
Test suite per le verifiche quantitative.

Verifica:
- Distanza uniforme tra traiettorie
- Stimatore dell'esponente di Hoelder uniforme
- Studi di convergenza su un cammino e in media L1
- Modulo di Levy, crescita dei coefficienti e momenti di Kolmogorov
"""

import math

import pytest
import numpy as np

from mpre.analysis import (
    HOLDER_CAP,
    check_regularity_lowerbound,
    coefficient_growth_check,
    default_kolmogorov_pairs,
    estimate_uniform_holder,
    kolmogorov_moment_check,
    l1_rate_study,
    levy_modulus_ratio,
    rl_increment_variance,
    single_path_convergence,
    sup_distance,
)
from mpre.brownian import BrownianPath, HaarCoefficients, dyadic_points, haar_coefficients, replicate_seeds, sample_brownian
from mpre.errors import (
    DomainError,
    GridMismatchError,
    InsufficientLevelsError,
    InsufficientResolutionError,
)
from mpre.exponent import ExponentSpec, make_constant, make_tabulated
from mpre.simulator import PathSeries, dyadic_times, simulate_hat

QUARTERS = [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]


def _two_plateaus(level=10, high=0.9, low=0.6):
    """A = high su [0, 3/8], low su [5/8, 1], lineare in mezzo."""
    s = dyadic_points(level)
    u = np.clip((s - 0.375) / 0.25, 0.0, 1.0)
    return make_tabulated(high * (1.0 - u) + low * u)


def _series(times, values, scheme="hat"):
    """Traiettoria costruita a mano."""
    times = np.asarray(times, dtype=np.float64)
    return PathSeries(scheme, 0, times, values, "test")


class TestSupDistance:
    """Test per sup_distance()."""

    def test_identical(self):
        """Verifica distanza nulla tra traiettorie identiche."""
        t = dyadic_points(4)
        assert sup_distance(_series(t, t), _series(t, t)) == 0.0

    def test_shift(self):
        """Verifica la distanza di una traslazione."""
        t = dyadic_points(4)
        assert sup_distance(_series(t, t), _series(t, t + 0.5)) == pytest.approx(0.5)

    def test_grid_mismatch(self):
        """Verifica errore per griglie diverse."""
        with pytest.raises(GridMismatchError):
            sup_distance(_series(dyadic_points(3), np.zeros(9)), _series(dyadic_points(4), np.zeros(17)))


class TestUniformHolder:
    """Test per estimate_uniform_holder()."""

    def test_linear_function(self):
        """Verifica stima 1 per f(t) = t."""
        t = dyadic_points(12)
        report = estimate_uniform_holder(_series(t, t))
        assert report.estimate == pytest.approx(1.0, abs=1e-9)
        assert report.levels_used == list(range(4, 11))
        assert report.normalizers == [1.0] * 7
        assert not report.degenerate

    def test_smooth_function(self):
        """Verifica stima 1 per una funzione regolare non lineare."""
        t = dyadic_points(12)
        report = estimate_uniform_holder(_series(t, np.sin(3.0 * t)))
        assert report.estimate == pytest.approx(1.0, abs=0.01)

    def test_explicit_j_range(self):
        """Verifica che j_range esplicito sostituisca le scale di default."""
        t = dyadic_points(12)
        report = estimate_uniform_holder(_series(t, t), j_range=range(1, 11))
        assert report.levels_used == list(range(1, 11))
        assert report.estimate == pytest.approx(1.0, abs=1e-9)

    def test_normalizers_follow_max_growth(self):
        """Verifica g_j = sqrt(j + 1) su un cammino ruvido a finestra intera."""
        series = simulate_hat(sample_brownian(7, 12), make_constant(0.6), dyadic_times(12))
        report = estimate_uniform_holder(series)
        expected = [math.sqrt(j + 1) for j in report.levels_used]
        assert all(g <= e + 1e-12 for g, e in zip(report.normalizers, expected))
        assert report.normalizers[-1] == pytest.approx(expected[-1])
        assert "normalizers" in report.to_dict()

    def test_constant_is_degenerate(self):
        """Verifica il caso degenere con oscillazione nulla."""
        t = dyadic_points(10)
        report = estimate_uniform_holder(_series(t, np.full_like(t, 3.0)))
        assert report.degenerate
        assert report.estimate == HOLDER_CAP

    def test_invariant_to_sign_and_scale(self):
        """Verifica invarianza per cambio di segno e scala positiva."""
        series = simulate_hat(sample_brownian(7, 10), make_constant(0.75), dyadic_times(10))
        base = estimate_uniform_holder(series).estimate
        flipped = estimate_uniform_holder(_series(series.times, -series.values)).estimate
        scaled = estimate_uniform_holder(_series(series.times, 3.0 * series.values)).estimate
        assert flipped == pytest.approx(base, abs=1e-12)
        assert scaled == pytest.approx(base, abs=1e-9)

    def test_window(self):
        """Verifica la scala minima di default su una finestra."""
        t = dyadic_points(10)
        report = estimate_uniform_holder(_series(t, t ** 2), window=(0.25, 0.5))
        assert report.levels_used[0] == 3
        assert report.window == (0.25, 0.5)

    def test_off_grid_window(self):
        """Verifica errore per estremi fuori griglia."""
        t = dyadic_points(10)
        with pytest.raises(GridMismatchError, match="non sta sulla griglia"):
            estimate_uniform_holder(_series(t, t), window=(0.1, 0.5))

    def test_non_dyadic_grid(self):
        """Verifica errore per griglie non diadiche."""
        t = np.linspace(0.0, 1.0, 11)
        with pytest.raises(GridMismatchError):
            estimate_uniform_holder(_series(t, t))

    def test_j_range_too_fine(self):
        """Verifica errore per scale oltre L - 2."""
        t = dyadic_points(8)
        with pytest.raises(GridMismatchError, match="j_range"):
            estimate_uniform_holder(_series(t, t), j_range=range(2, 8))

    def test_sample_path_estimate(self):
        """Verifica una stima plausibile per A = 0.75 su pochi seed."""
        A = make_constant(0.75)
        estimates = [
            estimate_uniform_holder(simulate_hat(sample_brownian(seed, 12), A, dyadic_times(12))).estimate
            for seed in replicate_seeds(3, 3)
        ]
        assert 0.5 < np.mean(estimates) < 0.95

    @pytest.mark.slow
    @pytest.mark.parametrize("H", [0.6, 0.75, 0.85])
    def test_constant_exponent_recovered(self, H):
        """Verifica |stima media - H| <= 0.1 su 20 seed a J = 14."""
        A = make_constant(H)
        estimates = [
            estimate_uniform_holder(simulate_hat(sample_brownian(seed, 14), A, dyadic_times(14))).estimate
            for seed in replicate_seeds(0, 20)
        ]
        assert abs(np.mean(estimates) - H) <= 0.1

    @pytest.mark.slow
    def test_constant_exponent_windows(self):
        """Verifica la stima su finestre di un quarto per A = 0.75."""
        A = make_constant(0.75)
        gaps = []
        for seed in replicate_seeds(1, 10):
            series = simulate_hat(sample_brownian(seed, 14), A, dyadic_times(14))
            gaps.extend(w.gap for w in check_regularity_lowerbound(series, A, QUARTERS).windows)
        assert abs(np.mean(gaps)) <= 0.1


class TestRegularityLowerbound:
    """Test per check_regularity_lowerbound()."""

    def test_linear_function_passes(self):
        """Verifica che f(t) = t superi il limite per ogni finestra."""
        t = dyadic_points(10)
        A = make_constant(0.75)
        report = check_regularity_lowerbound(_series(t, t), A, [(0.0, 0.5), (0.5, 1.0)])
        assert report.passed
        assert report.windows[0].min_A == 0.75
        assert report.windows[0].gap == pytest.approx(0.25, abs=1e-9)
        assert "scarto" in report.to_text()

    def test_gamma_too_small(self):
        """Verifica errore per gamma <= 1/2."""
        t = dyadic_points(6)
        A = make_tabulated(np.full(65, 0.7), gamma=0.4)
        with pytest.raises(DomainError, match="gamma"):
            check_regularity_lowerbound(_series(t, t), A, [(0.0, 1.0)])

    def test_min_A_per_window(self):
        """Verifica min A sulle finestre di un esponente a due plateau."""
        t = dyadic_points(10)
        report = check_regularity_lowerbound(_series(t, t), _two_plateaus(), [(0.0, 0.25), (0.75, 1.0)])
        assert report.windows[0].min_A == pytest.approx(0.9)
        assert report.windows[1].min_A == pytest.approx(0.6)

    @pytest.mark.slow
    def test_two_plateaus_ordered(self):
        """Verifica stima(plateau alto) - stima(plateau basso) >= (0.9 - 0.6) / 2."""
        A = _two_plateaus()
        high, low = [], []
        for seed in replicate_seeds(2, 5):
            series = simulate_hat(sample_brownian(seed, 14), A, dyadic_times(14))
            report = check_regularity_lowerbound(series, A, [(0.0, 0.25), (0.75, 1.0)])
            high.append(report.windows[0].estimate)
            low.append(report.windows[1].estimate)
        assert np.mean(high) - np.mean(low) >= 0.15

    @pytest.mark.slow
    def test_rl_exponent_quarters(self):
        """Verifica il limite inferiore su quarti di [0, 1] in almeno il 95% dei casi."""
        spec = ExponentSpec.parse("rl:0.9:0.55:0.95")
        passes = []
        for seed in replicate_seeds(0, 20):
            path = sample_brownian(seed, 14)
            A = spec.build(path)
            passes.extend(check_regularity_lowerbound(simulate_hat(path, A, dyadic_times(14)), A, QUARTERS).passes)
        assert len(passes) == 80
        assert np.mean(passes) >= 0.95


class TestConvergence:
    """Test per single_path_convergence() e l1_rate_study()."""

    def test_too_few_levels(self):
        """Verifica errore con meno di 4 livelli."""
        with pytest.raises(InsufficientLevelsError):
            l1_rate_study("const:0.75", [4, 5, 6], n_seeds=2)
        with pytest.raises(InsufficientLevelsError):
            single_path_convergence(0, "const:0.75", [4, 5, 6], J_ref=12)

    def test_single_path_rate(self):
        """Verifica la decrescita dell'errore uniforme su un cammino."""
        report = single_path_convergence(7, "const:0.75", range(6, 11), J_ref=14)
        assert report.errors[-1] < report.errors[0]
        assert report.target_slope == -0.5
        assert report.passed
        assert report.to_dict()["statistic"] == "sup"

    def test_single_path_tilde(self):
        """Verifica lo studio sullo schema a punto sinistro."""
        report = single_path_convergence(3, "sin:0.6:0.9:1", range(6, 10), J_ref=13, scheme="tilde")
        assert report.errors[0] / report.errors[-1] > 1.5
        assert report.fitted_slope < 0

    def test_l1_rate_constant(self):
        """Verifica la pendenza L1 per A costante con 20 seed."""
        report = l1_rate_study("const:0.75", range(4, 8), n_seeds=20)
        assert report.statistic == "l1"
        assert report.target_slope == -0.5
        assert report.passed
        assert "Esito" in report.to_text()

    @pytest.mark.slow
    @pytest.mark.parametrize("text", ["sin:0.6:0.9:1", "rl:0.9:0.55:0.95"])
    def test_l1_rate_acceptance(self, text):
        """Verifica la pendenza L1 con 200 seed."""
        report = l1_rate_study(text, range(4, 9), n_seeds=200)
        assert report.passed

    @pytest.mark.slow
    def test_single_path_acceptance(self):
        """Verifica il fattore 8 ogni 6 livelli sul riferimento J_ref = 16."""
        report = single_path_convergence(11, "sin:0.6:0.9:1", range(6, 13), J_ref=16)
        assert report.errors[0] / report.errors[-1] >= 8.0
        assert report.passed


class TestBrownianDiagnostics:
    """Test per levy_modulus_ratio() e coefficient_growth_check()."""

    def test_levy_low_level(self):
        """Verifica errore sotto il livello 10."""
        with pytest.raises(InsufficientResolutionError):
            levy_modulus_ratio(sample_brownian(1, 9))

    def test_levy_zero_path(self):
        """Verifica rapporto nullo per incrementi nulli."""
        assert levy_modulus_ratio(BrownianPath(level=10, increments=np.zeros(1024), seed=0)) == 0.0

    def test_levy_close_to_one(self):
        """Verifica rapporto vicino a 1 a J = 16."""
        ratios = [levy_modulus_ratio(sample_brownian(seed, 16)) for seed in replicate_seeds(4, 5)]
        assert all(0.7 < r < 1.2 for r in ratios)

    @pytest.mark.slow
    def test_levy_trend(self):
        """Verifica che a J = 20 il rapporto medio sia piu' vicino a 1 che a J = 10."""
        seeds = replicate_seeds(6, 20)
        coarse = np.mean([levy_modulus_ratio(sample_brownian(seed, 10)) for seed in seeds])
        fine = np.mean([levy_modulus_ratio(sample_brownian(seed, 20)) for seed in seeds])
        assert abs(fine - 1.0) < abs(coarse - 1.0)

    def test_growth_zero(self):
        """Verifica valore nullo per coefficienti nulli."""
        coeffs = HaarCoefficients(eta0=0.0, eps=[np.zeros(2 ** j) for j in range(4)])
        assert coefficient_growth_check(coeffs) == 0.0

    def test_growth_bounded(self):
        """Verifica max |eps_jk| / sqrt(j + 1) limitato a profondita' 16."""
        for seed in replicate_seeds(5, 3):
            assert coefficient_growth_check(haar_coefficients(sample_brownian(seed, 16))) < 6.0

    def test_growth_sublinear(self):
        """Verifica proxy(profondita' 16) / proxy(profondita' 8) < 1.5 in media."""
        ratios = [
            coefficient_growth_check(haar_coefficients(sample_brownian(seed, 16)))
            / coefficient_growth_check(haar_coefficients(sample_brownian(seed, 8)))
            for seed in replicate_seeds(7, 10)
        ]
        assert all(r >= 1.0 for r in ratios)
        assert np.mean(ratios) < 1.5

    def test_growth_shallow(self):
        """Verifica errore sotto 4 livelli."""
        with pytest.raises(InsufficientResolutionError):
            coefficient_growth_check(haar_coefficients(sample_brownian(1, 3)))


class TestKolmogorov:
    """Test per rl_increment_variance() e kolmogorov_moment_check()."""

    def test_variance_zero_separation(self):
        """Verifica varianza nulla per t1 = t2."""
        assert rl_increment_variance(0.75, 0.4, 0.4) == 0.0

    def test_variance_from_origin(self):
        """Verifica E R_H(t)^2 = t^{2H} / (2H)."""
        assert rl_increment_variance(0.75, 0.0, 0.5) == pytest.approx(0.5 ** 1.5 / 1.5)

    def test_variance_brownian(self):
        """Verifica che per H = 1/2 si ritrovi il moto browniano."""
        assert rl_increment_variance(0.5, 0.3, 0.8) == pytest.approx(0.5)

    def test_variance_scaling(self):
        """Verifica la scala d^{2H} per separazioni piccole."""
        v1 = rl_increment_variance(0.75, 0.5, 0.5 + 2.0 ** -10)
        v2 = rl_increment_variance(0.75, 0.5, 0.5 + 2.0 ** -11)
        assert math.log2(v1 / v2) == pytest.approx(1.5, abs=0.05)

    def test_default_pairs(self):
        """Verifica le coppie di default."""
        pairs = default_kolmogorov_pairs()
        assert pairs[0] == (0.5, 0.75)
        assert pairs[-1] == (0.5, 0.5 + 2.0 ** -8)
        assert len(pairs) == 7

    def test_too_few_seeds(self):
        """Verifica errore con meno di 100 traiettorie."""
        with pytest.raises(DomainError, match="100"):
            kolmogorov_moment_check("const:0.75", n_seeds=99)

    def test_constant_exponent(self):
        """Verifica pendenza e oracolo per A costante."""
        report = kolmogorov_moment_check("const:0.75", n_seeds=100)
        assert report.target_slope == 1.5
        assert report.passed
        assert report.oracle_slope == pytest.approx(1.5, abs=0.2)
        assert len(report.oracle) == 7
        assert report.to_dict()["J_ref"] == 12

    @pytest.mark.slow
    def test_smooth_exponent(self):
        """Verifica la pendenza per l'esponente sinusoidale."""
        report = kolmogorov_moment_check("sin:0.6:0.9:1", n_seeds=200)
        assert report.target_slope == pytest.approx(1.2)
        assert report.passed
        assert report.oracle is None

    @pytest.mark.slow
    def test_rl_exponent(self):
        """Verifica pendenza >= 2 a_min - 0.2 per l'esponente RL."""
        report = kolmogorov_moment_check("rl:0.9:0.6:0.9", n_seeds=100)
        assert report.target_slope == pytest.approx(1.2)
        assert report.slope >= 1.0
        assert report.passed


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
