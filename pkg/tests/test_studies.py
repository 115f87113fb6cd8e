import math

import numpy as np
import pytest

from oscnet import studies
from oscnet.studies import (
    Peak,
    arrival_crossing,
    arrival_time,
    bessel_first_maximum,
    count_fringes,
    first_maximum,
    initial_negativity,
    propagation_speed,
    saturation_value,
    spontaneous_arrival,
)

LN2 = math.log(2.0)


class TestFirstMaximum:
    def test_flat_zero_series(self):
        ts = np.arange(0.0, 10.0, 0.05)
        assert first_maximum(ts, np.zeros_like(ts)) is None

    def test_monotone_series(self):
        ts = np.arange(0.0, 10.0, 0.05)
        assert first_maximum(ts, 0.1 * ts) is None

    def test_clipped_sine(self):
        ts = np.arange(0.0, 12.0, 0.05)
        peak = first_maximum(ts, np.maximum(0.0, np.sin(ts)))
        assert peak.time == pytest.approx(math.pi / 2.0, abs=0.005)
        assert peak.value == pytest.approx(1.0, abs=1e-4)

    def test_picks_envelope_not_precursor_ripple(self):
        # rising envelope with small carrier ripples: the first ripple top is
        # not the envelope peak
        ts = np.arange(0.0, 40.0, 0.05)
        env = np.exp(-0.02 * (ts - 25.0) ** 2)
        series = env * (1.0 + 0.05 * np.cos(2.2 * ts))
        peak = first_maximum(ts, series)
        assert peak.time == pytest.approx(25.0, abs=1.5)

    def test_first_of_equal_peaks(self):
        ts = np.arange(0.0, 20.0, 0.05)
        peak = first_maximum(ts, np.maximum(0.0, np.sin(ts)))
        assert peak.time < math.pi  # not the second lobe

    def test_arrival_crossing(self):
        ts = np.arange(0.0, 5.0, 0.1)
        vals = np.where(ts > 2.0, ts - 2.0, 0.0)
        assert arrival_crossing(ts, vals) == pytest.approx(2.1)
        assert arrival_crossing(ts, np.zeros_like(ts)) is None


class TestPredictions:
    def test_arrival_value(self):
        assert arrival_time(30, 0.1, "spring") == pytest.approx(344.89, abs=0.01)
        assert arrival_time(30, 0.1, "rwa") == pytest.approx(314.84, abs=0.01)

    def test_model_ratio(self):
        for n in (5, 17, 40):
            ratio = arrival_time(n, 0.1, "spring") / arrival_time(n, 0.1, "rwa")
            assert ratio == pytest.approx(math.sqrt(1.2), rel=1e-12)

    def test_speed_limits(self):
        assert propagation_speed(10**6, 0.1, "rwa") == pytest.approx(0.1, rel=1e-3)
        assert propagation_speed(10**6, 0.1, "spring") == pytest.approx(
            0.1 / math.sqrt(1.2), rel=1e-3
        )
        # finite-n correction is visible and slows the front
        assert propagation_speed(10, 0.1, "rwa") < 0.1

    def test_spontaneous_arrival_value(self):
        assert spontaneous_arrival(30, 0.1) == pytest.approx(164.3, abs=0.1)
        assert spontaneous_arrival(29, 0.1) == pytest.approx(158.8, abs=0.1)


class TestSaturation:
    def test_rwa_value(self):
        assert saturation_value(30, 0.1, "rwa") == pytest.approx(0.1394, abs=2e-4)

    def test_rwa_coupling_independence(self):
        assert saturation_value(30, 0.05, "rwa") == saturation_value(30, 0.3, "rwa")

    def test_spring_decreasing_in_site_and_coupling(self):
        grid_n = (10, 20, 30, 40, 50, 60)
        grid_c = (0.05, 0.1, 0.2, 0.35, 0.5)
        for c in grid_c:
            vals = [saturation_value(n, c, "spring") for n in grid_n]
            assert all(b < a for a, b in zip(vals, vals[1:]))
        for n in grid_n:
            vals = [saturation_value(n, c, "spring") for c in grid_c]
            assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_exact_bessel_maximum(self):
        assert bessel_first_maximum(29) == pytest.approx(0.215973, abs=1e-5)
        # the asymptotic coefficient overestimates the true maximum at n = 30
        assert 0.6748851 * 29 ** (-1 / 3.0) > bessel_first_maximum(29)

    def test_exact_variant_below_asymptotic(self):
        assert saturation_value(30, 0.1, "rwa", bessel_max="exact") < saturation_value(
            30, 0.1, "rwa"
        )


class TestPropagationStudy:
    def test_initial_pair_negativity(self):
        res = studies.propagation_study(20, 1, 0.1, 0.8, "spring", t_max=5.0)
        assert res.rows[0, 1] == pytest.approx(initial_negativity(0.8), abs=1e-9)

    def test_zero_plateau(self):
        res = studies.propagation_study(40, 12, 0.1, 0.8, "spring", t_max=180.0)
        ts, ns = res.column("time"), res.column("log_negativity")
        pred = res.derived["predicted_arrival"]
        assert np.all(ns[ts < 0.5 * pred] <= 1e-9)

    def test_spring_ripples_exceed_rwa(self):
        # counter-rotating terms put extra wiggles on the position-coupled
        # curve near its peak
        out = {}
        for model in ("spring", "rwa"):
            res = studies.propagation_study(40, 10, 0.1, 0.8, model)
            ts, ns = res.column("time"), res.column("log_negativity")
            t_pk = res.derived["first_peak_time"]
            sel = (ts > t_pk - 15) & (ts < t_pk + 15)
            out[model] = int(np.sum(np.abs(np.diff(np.sign(np.diff(ns[sel])))) > 0))
        assert out["spring"] > out["rwa"]

    def test_rejects_bad_site(self):
        with pytest.raises(ValueError):
            studies.propagation_study(10, 10, 0.1, 0.8)


class TestEfficiencySweep:
    def test_small_grid(self):
        res = studies.transfer_efficiency_sweep(
            8, 0.1, "rwa", [0.2, 0.5, 1.0], ring_size=24
        )
        eff = res.column("efficiency")
        assert np.all(eff > 0) and np.all(eff <= 1.0)
        assert bool(np.all(np.diff(eff) <= 1e-9)) == res.derived["nonincreasing"]


class TestSpontaneousStudy:
    def test_arrival_and_peak(self):
        res = studies.spontaneous_creation_study(12, 0.1)
        assert res.derived["measured_arrival"] is not None
        assert res.derived["first_peak_value"] > 0
        ts, ns = res.column("time"), res.column("log_negativity")
        assert np.all(ns[ts < 0.4 * res.derived["predicted_arrival"]] <= 1e-9)

    def test_thermal_reduces_peak(self):
        cold = studies.spontaneous_creation_study(12, 0.1)
        warm = studies.spontaneous_creation_study(12, 0.1, temperature_ratio=4.0)
        assert warm.derived["first_peak_value"] < cold.derived["first_peak_value"]
        assert warm.derived["measured_arrival"] > cold.derived["measured_arrival"]


class TestEndpointBulk:
    def test_endpoint_wins(self):
        res = studies.endpoint_vs_bulk(length=10, bulk_length=30, coupling=0.1)
        assert res.derived["endpoint_peak"] > res.derived["bulk_peak"]
        assert res.derived["peak_ratio"] > 1.0

    def test_reference_configuration_ratio_bracket(self):
        res = studies.endpoint_vs_bulk(length=30, bulk_length=90, coupling=0.1)
        assert res.derived["endpoint_peak"] > res.derived["bulk_peak"]
        assert 2.0 <= res.derived["peak_ratio"] <= 8.0

    def test_bulk_chain_must_be_long(self):
        with pytest.raises(ValueError):
            studies.endpoint_vs_bulk(length=30, bulk_length=40)


class TestBlockStudy:
    def test_width_one_matches_single_site(self):
        from oscnet import dynamics, gaussian, network

        res = studies.block_entanglement_study(
            ring_size=24, center=6, widths=(1, 3), squeezing=0.8, coupling=0.1
        )
        # width-1 block equals the plain pair negativity at the same time
        t_star = res.params["at_time"]
        ham = network.build_chain(24, 0.1, "periodic", "spring", with_decoupled_site=True)
        state = gaussian.embed_two_mode_squeezed(gaussian.vacuum_state(25), 0, 1, 0.8)
        pair = gaussian.reduce(dynamics.evolve(state, ham, t_star), [0, 6])
        assert res.rows[0, 1] == pytest.approx(gaussian.log_negativity(pair, [0]), abs=1e-9)
        assert res.derived["nondecreasing"]

    def test_even_width_rejected(self):
        with pytest.raises(ValueError):
            studies.block_entanglement_study(ring_size=24, center=6, widths=(2,))

    def test_whole_ring_recovers_injected_negativity(self):
        res = studies.block_entanglement_study(
            ring_size=24, center=6, widths=(1, 24), squeezing=0.8, coupling=0.1
        )
        assert res.rows[-1, 1] == pytest.approx(initial_negativity(0.8), abs=1e-9)


class TestPerturbationMonteCarlo:
    def test_deterministic(self):
        kw = dict(length=8, coupling=0.1, squeezing=0.8, rel_sigmas=(0.2,),
                  realizations=8, seed=42)
        a = studies.perturbation_monte_carlo(**kw)
        b = studies.perturbation_monte_carlo(**kw)
        assert np.array_equal(a.rows, b.rows)
        c = studies.perturbation_monte_carlo(**{**kw, "seed": 43})
        assert not np.array_equal(a.rows, c.rows)

    def test_threads_do_not_change_result(self):
        kw = dict(length=8, coupling=0.1, squeezing=0.8, rel_sigmas=(0.15,),
                  realizations=8, seed=7)
        serial = studies.perturbation_monte_carlo(**kw, threads=1)
        parallel = studies.perturbation_monte_carlo(**kw, threads=4)
        assert np.array_equal(serial.rows, parallel.rows)

    def test_zero_sigma_ratio_one(self):
        res = studies.perturbation_monte_carlo(
            length=8, rel_sigmas=(0.0,), realizations=3, seed=1
        )
        assert res.rows[0, 1] == 1.0

    def test_stderr_scaling(self):
        kw = dict(length=8, coupling=0.1, squeezing=0.8, rel_sigmas=(0.25,), seed=11)
        small = studies.perturbation_monte_carlo(**kw, realizations=25)
        large = studies.perturbation_monte_carlo(**kw, realizations=100)
        ratio = small.rows[0, 2] / large.rows[0, 2]
        assert 1.2 < ratio < 3.4  # nominal 2 = sqrt(100/25)

    def test_cubic_fit_reported(self):
        res = studies.perturbation_monte_carlo(
            length=8, rel_sigmas=(0.05, 0.1, 0.15, 0.2), realizations=5, seed=3
        )
        assert len(res.derived["cubic_fit_coefficients"]) == 4


class TestPerfectTransfer:
    def test_amplitude_law(self):
        res = studies.perfect_transfer_check(length=10, coupling=0.02, squeezing=0.8)
        assert res.derived["amplitude_law_max_error"] < 1e-9
        assert res.rows[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_half_time_amplitude(self):
        res = studies.perfect_transfer_check(length=5, coupling=0.02, samples=5)
        # t = pi/(2c) is the middle sample: sin(pi/4)^4 = 1/4
        assert res.rows[2, 1] == pytest.approx(0.25, abs=1e-12)

    def test_swap_negativity(self):
        res = studies.perfect_transfer_check(length=6, coupling=0.05, squeezing=0.8)
        assert res.derived["negativity_after_swap"] == pytest.approx(
            initial_negativity(0.8), abs=1e-6
        )


class TestTwoNodeSwap:
    def test_formula_values(self):
        res = studies.two_node_swap(k=1, l=2, squeezing=0.8)
        assert res.derived["coupling"] == pytest.approx(0.3125)
        assert res.derived["swap_time"] == pytest.approx(2 * math.pi)
        res11 = studies.two_node_swap(k=1, l=1, squeezing=0.3)
        assert res11.derived["coupling"] == pytest.approx(2.0)
        assert res11.derived["swap_time"] == pytest.approx(math.pi)

    def test_kernel_conditions_and_conservation(self):
        res = studies.two_node_swap(k=1, l=2, squeezing=0.8)
        cond = res.derived["kernel_conditions"]
        assert abs(cond["f1"] - 1.0) < 1e-9
        assert abs(cond["f1_dot"]) < 1e-9
        assert abs(cond["g1"]) < 1e-9
        assert res.derived["negativity_after_swap"] == pytest.approx(
            initial_negativity(0.8), abs=1e-6
        )
        assert res.derived["site1_residual_covariance"] < 1e-6

    def test_invalid_pair(self):
        with pytest.raises(ValueError):
            studies.two_node_swap(k=1, l=4)


class TestYShape:
    def test_vacuum_input_stays_zero(self):
        res = studies.y_shape_study(2, 3, 0.2, "squeezed", 1.0, t_max=80.0)
        assert res.derived["max_negativity"] <= 1e-12

    def test_thermal_input_stays_zero(self):
        res = studies.y_shape_study(2, 3, 0.2, "thermal", 10.0, t_max=120.0)
        assert res.derived["max_negativity"] <= 1e-9

    def test_squeezed_input_entangles_arms(self):
        res = studies.y_shape_study(2, 3, 0.2, "squeezed", 10.0, t_max=120.0)
        assert res.derived["first_peak_value"] > 0.01


class TestJunctionSwitch:
    def test_zero_coupling_kills_transmission(self):
        res = studies.junction_switch_sweep(
            2, 3, 0.2, "coupling", values=(0.0, 0.2), t_max=120.0
        )
        assert res.rows[0, 1] == 0.0
        assert res.rows[1, 1] > 0.01
        assert res.derived["baseline"] == pytest.approx(res.rows[1, 1])

    def test_frequency_sweep_has_fit(self):
        res = studies.junction_switch_sweep(
            2, 3, 0.2, "frequency", values=(1.0, 1.2, 1.5, 2.0, 2.5, 3.0), t_max=120.0
        )
        assert res.rows[0, 1] == res.derived["baseline"]
        assert res.rows[-1, 1] < res.rows[0, 1]
        assert "lorentzian_fit" in res.derived

    def test_mass_sweep_runs(self):
        res = studies.junction_switch_sweep(
            2, 3, 0.2, "mass", values=(1.0, 2.0), t_max=100.0, dt=0.2
        )
        assert res.rows.shape == (2, 2)


class TestFringes:
    def test_counts_damped_cosine(self):
        x = np.linspace(0.0, 10.0, 400)
        y = np.exp(-0.2 * x) * (1.0 + np.cos(4.0 * x)) + 0.01
        idx = count_fringes(y)
        assert 5 <= len(idx) <= 8

    def test_ignores_micro_wiggles(self):
        x = np.linspace(0.0, 10.0, 400)
        y = np.exp(-0.5 * x) + 1e-5 * np.cos(40.0 * x)
        idx = count_fringes(y, prominence_fraction=0.01)
        assert len(idx) == 0
