"""Tests for qubit encoding, the interferometer, photon counting and fidelities."""

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from afc_memory.errors import InfeasibleError
from afc_memory.photonics import (
    CountHistogram,
    DelayMismatchError,
    DetectorModel,
    FitDivergenceError,
    InterferometerSpec,
    OverlapError,
    QubitGeometry,
    TimeBinQubit,
    ZeroCountsError,
    classical_bound,
    classical_bound_bruteforce,
    classical_bound_threshold,
    detect,
    encode_qubit,
    expected_counts_per_trial,
    fidelity_el,
    fidelity_pm,
    qubit_state,
    snr,
    total_fidelity,
    umzi_output,
    visibility_and_fidelity,
)
from afc_memory.propagation import PulseTrain

CENTRAL = (65.0, 195.0)


def histogram(entries, n_bins=1000, n_trials=1000):
    counts = np.zeros(n_bins, dtype=np.int64)
    for index, value in entries.items():
        counts[index] = value
    return CountHistogram(bin_width=1.0, origin=0.0, counts=counts, n_trials=n_trials)


def central_energy(label, spec, geometry, port="A", delta_alpha=None):
    output = umzi_output(encode_qubit(label, geometry, delta_alpha), spec, port, geometry.bin_separation)
    return output.energy(*CENTRAL)


# ---------------------------------------------------------------- encoding


def test_early_state_has_no_late_light():
    geometry = QubitGeometry()
    pulse = encode_qubit("e", geometry)
    assert pulse.energy() == pytest.approx(0.578)
    assert pulse.energy(geometry.late_center - 50, geometry.late_center + 50) < 1e-9


def test_superposition_splits_photons_evenly():
    geometry = QubitGeometry(mean_photon_number=1.61)
    pulse = encode_qubit("plus", geometry)
    midpoint = 0.5 * geometry.bin_separation - 0.5
    assert pulse.energy(None, midpoint) == pytest.approx(0.805, rel=1e-4)
    assert pulse.energy(midpoint, None) == pytest.approx(0.805, rel=1e-4)


def test_state_labels():
    geometry = QubitGeometry()
    assert qubit_state("minus", geometry).amp_late == pytest.approx(-1 / np.sqrt(2))
    assert qubit_state("plus_i", geometry).relative_phase == pytest.approx(np.pi / 2)
    assert qubit_state("custom", geometry, 0.4).relative_phase == pytest.approx(0.4)
    with pytest.raises(ValueError):
        qubit_state("custom", geometry)
    with pytest.raises(ValueError):
        qubit_state("diagonal", geometry)
    with pytest.raises(ValueError):
        TimeBinQubit(1.0, 1.0, 0.0, geometry)


def test_overlapping_bins_rejected():
    with pytest.raises(OverlapError):
        encode_qubit("plus", QubitGeometry(bin_separation=60.0))
    with pytest.raises(ValueError):
        QubitGeometry(bin_separation=40.0)


# ---------------------------------------------------------------- interferometer


def test_plus_state_exits_port_a():
    geometry = QubitGeometry(mean_photon_number=1.61)
    spec = InterferometerSpec(arm_delay=130.0)
    assert central_energy("plus", spec, geometry, "A") == pytest.approx(0.805, rel=1e-4)
    assert central_energy("plus", spec, geometry, "B") == pytest.approx(0.0, abs=1e-4)


def test_minus_state_exits_port_b():
    geometry = QubitGeometry(mean_photon_number=1.61)
    spec = InterferometerSpec(arm_delay=130.0)
    assert central_energy("minus", spec, geometry, "B") == pytest.approx(0.805, rel=1e-4)
    assert central_energy("minus", spec, geometry, "A") == pytest.approx(0.0, abs=1e-4)


@pytest.mark.parametrize("ratios", [(0.5, 0.5), (0.3, 0.7), (0.9, 0.2)])
@pytest.mark.parametrize("phase", [0.0, 1.1])
def test_lossless_interferometer_conserves_energy(ratios, phase):
    pulse = encode_qubit("custom", QubitGeometry(), delta_alpha=0.7)
    spec = InterferometerSpec(arm_delay=130.0, analysis_phase=phase, splitter_ratios=ratios)
    total = umzi_output(pulse, spec, "A").energy() + umzi_output(pulse, spec, "B").energy()
    assert total == pytest.approx(pulse.energy(), rel=1e-12)


def test_unequal_arms_reduce_fringe_visibility():
    geometry = QubitGeometry()
    spec = InterferometerSpec(arm_delay=130.0, arm_transmissions=(1.0, 0.6))
    phases = np.linspace(0.0, 2 * np.pi, 12, endpoint=False)
    fringe = [(a, 1e6 * central_energy("custom", spec, geometry, delta_alpha=a)) for a in phases]
    result = visibility_and_fidelity(fringe)
    assert result.visibility == pytest.approx(2 * np.sqrt(0.6) / 1.6, abs=1e-3)
    assert not result.clamped


def test_delay_must_match_grid_and_bins():
    pulse = encode_qubit("plus", QubitGeometry())
    with pytest.raises(DelayMismatchError):
        umzi_output(pulse, InterferometerSpec(arm_delay=130.5))
    with pytest.raises(DelayMismatchError):
        umzi_output(pulse, InterferometerSpec(arm_delay=120.0), bin_separation=130.0)
    with pytest.raises(ValueError):
        umzi_output(pulse, InterferometerSpec(), port="C")


# ---------------------------------------------------------------- detection


def test_expected_counts_scale_with_efficiency():
    pulse = PulseTrain.gaussian(50.0, mean_photon_number=2.0)
    _, rate = expected_counts_per_trial(pulse, DetectorModel(quantum_efficiency=0.5))
    assert rate.sum() == pytest.approx(1.0, rel=1e-9)
    _, coarse = expected_counts_per_trial(pulse, DetectorModel(quantum_efficiency=0.5, bin_width=2.0))
    assert coarse.sum() == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(ValueError):
        expected_counts_per_trial(pulse, DetectorModel(bin_width=1.5))


def test_dark_counts_only():
    dark = PulseTrain(t0=0.0, dt=1.0, samples=np.zeros(2000, dtype=complex))
    hist = detect(dark, DetectorModel(quantum_efficiency=0.9, dark_rate=100.0, rng_seed=11), n_trials=1_000_000)
    assert hist.counts.mean() == pytest.approx(0.1, abs=0.03)


def test_detection_is_seeded():
    pulse = PulseTrain.gaussian(50.0, mean_photon_number=0.1)
    detector = DetectorModel(dark_rate=50.0, rng_seed=3)
    first = detect(pulse, detector, 100_000)
    np.testing.assert_array_equal(first.counts, detect(pulse, detector, 100_000).counts)
    other = detect(pulse, DetectorModel(dark_rate=50.0, rng_seed=4), 100_000)
    assert not np.array_equal(first.counts, other.counts)


def test_disjoint_seeds_draw_from_the_same_distribution():
    pulse = PulseTrain.gaussian(50.0, mean_photon_number=0.1)
    detector = DetectorModel(dark_rate=1e5, rng_seed=21)
    first = detect(pulse, detector, 200_000)
    second = detect(pulse, DetectorModel(dark_rate=1e5, rng_seed=22), 200_000)

    _, rate = expected_counts_per_trial(pulse, detector)
    groups = len(rate) // 10
    expected = rate[: groups * 10].reshape(groups, 10).sum(axis=1) * 200_000
    keep = expected >= 50.0
    table = np.vstack(
        [hist.counts[: groups * 10].reshape(groups, 10).sum(axis=1)[keep] for hist in (first, second)]
    )
    assert table.shape[1] >= 5
    assert chi2_contingency(table).pvalue > 0.001


def test_detection_independent_of_workers():
    pulse = PulseTrain.gaussian(50.0, mean_photon_number=1e-3)
    detector = DetectorModel(rng_seed=8)
    serial = detect(pulse, detector, 25_000_000, workers=1)
    threaded = detect(pulse, detector, 25_000_000, workers=3)
    np.testing.assert_array_equal(serial.counts, threaded.counts)
    assert serial.n_trials == 25_000_000


def test_gate_blocks_counts():
    pulse = PulseTrain.gaussian(50.0, mean_photon_number=1.0)
    hist = detect(pulse, DetectorModel(dark_rate=1e6, gate=(-20.0, 20.0)), 10_000)
    outside = (hist.bin_starts < -20.0) | (hist.bin_starts + 1.0 > 20.0)
    assert hist.counts[outside].sum() == 0
    assert hist.counts[~outside].sum() > 0


def test_histogram_csv_keeps_trials(tmp_path):
    hist = histogram({3: 5, 7: 2}, n_bins=10, n_trials=12345)
    path = tmp_path / "hist.csv"
    hist.to_csv(path)
    loaded = CountHistogram.from_csv(path)
    assert loaded.n_trials == 12345
    np.testing.assert_array_equal(loaded.counts, hist.counts)


# ---------------------------------------------------------------- SNR


def test_snr_example():
    hist = histogram({400: 563, 100: 10})
    result = snr(hist, (350.0, 450.0), (50.0, 150.0))
    assert result.value == pytest.approx(55.3)
    assert result.uncertainty == pytest.approx(np.sqrt(563 / 100 + 563**2 / 1000))
    assert not result.lower_bound


def test_snr_without_noise_is_lower_bound():
    result = snr(histogram({400: 563}), (350.0, 450.0), (50.0, 150.0))
    assert result.lower_bound
    assert result.value == pytest.approx(563.0)


@pytest.mark.parametrize("noise_window", [(400.0, 500.0), (50.0, 100.0)])
def test_snr_window_checks(noise_window):
    with pytest.raises(ValueError):
        snr(histogram({}), (350.0, 450.0), noise_window)


# ---------------------------------------------------------------- fidelities


def test_early_late_fidelity():
    hist_e = histogram({0: 990, 130: 10})
    hist_l = histogram({130: 980, 0: 20})
    result = fidelity_el(hist_e, hist_l, (0.0, 50.0), (130.0, 180.0))
    assert result.value == pytest.approx(0.985)
    assert result.counts == {"e_early": 990, "e_late": 10, "l_late": 980, "l_early": 20}


def test_early_late_fidelity_reported_counts():
    hist_e = histogram({0: 988, 130: 12})
    hist_l = histogram({130: 988, 0: 12})
    assert fidelity_el(hist_e, hist_l, (0.0, 50.0), (130.0, 180.0)).value == pytest.approx(0.988)


def test_early_late_fidelity_background_subtracted():
    hist_e = histogram({0: 990, 130: 10, 300: 10})
    hist_l = histogram({130: 980, 0: 20, 300: 10})
    result = fidelity_el(hist_e, hist_l, (0.0, 50.0), (130.0, 180.0), background_window=(300.0, 350.0))
    assert result.counts["e_late"] == 0
    assert result.value == pytest.approx(0.5 * (1.0 + 970 / 980))


def test_superposition_fidelity():
    result = fidelity_pm(histogram({130: 950}), histogram({130: 50}), (100.0, 160.0))
    assert result.value == pytest.approx(0.95)
    assert result.uncertainty == pytest.approx(np.sqrt(0.95 * 0.05 / 1000))


def test_empty_gates_raise():
    with pytest.raises(ZeroCountsError):
        fidelity_pm(histogram({}), histogram({}), (100.0, 160.0))


def test_total_fidelity():
    value, sigma = total_fidelity(1.0, 0.96, 0.003, 0.006)
    assert value == pytest.approx(0.97333, abs=1e-5)
    assert sigma == pytest.approx(np.sqrt(0.001**2 + 0.004**2))
    with pytest.raises(ValueError):
        total_fidelity(1.2, 0.9)


def test_total_fidelity_at_reported_inputs():
    value, _ = total_fidelity(0.988, 0.966)
    assert value == pytest.approx(0.9733, abs=5e-4)


def test_visibility_from_fringe():
    phases = np.linspace(0.0, 2 * np.pi, 12, endpoint=False)
    fringe = [(a, 1000.0 * (1 + 0.94 * np.sin(a + 0.3))) for a in phases]
    result = visibility_and_fidelity(fringe)
    assert result.visibility == pytest.approx(0.94, rel=1e-9)
    assert result.fidelity == pytest.approx(0.97, rel=1e-9)
    assert result.phase_offset == pytest.approx(0.3, abs=1e-9)
    assert result.counts_avg == pytest.approx(1000.0)


def test_visibility_above_one_is_clamped():
    phases = np.linspace(0.0, 2 * np.pi, 12, endpoint=False)
    result = visibility_and_fidelity([(a, 1000.0 * (1 + 1.05 * np.sin(a))) for a in phases])
    assert result.clamped
    assert result.visibility == pytest.approx(1.05, rel=1e-6)
    assert result.fidelity == 1.0


def test_fringe_input_checks():
    phases = np.linspace(0.0, 2 * np.pi, 12, endpoint=False)
    with pytest.raises(ValueError):
        visibility_and_fidelity([(a, 100.0) for a in phases[:4]])
    with pytest.raises(ValueError):
        visibility_and_fidelity([(a, 100.0 + a) for a in np.linspace(0.0, 3.0, 12)])
    with pytest.raises(FitDivergenceError):
        visibility_and_fidelity([(a, 0.0) for a in phases])


# ---------------------------------------------------------------- classical bound


def test_bound_at_full_efficiency_and_weak_pulses():
    assert classical_bound(1e-3, 1.0) == pytest.approx(2 / 3, abs=1e-3)


def test_bound_at_measured_operating_point():
    bound = classical_bound(1.61, 0.0195)
    assert bound == pytest.approx(0.866, abs=0.01)
    assert bound < 0.9733


def test_bound_decreases_with_efficiency():
    values = [classical_bound(1.61, eta) for eta in (0.005, 0.02, 0.1, 0.5, 1.0)]
    assert values == sorted(values, reverse=True)


def test_bound_increases_with_photon_number():
    values = [classical_bound(mu, 0.0195) for mu in (0.2, 0.578, 1.0, 1.61, 3.0)]
    assert values == sorted(values)


@pytest.mark.parametrize("mu", [0.2, 0.578, 1.0, 1.61, 3.0])
@pytest.mark.parametrize("eta", [0.01, 0.0195, 0.1, 0.5, 1.0])
def test_bound_matches_pass_probability_optimum(mu, eta):
    assert classical_bound(mu, eta) == pytest.approx(classical_bound_bruteforce(mu, eta), abs=1e-3)
    assert classical_bound(mu, eta) == pytest.approx(classical_bound_threshold(mu, eta), abs=1e-3)


@pytest.mark.parametrize("mu, eta", [(0.578, 0.0195), (1.61, 0.1), (3.0, 0.5)])
def test_no_allocation_beats_the_optimum(mu, eta):
    """Random feasible pass probabilities never exceed the optimized fidelity."""
    n = np.arange(0, 21)
    p = np.exp(-mu) * mu**n / np.cumprod(np.r_[1.0, n[1:]])
    budget = eta * (1.0 - p[0])
    fidelity = (n + 1.0) / (n + 2.0)
    optimum = classical_bound_bruteforce(mu, eta)

    rng = np.random.default_rng(11)
    for _ in range(200):
        q = rng.uniform(size=n.size)
        q[0] = 0.0
        scale = budget / (q * p).sum()
        if scale * q.max() > 1.0:
            continue
        q = q * scale
        assert (q * p * fidelity).sum() / budget <= optimum + 1e-6


def test_bound_argument_checks():
    with pytest.raises(InfeasibleError):
        classical_bound(1.0, 1.5)
    with pytest.raises(ValueError):
        classical_bound(0.0, 0.5)
    with pytest.raises(ValueError):
        classical_bound(1.0, 0.0)
