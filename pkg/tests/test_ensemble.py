"""Tests for comb construction, comb fitting and hole burning."""

import numpy as np
import pytest
from scipy.signal import find_peaks

from afc_memory.ensemble import (
    BurnSchedule,
    CombSpec,
    GridNotUniformError,
    GridTooCoarseError,
    GridTooNarrowError,
    IonEnsembleParams,
    NoPeaksFoundError,
    SpectralProfile,
    absorption_line,
    burn_comb,
    comb_grid,
    complement_pump,
    detuning_grid,
    extract_comb_params,
    hole_area_decay,
    ideal_comb_profile,
    integrate_populations,
)

FOUR_LN2 = 4.0 * np.log(2.0)


def strong_schedule(spec, grid, rate=2.0e4):
    return BurnSchedule(pulse_duration=5.0, repetitions=150, pump_spectral_density=complement_pump(spec, grid, rate))


# ---------------------------------------------------------------- models


def test_peak_optical_depth_and_lifetime_ratio(ensemble):
    assert ensemble.peak_optical_depth == pytest.approx(5.26)
    # 1.95 s over 2.78 ms
    assert ensemble.hole_to_excited_ratio == pytest.approx(701.4, rel=1e-3)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"hole_lifetimes": [(0.5, 1.0), (0.4, 2.0)]},
        {"peak_absorption": 0.0},
        {"shelving_branch": 1.5},
    ],
)
def test_invalid_ensemble_rejected(kwargs):
    with pytest.raises(ValueError):
        IonEnsembleParams(**kwargs)


def test_comb_spec_properties(measured_comb):
    assert measured_comb.finesse == pytest.approx(2.5 / 1.03)
    assert measured_comb.storage_time_ns == pytest.approx(400.0)
    assert measured_comb.with_finesse(5.0).tooth_fwhm == pytest.approx(0.5)
    with pytest.raises(ValueError):
        CombSpec(tooth_spacing=1.0, tooth_fwhm=1.5, comb_depth=1.0, background_depth=0.0, bandwidth=40.0)


def test_profile_rejects_uneven_grid():
    with pytest.raises(GridNotUniformError):
        SpectralProfile(np.array([0.0, 1.0, 3.0]), np.zeros(3))


def test_profile_csv_round_trip(tmp_path, measured_profile):
    path = tmp_path / "comb.csv"
    measured_profile.to_csv(path)
    loaded = SpectralProfile.from_csv(path)
    np.testing.assert_allclose(loaded.optical_depth, measured_profile.optical_depth, rtol=1e-8)
    assert path.read_text().splitlines()[0] == "detuning_mhz,optical_depth"


# ---------------------------------------------------------------- ideal comb


def test_ideal_comb_peaks_and_troughs(measured_comb):
    grid = comb_grid(measured_comb, step_mhz=0.05)
    profile = ideal_comb_profile(measured_comb, grid)

    for k in range(-8, 9):
        index = int(np.argmin(np.abs(grid - 2.5 * k)))
        assert profile.optical_depth[index] == pytest.approx(2.97, abs=1e-6)

    trough = int(np.argmin(np.abs(grid - 1.25)))
    overlap = 1.61 * 2 * np.exp(-FOUR_LN2 * (1.25 / 1.03) ** 2)
    assert profile.optical_depth[trough] == pytest.approx(1.36 + overlap, rel=1e-6)

    outside = np.abs(grid) > 40.0
    np.testing.assert_allclose(profile.optical_depth[outside], 1.36, atol=1e-9)


def test_zero_comb_is_flat():
    spec = CombSpec(tooth_spacing=2.5, tooth_fwhm=1.0, comb_depth=0.0, background_depth=0.5, bandwidth=40.0)
    profile = ideal_comb_profile(spec, comb_grid(spec))
    np.testing.assert_allclose(profile.optical_depth, 0.5)


def test_coarse_grid_rejected(measured_comb):
    with pytest.raises(GridTooCoarseError):
        ideal_comb_profile(measured_comb, detuning_grid(80.0, 0.2))


def test_narrow_grid_rejected(measured_comb):
    with pytest.raises(GridTooNarrowError):
        ideal_comb_profile(measured_comb, detuning_grid(22.0, 0.05))


def test_absorption_line_half_maximum(ensemble):
    grid = np.array([-125_000.0, 0.0, 125_000.0])
    profile = absorption_line(ensemble, grid)
    assert profile.optical_depth[1] == pytest.approx(5.26)
    np.testing.assert_allclose(profile.optical_depth[[0, 2]], 2.63)


# ---------------------------------------------------------------- extraction


def test_extract_recovers_measured_comb(measured_comb, measured_profile):
    fitted = extract_comb_params(measured_profile)
    assert fitted.tooth_spacing == pytest.approx(2.5, rel=0.02)
    assert fitted.tooth_fwhm == pytest.approx(1.03, rel=0.02)
    assert fitted.comb_depth == pytest.approx(1.61, rel=0.02)
    assert fitted.background_depth == pytest.approx(1.36, rel=0.02)


@pytest.mark.parametrize("finesse", [1.5, 3.0, 10.0])
def test_extract_round_trip_over_finesse(finesse):
    spec = CombSpec(2.5, 2.5 / finesse, 1.0, 0.5, 40.0)
    fitted = extract_comb_params(ideal_comb_profile(spec, comb_grid(spec)))
    assert fitted.finesse == pytest.approx(finesse, rel=0.02)
    assert fitted.comb_depth == pytest.approx(1.0, rel=0.02)


def test_extract_high_finesse_comb():
    spec = CombSpec(2.5, 0.1, 1.0, 0.0, 40.0)
    fitted = extract_comb_params(ideal_comb_profile(spec, comb_grid(spec)))
    assert fitted.finesse == pytest.approx(25.0, rel=0.02)


def test_extract_tolerates_noise(measured_profile):
    truth = np.array([2.5, 1.03, 1.61, 1.36])
    estimates = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noise = rng.normal(0.0, 0.01, measured_profile.optical_depth.shape)
        noisy = SpectralProfile(measured_profile.detuning_grid, np.clip(measured_profile.optical_depth + noise, 0.0, None))
        fitted = extract_comb_params(noisy)
        estimates.append([fitted.tooth_spacing, fitted.tooth_fwhm, fitted.comb_depth, fitted.background_depth])

    relative = np.array(estimates) / truth - 1.0
    assert np.max(np.abs(relative)) < 0.05
    # Mean over seeds is unbiased well inside the per-draw tolerance.
    assert np.all(np.abs(relative.mean(axis=0)) < 0.01)


def test_extract_flat_profile_has_no_peaks():
    grid = detuning_grid(50.0, 0.05)
    with pytest.raises(NoPeaksFoundError):
        extract_comb_params(SpectralProfile(grid, np.full(grid.shape, 1.36)))


# ---------------------------------------------------------------- burning


def test_zero_pump_leaves_profile_unchanged(ensemble, measured_comb):
    grid = comb_grid(measured_comb)
    schedule = BurnSchedule(5.0, 10, np.zeros(len(grid)))
    burned = burn_comb(ensemble, measured_comb, schedule, grid)
    np.testing.assert_array_equal(burned.optical_depth, np.full(len(grid), ensemble.peak_optical_depth))


def test_single_pulse_matches_two_level_solution():
    params = IonEnsembleParams(shelving_branch=0.0)
    t1 = params.t1_excited * 1e-3
    rate = 1.0 / t1
    history = integrate_populations(params, np.array([rate]), [(5.0, True)])

    ground_inf = 0.5
    expected = ground_inf + (1.0 - ground_inf) * np.exp(-(rate + 1.0 / t1) * 5e-3)
    assert history.final[0, 0] == pytest.approx(expected, rel=0.01)


def test_strong_burn_empties_pumped_classes(ensemble, measured_comb):
    grid = comb_grid(measured_comb)
    schedule = strong_schedule(measured_comb, grid)
    burned = burn_comb(ensemble, measured_comb, schedule, grid)

    pumped = schedule.pump_spectral_density >= 0.9 * 2.0e4
    assert pumped.any()
    assert burned.optical_depth[pumped].max() <= 0.1 * ensemble.peak_optical_depth
    assert burned.optical_depth.min() >= 0.0
    assert burned.optical_depth.max() <= ensemble.peak_optical_depth + 1e-12


def test_burn_conserves_population(ensemble, measured_comb):
    grid = comb_grid(measured_comb)
    rates = np.unique(complement_pump(measured_comb, grid, 2.0e4))[::50]
    segments = [(5.0, True), (1.0, False)] * 20
    history = integrate_populations(ensemble, rates, segments)
    assert history.max_conservation_error <= 1e-9
    assert history.min_population >= -1e-12
    np.testing.assert_allclose(history.populations.sum(axis=-1), 1.0, atol=1e-9)


def test_stronger_pump_never_adds_absorption(ensemble, measured_comb):
    grid = comb_grid(measured_comb)
    weak = burn_comb(ensemble, measured_comb, strong_schedule(measured_comb, grid, 1.0e3), grid)
    strong = burn_comb(ensemble, measured_comb, strong_schedule(measured_comb, grid, 2.0e4), grid)
    assert np.all(strong.optical_depth <= weak.optical_depth + 1e-12)


def test_burned_teeth_keep_target_spacing(ensemble, measured_comb):
    grid = comb_grid(measured_comb)
    burned = burn_comb(ensemble, measured_comb, strong_schedule(measured_comb, grid), grid)
    peaks, _ = find_peaks(burned.optical_depth, prominence=1.0)
    assert len(peaks) >= 5
    assert np.median(np.diff(grid[peaks])) == pytest.approx(2.5, abs=burned.step)


def test_burn_starts_from_initial_profile(ensemble, measured_comb):
    grid = comb_grid(measured_comb)
    initial = SpectralProfile(grid, np.full(len(grid), 2.0))
    schedule = BurnSchedule(5.0, 10, np.zeros(len(grid)))
    burned = burn_comb(ensemble, measured_comb, schedule, initial=initial)
    np.testing.assert_array_equal(burned.optical_depth, initial.optical_depth)
    assert burn_comb(ensemble, measured_comb, schedule, grid, initial).optical_depth.max() == pytest.approx(2.0)


def test_burn_rejects_grid_that_differs_from_initial_profile(ensemble, measured_comb):
    grid = comb_grid(measured_comb)
    initial = SpectralProfile(grid, np.full(len(grid), 2.0))
    schedule = strong_schedule(measured_comb, grid)
    with pytest.raises(ValueError, match="initial profile"):
        burn_comb(ensemble, measured_comb, schedule, grid + 0.5 * initial.step, initial)
    with pytest.raises(ValueError, match="initial profile"):
        burn_comb(ensemble, measured_comb, schedule, grid[:-1], initial)


def test_complement_pump_shape(measured_comb):
    grid = comb_grid(measured_comb, step_mhz=0.05)
    pump = complement_pump(measured_comb, grid, 1.0)
    assert pump[np.argmin(np.abs(grid - 5.0))] == pytest.approx(0.0, abs=1e-9)
    assert pump[np.argmin(np.abs(grid - 1.25))] == pytest.approx(1 - 2 * np.exp(-FOUR_LN2 * (1.25 / 1.03) ** 2))
    assert np.all(pump[np.abs(grid) > 22.0] == 0.0)


# ---------------------------------------------------------------- hole decay


def test_hole_area_decay_values(ensemble):
    assert hole_area_decay(ensemble, 0.0) == pytest.approx(1.0)
    single = IonEnsembleParams(hole_lifetimes=[(1.0, 1.95)])
    assert hole_area_decay(single, 1.95) == pytest.approx(np.exp(-1.0))
    assert hole_area_decay(ensemble, 1e5) == pytest.approx(0.0, abs=1e-12)


def test_hole_area_decay_is_monotone(ensemble):
    area = hole_area_decay(ensemble, np.geomspace(1e-3, 1e3, 200))
    assert np.all(np.diff(area) <= 0)
    with pytest.raises(ValueError):
        hole_area_decay(ensemble, -1.0)
