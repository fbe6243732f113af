"""End-to-end pipelines, one per scenario name."""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..coherence import DecayTrace, fit_decay, synthesize_trace
from ..coherence.models import SECONDS_PER_UNIT
from ..ensemble import (
    BurnSchedule,
    CombSpec,
    SpectralProfile,
    burn_comb,
    comb_grid,
    complement_pump,
    extract_comb_params,
    hole_area_decay,
    ideal_comb_profile,
)
from ..photonics import (
    CountHistogram,
    DetectorModel,
    FidelityResult,
    QubitGeometry,
    classical_bound,
    detect,
    encode_qubit,
    fidelity_el,
    fidelity_pm,
    snr,
    total_fidelity,
    umzi_output,
    visibility_and_fidelity,
)
from ..propagation import (
    MemoryResult,
    PulseTrain,
    TransferFunction,
    afc_efficiency_analytic,
    delay_line_comparison,
    echo_efficiency,
    efficiency_db,
    mode_efficiencies,
    multimode_capacity,
    propagate,
    transfer_function,
)
from ..propagation.memory import SPEED_OF_LIGHT
from .config import ScenarioConfig
from .runner import Pipeline, RunContext

logger = logging.getLogger(__name__)

SCENARIOS: Dict[str, Pipeline] = {}

Window = Tuple[float, float]

DECAY_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "fluorescence": {
        "model": "single_exp",
        "parameters": {"amplitude": 1.0, "lifetime": 2.78, "offset": 0.0},
        "time_start": 0.0,
        "time_stop": 15.0,
        "points": 200,
        "spacing": "linear",
        "snr": 100.0,
        "time_unit": "ms",
    },
    "photon_echo": {
        "model": "two_pulse_echo",
        "parameters": {"amplitude": 1.0, "t2": 17.48},
        "time_start": 0.5,
        "time_stop": 10.0,
        "points": 20,
        "spacing": "linear",
        "snr": 50.0,
        "time_unit": "us",
    },
    "hole_decay": {
        "model": "triple_exp",
        "parameters": {},
        "time_start": 0.01,
        "time_stop": 600.0,
        "points": 150,
        "spacing": "log",
        "snr": 100.0,
        "time_unit": "s",
    },
}


def scenario(name: str) -> Callable[[Pipeline], Pipeline]:
    def register(func: Pipeline) -> Pipeline:
        SCENARIOS[name] = func
        return func

    return register


@dataclass
class StorageRun:
    """Comb, filter and fields of one pass through the memory."""

    spec: CombSpec
    profile: SpectralProfile
    response: TransferFunction
    input: PulseTrain
    output: PulseTrain
    result: MemoryResult

    @property
    def tau(self) -> float:
        return self.spec.storage_time_ns


def build_comb(config: ScenarioConfig) -> Tuple[CombSpec, SpectralProfile, Optional[np.ndarray]]:
    """Target comb and its profile; burned profiles also return the pump density."""
    spec = config.comb.to_spec()
    grid = comb_grid(spec, config.comb.grid_step_mhz, config.comb.grid_half_span_mhz)
    if config.comb.source == "ideal":
        return spec, ideal_comb_profile(spec, grid), None

    pump = complement_pump(spec, grid, config.burn.pump_rate_per_s)
    schedule = BurnSchedule(
        pulse_duration=config.burn.pulse_duration_ms,
        repetitions=config.burn.repetitions,
        pump_spectral_density=pump,
        wait_after=config.burn.wait_after_ms,
        interval=config.burn.interval_ms,
    )
    return spec, burn_comb(config.ensemble.to_params(), spec, schedule, grid), pump


def input_pulse(config: ScenarioConfig, centers: Optional[List[float]] = None) -> PulseTrain:
    pulse = config.pulse
    return PulseTrain.gaussian_train(
        pulse.pulse_fwhm_ns,
        centers if centers is not None else [0.0],
        pulse.mean_photon_number,
        pulse.dt_ns,
        pulse.t_start,
        pulse.duration_ns,
    )


def store(pulse: PulseTrain, response: TransferFunction, padding: int) -> PulseTrain:
    """Propagate through the memory and keep the input's time window."""
    return propagate(pulse, response, padding).cropped(pulse.t0, pulse.t0 + pulse.duration)


def echo_window(config: ScenarioConfig) -> float:
    if config.analysis.echo_window_ns is not None:
        return config.analysis.echo_window_ns
    return 6.0 * config.pulse.pulse_fwhm_ns


def simulate_storage(config: ScenarioConfig) -> StorageRun:
    """Single-pulse storage without detection (shared by the storage scenario and calibration)."""
    spec, profile, _ = build_comb(config)
    response = transfer_function(profile, config.pulse.padding)
    pulse = input_pulse(config)
    output = store(pulse, response, config.pulse.padding)
    result = echo_efficiency(output, pulse, spec.storage_time_ns, echo_window(config))
    return StorageRun(spec, profile, response, pulse, output, result)


def detector_for(config: ScenarioConfig, seed: int) -> DetectorModel:
    det = config.detector
    return DetectorModel(
        quantum_efficiency=det.detection_efficiency,
        dark_rate=det.dark_rate_per_s,
        gate=det.gate_ns,
        rng_seed=seed,
        bin_width=det.bin_width_ns,
    )


def centered_window(center: float, width: float) -> Window:
    return (center - 0.5 * width, center + 0.5 * width)


def histogram_frame(histograms: Dict[str, CountHistogram]) -> pd.DataFrame:
    """One bin_start_ns column plus one counts column per histogram (equal binning required)."""
    first = next(iter(histograms.values()))
    frame = pd.DataFrame({"bin_start_ns": first.bin_starts})
    for name, hist in histograms.items():
        frame[name] = hist.counts
    return frame


def profile_frame(profile: SpectralProfile, pump: Optional[np.ndarray]) -> pd.DataFrame:
    frame = profile.to_frame()
    if pump is not None:
        frame["pump_rate_per_s"] = pump
    return frame


def _decay_trace(context: RunContext, defaults: Dict[str, Any]) -> Tuple[str, Dict[str, float], DecayTrace]:
    config = context.config
    spectro = config.spectroscopy
    model = spectro.model or defaults["model"]
    unit = spectro.time_unit or defaults["time_unit"]
    if spectro.trace_path:
        return model, dict(spectro.parameters), DecayTrace.from_csv(spectro.trace_path, time_unit=spectro.time_unit)

    start = spectro.time_start if spectro.time_start is not None else defaults["time_start"]
    stop = spectro.time_stop if spectro.time_stop is not None else defaults["time_stop"]
    points = spectro.points or defaults["points"]
    spacing = spectro.spacing or defaults["spacing"]
    level = spectro.snr or defaults["snr"]
    times = np.geomspace(start, stop, points) if spacing == "log" else np.linspace(start, stop, points)
    seed = context.seed_for("synthesize")

    parameters = dict(spectro.parameters) or dict(defaults["parameters"])
    if not parameters and model == "triple_exp":
        # Hole recovery straight from the ensemble's hole lifetimes
        ensemble = config.ensemble.to_params()
        lifetimes = sorted(ensemble.hole_lifetimes, key=lambda item: item[1])
        if len(lifetimes) != 3:
            raise ValueError("hole_decay needs three hole lifetimes in the ensemble section")
        parameters = {f"a{i + 1}": a for i, (a, _) in enumerate(lifetimes)}
        parameters.update({f"tau{i + 1}": tau for i, (_, tau) in enumerate(lifetimes)})
        parameters["offset"] = 0.0
        seconds = times * SECONDS_PER_UNIT[unit]
        clean = hole_area_decay(ensemble, seconds)
        sigma = 1.0 / level
        noisy = clean + np.random.default_rng(seed).normal(0.0, sigma, size=times.shape)
        return model, parameters, DecayTrace(times, noisy, np.full(times.shape, sigma), unit)

    trace = synthesize_trace(
        model, parameters, times, level, seed, unit, config.analysis.echo_convention
    )
    return model, parameters, trace


def _run_decay(context: RunContext, defaults: Dict[str, Any]) -> None:
    with context.stage("synthesize"):
        model, truth, trace = _decay_trace(context, defaults)
        context.write_csv("trace.csv", trace.to_frame(), header={"time_unit": trace.time_unit})

    with context.stage("fit"):
        report = fit_decay(trace, model, convention=context.config.analysis.echo_convention)
        document = report.to_dict()
        document["true_parameters"] = truth
        context.write_json("fit.json", document)

    context.summary.update(
        {
            "model": model,
            "time_unit": trace.time_unit,
            "converged": report.converged,
            "parameters": document["parameters"],
            "uncertainties": document["uncertainties"],
        }
    )


@scenario("fluorescence")
def run_fluorescence(context: RunContext) -> None:
    _run_decay(context, DECAY_DEFAULTS["fluorescence"])


@scenario("photon_echo")
def run_photon_echo(context: RunContext) -> None:
    _run_decay(context, DECAY_DEFAULTS["photon_echo"])


@scenario("hole_decay")
def run_hole_decay(context: RunContext) -> None:
    _run_decay(context, DECAY_DEFAULTS["hole_decay"])


@scenario("comb_preparation")
def run_comb_preparation(context: RunContext) -> None:
    config = context.config
    with context.stage("prepare"):
        spec, profile, pump = build_comb(config)
        context.write_csv("comb.csv", profile_frame(profile, pump), header={"source": config.comb.source})

    with context.stage("extract"):
        fitted = extract_comb_params(profile)
        context.write_json(
            "comb_params.json",
            {"source": config.comb.source, "target": spec.to_dict(), "fitted": fitted.to_dict()},
        )
    context.summary.update({"target": spec.to_dict(), "fitted": fitted.to_dict()})


@scenario("storage")
def run_storage(context: RunContext) -> None:
    config = context.config
    with context.stage("comb"):
        spec, profile, pump = build_comb(config)
        context.write_csv("comb.csv", profile_frame(profile, pump), header={"source": config.comb.source})

    with context.stage("propagate"):
        response = transfer_function(profile, config.pulse.padding)
        pulse = input_pulse(config)
        output = store(pulse, response, config.pulse.padding)
        context.write_csv(
            "waveform.csv",
            pd.DataFrame(
                {"time_ns": pulse.times, "input_intensity": pulse.intensity, "output_intensity": output.intensity}
            ),
        )

    tau = spec.storage_time_ns
    with context.stage("analyze"):
        result = echo_efficiency(output, pulse, tau, echo_window(config))
        analytic = afc_efficiency_analytic(spec.comb_depth, spec.finesse, spec.background_depth)
        memory = result.to_dict()
        memory.update(
            {
                "storage_time_ns": tau,
                "finesse": spec.finesse,
                "analytic_efficiency": analytic,
                "efficiency_db": efficiency_db(result.efficiency) if result.efficiency > 0 else None,
            }
        )
        context.write_json("memory.json", memory)

    with context.stage("detect"):
        n_trials = config.trials.n_trials
        histograms = {
            "input_counts": detect(pulse, detector_for(config, context.seed_for("detect_input")), n_trials, config.trials.workers),
            "output_counts": detect(output, detector_for(config, context.seed_for("detect_output")), n_trials, config.trials.workers),
        }
        context.write_csv("histogram.csv", histogram_frame(histograms), header={"n_trials": n_trials})

    with context.stage("snr"):
        ratio = snr(
            histograms["output_counts"],
            centered_window(tau, config.analysis.snr_window_ns),
            config.analysis.noise_window_ns,
        )
        context.write_json("snr.json", ratio.to_dict())

    context.summary.update(
        {
            "efficiency": result.efficiency,
            "echo_time_ns": result.echo_time,
            "analytic_efficiency": analytic,
            "finesse": spec.finesse,
            "snr": ratio.value,
            "snr_uncertainty": ratio.uncertainty,
        }
    )


@scenario("multimode")
def run_multimode(context: RunContext) -> None:
    config = context.config
    pulse_cfg = config.pulse
    with context.stage("comb"):
        spec, profile, pump = build_comb(config)
        context.write_csv("comb.csv", profile_frame(profile, pump), header={"source": config.comb.source})

    tau = spec.storage_time_ns
    centers = [k * pulse_cfg.mode_spacing_ns for k in range(pulse_cfg.modes)]
    with context.stage("propagate"):
        capacity = multimode_capacity(tau, pulse_cfg.mode_spacing_ns)
        if pulse_cfg.modes > capacity:
            raise ValueError(f"{pulse_cfg.modes} modes exceed the capacity of {capacity} for tau = {tau:.4g} ns")
        response = transfer_function(profile, pulse_cfg.padding)
        pulse = input_pulse(config, centers)
        output = store(pulse, response, pulse_cfg.padding)
        context.write_csv(
            "waveform.csv",
            pd.DataFrame(
                {"time_ns": pulse.times, "input_intensity": pulse.intensity, "output_intensity": output.intensity}
            ),
        )

    with context.stage("analyze"):
        results = mode_efficiencies(output, pulse, centers, tau, pulse_cfg.mode_spacing_ns)
        efficiencies = np.array([r.efficiency for r in results])
        echo_times = np.array([c + r.echo_time for c, r in zip(centers, results)])
        mean = float(efficiencies.mean())
        spread = float(np.max(np.abs(efficiencies - mean)) / mean) if mean > 0 else float("inf")
        fifo = bool(np.all(np.diff(echo_times) > 0))
        context.write_csv(
            "modes.csv",
            pd.DataFrame(
                {
                    "mode": np.arange(len(centers)),
                    "input_center_ns": centers,
                    "echo_time_ns": echo_times,
                    "efficiency": efficiencies,
                }
            ),
        )
        context.write_json(
            "memory.json",
            {
                "modes": [r.to_dict() for r in results],
                "mean_efficiency": mean,
                "max_relative_deviation": spread,
                "first_in_first_out": fifo,
                "capacity": capacity,
                "storage_time_ns": tau,
            },
        )

    with context.stage("detect"):
        hist = detect(output, detector_for(config, context.seed_for("detect_output")), config.trials.n_trials, config.trials.workers)
        context.write_csv("histogram.csv", histogram_frame({"output_counts": hist}), header={"n_trials": hist.n_trials})

    context.summary.update(
        {
            "mean_efficiency": mean,
            "max_relative_deviation": spread,
            "first_in_first_out": fifo,
            "capacity": capacity,
        }
    )


def _qubit_geometry(config: ScenarioConfig) -> QubitGeometry:
    pulse = config.pulse
    return QubitGeometry(
        pulse_fwhm=pulse.pulse_fwhm_ns,
        bin_separation=pulse.bin_separation_ns,
        mean_photon_number=pulse.mean_photon_number,
        dt=pulse.dt_ns,
        t_start=pulse.t_start,
        duration=pulse.duration_ns,
    )


def _mean_fidelity(first: FidelityResult, second: FidelityResult) -> FidelityResult:
    counts = {f"a_{k}": v for k, v in first.counts.items()}
    counts.update({f"b_{k}": v for k, v in second.counts.items()})
    return FidelityResult(
        value=0.5 * (first.value + second.value),
        uncertainty=0.5 * float(np.hypot(first.uncertainty, second.uncertainty)),
        counts=counts,
    )


@scenario("qubit_fidelity")
def run_qubit_fidelity(context: RunContext) -> None:
    """Store |e>, |l>, |+> and |->, analyze them and compare F_T with the classical bound."""
    config = context.config
    geometry = _qubit_geometry(config)
    separation = geometry.bin_separation
    with context.stage("comb"):
        spec, profile, _ = build_comb(config)
        response = transfer_function(profile, config.pulse.padding)

    tau = spec.storage_time_ns
    with context.stage("store"):
        inputs = {label: encode_qubit(label, geometry) for label in ("e", "l", "plus", "minus")}
        stored = {label: store(pulse, response, config.pulse.padding) for label, pulse in inputs.items()}
        efficiency = echo_efficiency(stored["e"], inputs["e"], tau, echo_window(config)).efficiency

    with context.stage("interfere"):
        interferometer = config.interferometer.to_spec(separation)
        fields = {
            f"{label}_{port}": umzi_output(stored[label], interferometer, port, bin_separation=separation)
            for label in ("plus", "minus")
            for port in ("A", "B")
        }

    with context.stage("detect"):
        n_trials, workers = config.trials.n_trials, config.trials.workers
        direct = {
            label: detect(stored[label], detector_for(config, context.seed_for(f"detect_{label}")), n_trials, workers)
            for label in ("e", "l")
        }
        analyzed = {
            name: detect(field, detector_for(config, context.seed_for(f"detect_{name}")), n_trials, workers)
            for name, field in fields.items()
        }
        context.write_csv("histogram_el.csv", histogram_frame(direct), header={"n_trials": n_trials})
        context.write_csv("histogram_umzi.csv", histogram_frame(analyzed), header={"n_trials": n_trials})

    with context.stage("fidelity"):
        width = config.analysis.snr_window_ns
        early = centered_window(tau, width)
        late = centered_window(tau + separation, width)
        f_el = fidelity_el(direct["e"], direct["l"], early, late)
        f_pm = _mean_fidelity(
            fidelity_pm(analyzed["plus_A"], analyzed["plus_B"], late),
            fidelity_pm(analyzed["minus_B"], analyzed["minus_A"], late),
        )
        f_total, f_total_sigma = total_fidelity(f_el.value, f_pm.value, f_el.uncertainty, f_pm.uncertainty)
        bound = classical_bound(geometry.mean_photon_number, efficiency)
        report = {
            "mean_photon_number": geometry.mean_photon_number,
            "memory_efficiency": efficiency,
            "f_el": f_el.to_dict(),
            "f_pm": f_pm.to_dict(),
            "f_total": f_total,
            "f_total_uncertainty": f_total_sigma,
            "classical_bound": bound,
            "beats_classical": f_total > bound,
        }
        context.write_json("fidelity.json", report)

    context.summary.update(
        {
            "mean_photon_number": geometry.mean_photon_number,
            "memory_efficiency": efficiency,
            "f_el": f_el.value,
            "f_pm": f_pm.value,
            "f_total": f_total,
            "f_total_uncertainty": f_total_sigma,
            "classical_bound": bound,
            "beats_classical": f_total > bound,
        }
    )


@scenario("fringe")
def run_fringe(context: RunContext) -> None:
    config = context.config
    geometry = _qubit_geometry(config)
    with context.stage("comb"):
        spec, profile, _ = build_comb(config)
        response = transfer_function(profile, config.pulse.padding)

    tau = spec.storage_time_ns
    phases = np.linspace(0.0, 2.0 * np.pi, config.trials.fringe_points, endpoint=False)
    gate = centered_window(tau + geometry.bin_separation, config.analysis.snr_window_ns)
    with context.stage("scan"):
        interferometer = config.interferometer.to_spec(geometry.bin_separation)
        counts = []
        for i, delta_alpha in enumerate(phases):
            qubit = encode_qubit("custom", geometry, delta_alpha=float(delta_alpha))
            analyzed = umzi_output(
                store(qubit, response, config.pulse.padding), interferometer, "A", geometry.bin_separation
            )
            hist = detect(
                analyzed, detector_for(config, context.seed_for(f"fringe_{i}")), config.trials.n_trials, config.trials.workers
            )
            counts.append(hist.counts_in(gate))
        context.write_csv("fringe.csv", pd.DataFrame({"delta_alpha_rad": phases, "counts": counts}))

    with context.stage("fit"):
        result = visibility_and_fidelity(list(zip(phases, counts)))
        context.write_json("visibility.json", result.to_dict())

    context.summary.update(
        {"visibility": result.visibility, "fidelity": result.fidelity, "phase_offset_rad": result.phase_offset}
    )


@scenario("delay_line")
def run_delay_line(context: RunContext) -> None:
    config = context.config
    line = config.delay_line
    with context.stage("compare"):
        spec = config.comb.to_spec()
        tau = spec.storage_time_ns
        if line.length_m is not None:
            length = line.length_m
            loss = length * line.loss_db_per_m
            group_index = SPEED_OF_LIGHT * tau * 1e-9 / length
        else:
            group_index = line.group_index
            length, loss = delay_line_comparison(tau, group_index, line.loss_db_per_m)
        efficiency = afc_efficiency_analytic(spec.comb_depth, spec.finesse, spec.background_depth)
        report = {
            "storage_time_ns": tau,
            "group_index": group_index,
            "loss_db_per_m": line.loss_db_per_m,
            "length_m": length,
            "delay_line_loss_db": loss,
            "memory_efficiency": efficiency,
            "memory_loss_db": -efficiency_db(efficiency) if efficiency > 0 else None,
        }
        context.write_json("delay_line.json", report)
    context.summary.update(report)
