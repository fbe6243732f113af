"""Shared fixtures: the measured comb, its profile and quick scenario configs."""

import pytest

from afc_memory.ensemble import CombSpec, IonEnsembleParams, comb_grid, ideal_comb_profile
from afc_memory.harness import ScenarioConfig, bundled_config
from afc_memory.propagation import PulseTrain, transfer_function


@pytest.fixture
def measured_comb() -> CombSpec:
    return CombSpec(tooth_spacing=2.5, tooth_fwhm=1.03, comb_depth=1.61, background_depth=1.36, bandwidth=40.0)


@pytest.fixture
def measured_profile(measured_comb):
    return ideal_comb_profile(measured_comb, comb_grid(measured_comb))


@pytest.fixture
def measured_response(measured_profile):
    return transfer_function(measured_profile)


@pytest.fixture
def input_pulse() -> PulseTrain:
    return PulseTrain.gaussian(50.0, mean_photon_number=1.0)


@pytest.fixture
def ensemble() -> IonEnsembleParams:
    return IonEnsembleParams()


@pytest.fixture
def output_root(tmp_path, monkeypatch):
    """Point the output-root environment variable at a temporary directory."""
    root = tmp_path / "runs"
    monkeypatch.setenv("AFC_MEMORY_OUTPUT_ROOT", str(root))
    return root


@pytest.fixture
def make_config():
    """Build a ScenarioConfig from a bundled name or a dict, with section overrides."""

    def factory(base, **sections) -> ScenarioConfig:
        data = bundled_config(base).to_dict() if isinstance(base, str) else dict(base)
        for section, values in sections.items():
            if isinstance(values, dict):
                data.setdefault(section, {}).update(values)
            else:
                data[section] = values
        return ScenarioConfig.from_dict(data)

    return factory
