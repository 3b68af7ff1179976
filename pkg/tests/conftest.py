import pytest

from diffcal.simulator import CalorimeterConfig, NoiseModel, ThermostatProfile


@pytest.fixture
def quiet_config():
    """Active calorimeter with all randomness switched off."""
    return CalorimeterConfig(
        noise=NoiseModel.noiseless(),
        thermostat=ThermostatProfile(control_accuracy=0.0),
    )
