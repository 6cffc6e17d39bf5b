"""
Typical experiment-setup uncertainty aspects, proposed per setup type
"""

# Purely software-based setups (simulation, co-simulation)
SOFTWARE_BASED_ASPECTS = [
    "Model fidelity and simplifications of the simulated components",
    "Parameterization of simulation models (unknown or estimated values)",
    "Numerical solver settings: step size, tolerances, convergence",
    "Co-simulation coupling: data exchange interval and synchronization",
    "Input time series and scenario data quality",
]

# Laboratory setups with physical equipment
HARDWARE_BASED_ASPECTS = [
    "Precision and calibration of measurement equipment",
    "Random measurement noise and sensor drift",
    "Ambient conditions (temperature, irradiation, grid background)",
    "Tolerances of hardware under test and auxiliary devices",
    "Repeatability of the laboratory procedure",
]

# Hardware-in-the-loop and geographically distributed setups
MIXED_ASPECTS = [
    "Communication latency and jitter between coupled infrastructures",
    "Interface algorithm and signal conversion (DAC/ADC) effects",
    "Time synchronization between real-time simulators and hardware",
    "Precision and calibration of measurement equipment",
    "Model fidelity of the simulated part of the setup",
]


def get_es_aspects(setup_type: str) -> list[str]:
    """
    Get the typical uncertainty aspects for an experiment setup type

    Args:
        setup_type: 'software_based', 'hardware_based' or 'mixed'

    Returns:
        List of aspects proposed for further consideration
    """
    aspects = {
        "software_based": SOFTWARE_BASED_ASPECTS,
        "hardware_based": HARDWARE_BASED_ASPECTS,
        "mixed": MIXED_ASPECTS,
    }

    return list(aspects.get(setup_type, SOFTWARE_BASED_ASPECTS))
