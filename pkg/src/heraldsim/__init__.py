"""Density-operator simulation of absorption-based heralded entanglement."""
from .densop import DensityOp, KrausSet, PureState
from .metrics import bell_fidelity, concurrence, expected_trials_analytic, expected_trials_mc
from .photonics import (
    DetectorModel,
    NodeParams,
    ResourceOutcome,
    SourceModel,
    resource_closed_form,
    simulate_resource,
)
from .ppp import PppResult, run_ppp, success_probability_analytic

__all__ = [
    "DensityOp", "KrausSet", "PureState",
    "NodeParams", "DetectorModel", "SourceModel", "ResourceOutcome",
    "simulate_resource", "resource_closed_form",
    "run_ppp", "PppResult", "success_probability_analytic",
    "concurrence", "bell_fidelity", "expected_trials_analytic", "expected_trials_mc",
]
