"""Certified Lipschitz bounds for classical, quantum and hybrid quantum-classical models."""

from .classical import DenseNet, Layer, lip_empirical, lip_product, lip_sdp
from .errors import HybridLipError, NumericalError, ValidationError
from .hybrid import HybridModel, QuantumBlock, encoder_constant, hybrid_forward, hybrid_lip_bound, hybrid_lip_lower
from .qlip import lipschitz_exact, lipschitz_sampling, lipschitz_subgradient
from .quantum import CircuitSpec, Gate, Povm, measure_probs
from .train import MetricsLog, TrainConfig

__version__ = "0.1.0"

__all__ = [
    "CircuitSpec", "DenseNet", "Gate", "HybridLipError", "HybridModel", "Layer", "MetricsLog",
    "NumericalError", "Povm", "QuantumBlock", "TrainConfig", "ValidationError", "encoder_constant",
    "hybrid_forward", "hybrid_lip_bound", "hybrid_lip_lower", "lip_empirical", "lip_product", "lip_sdp",
    "lipschitz_exact", "lipschitz_sampling", "lipschitz_subgradient", "measure_probs",
]
