"""All-spin-logic pattern recognition: device models, circuit co-simulation and detectors."""

__version__ = "0.1.0"
