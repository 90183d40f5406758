"""Inference-aware hierarchical FL orchestration: solver, routing simulator and cost model."""

__version__ = "0.1.0"
