"""Desk-scale excavation-policy framework: simulator, experts, sequence policies, fine-tuning, evaluation."""

__version__ = "0.1.0"

