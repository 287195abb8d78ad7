"""Experiment orchestration: training loops, sweeps, persistence and CLI."""
