"""Experiment harness: configuration, named experiments, CLI."""
