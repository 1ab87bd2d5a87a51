"""Scoring and metric tests."""
