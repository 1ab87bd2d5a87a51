"""Tensor engine tests."""
