"""Aggregation, pooling and backend tests."""
