"""Backbone and speaker model tests."""
