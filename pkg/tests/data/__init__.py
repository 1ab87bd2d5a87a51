"""Corpus, trial and container tests."""
