"""
Test suite for petforge.

Unit tests per package plus integration tests:
- Tensor engine and gradient checks
- Backbone, PET modules and parameter accounting
- Heads, scoring and metrics
- Corpus, trials and file formats
- Optimizer and the lab managers
- Command line and end-to-end learning runs
"""
