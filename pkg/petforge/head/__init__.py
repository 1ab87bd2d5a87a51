"""
Head package - layer aggregation, pooling and speaker-verification backends.
"""
