"""
petforge - parameter-efficient tuning lab for speaker verification.
"""

__version__ = '0.1.0'
