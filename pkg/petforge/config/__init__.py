"""
Configuration package - process switches, numeric constants and run documents.
"""
