"""
Core package - the Lab orchestrator and the shared exception hierarchy.
"""
