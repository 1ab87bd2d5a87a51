"""
Model package - backbone, Transformer blocks and the assembled speaker model.
"""
