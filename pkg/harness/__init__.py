"""
Training curriculum, evaluation metrics and gradient checks.
"""
