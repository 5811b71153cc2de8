"""
Synthetic unpaired data and dataset file formats.
"""
