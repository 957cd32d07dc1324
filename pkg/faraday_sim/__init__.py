"""Faraday spin simulator.

Single-spin light-shift dynamics, Faraday polarimeter signals and decay analysis
for a laser-probed alkali ground manifold.
"""
__version__ = "0.1.0"
