"""Multidimensional quantum encoding on single-photon temporal wavepackets."""

__version__ = "0.1.0"
