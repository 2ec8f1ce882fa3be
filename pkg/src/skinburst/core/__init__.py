"""Lattice physics: Hamiltonians, spectra, transfer factors and dynamics."""
