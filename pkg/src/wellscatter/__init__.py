"""Scattering, phase time and negative-phase-time analysis for 1-D wells."""
