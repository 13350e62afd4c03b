"""Two-phase flow with non-matched densities: energy-stable implicit stepping on a staggered grid."""
__version__ = "0.1.0"
