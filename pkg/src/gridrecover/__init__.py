"""Cyber-recovery planning for load-altering attacks on power grids.

Computes a crew routing and droop-gain wind-down schedule that keeps the
grid small-signal stable at every step of the recovery, via one
mixed-integer linear program over linearized eigenvalue constraints.
"""

__version__ = "0.1.0"
