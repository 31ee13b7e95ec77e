"""Fault-injectable main-fuel-pump simulator and labelled benchmark toolkit."""

__version__ = "0.1.0"
