"""Modeling, simulation and calibration of a pneumatic pouch friction clutch
with an integrated incremental strip-position sensor."""

__version__ = "0.1.0"
