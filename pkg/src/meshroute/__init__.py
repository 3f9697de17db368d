"""Deterministic Bluetooth-mesh routing simulator with AODV and learned fusion routing."""

__version__ = "0.1.0"
