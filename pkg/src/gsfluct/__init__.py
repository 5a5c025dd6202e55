"""Exact-enumeration laboratory for free-energy fluctuations in the Ghatak-Sherrington spin glass."""

__version__ = "0.1.0"
