"""Combinatorial structure of finitely presented monoids."""

__version__ = "0.1.0"
