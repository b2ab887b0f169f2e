"""Seed-chain-extend under an indel and substitution channel."""

__version__ = "0.1.0"
