"""Batched anonymous admission and provisioning over folded, multi-key encrypted credentials."""

__version__ = "0.1.0"
