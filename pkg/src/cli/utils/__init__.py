"""Shared CLI utilities."""

from .metadata import Metadata

__all__ = ["Metadata"]
