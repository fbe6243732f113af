"""Bundled scenario documents."""
