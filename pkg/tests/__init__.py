"""
Tests for the tamed SGD library, experiment runner, CLI and API.
"""
