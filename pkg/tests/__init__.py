"""Tests for Gamma Observer."""
