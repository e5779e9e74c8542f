"""Tests for hofer-lab."""
