"""Test suite for alhierarchy."""
