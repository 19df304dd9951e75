"""Test suite for the motif_controversy package."""
