"""Tests for leoage.lib modules."""
