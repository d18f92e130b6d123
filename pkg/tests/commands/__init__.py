"""Tests for leoage.commands modules."""
