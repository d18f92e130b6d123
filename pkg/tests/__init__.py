"""Tests for the leoage CLI tool."""
