"""Tests for the pinchcheck package."""
