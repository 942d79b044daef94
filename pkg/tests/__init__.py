"""Tests for the crowd navigation benchmark."""
