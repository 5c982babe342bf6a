"""Tests for the fractional delay equation analyzer."""
