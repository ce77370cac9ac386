"""Desk-scale experiments."""
