"""Scenario, stress, and benchmark harness for the monitor library."""
