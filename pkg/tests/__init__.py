"""Test package for game-lab."""
