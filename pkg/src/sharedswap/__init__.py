"""Simulated atomic exchanges of co-owned assets across two ledgers."""
