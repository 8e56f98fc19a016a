"""Multimode Gaussian light, multipixel detection and its noise."""
