"""Hammerstein integral equations with positive kernels, and Gibbs measures on Cayley trees."""

__version__ = "0.1.0"
