"""Sparse approximation of network process snapshots in the Laplacian-eigenvector basis."""

__version__ = "0.1.0"
