"""Moving energies for nonholonomic systems with affine constraints."""

__version__ = "0.3.0"
