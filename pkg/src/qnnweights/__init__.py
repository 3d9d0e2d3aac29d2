"""Train classical neural networks through the measurement statistics of a simulated quantum circuit."""

__version__ = "0.1.0"
