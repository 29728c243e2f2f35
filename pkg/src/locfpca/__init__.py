"""Local covariance operators of Hilbert-valued random elements, with numerical oracles."""

__version__ = "0.1.0"
