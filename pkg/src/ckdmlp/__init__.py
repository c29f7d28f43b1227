"""From-scratch dense-network toolkit for tabular CKD classification."""

__version__ = "0.1.0"
