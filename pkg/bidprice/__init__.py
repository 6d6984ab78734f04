"""
Data-private bid-price control for multi-party network revenue management.
"""
__version__ = "1.0.0"
