"""
Configuration package for the bid-price toolkit.
"""
