# board/__init__.py
"""Message board service relaying masked payloads between protocol parties."""
