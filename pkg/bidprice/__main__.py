# bidprice/__main__.py
"""
Main entry point for ``python -m bidprice``.
"""
from .cli import main

if __name__ == "__main__":
    main()
