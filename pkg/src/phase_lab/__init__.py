"""Phase transition laboratory for random binary constraint satisfaction problems."""
__version__ = "0.1.0"
