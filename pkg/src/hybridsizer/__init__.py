"""Techno-economic sizing engine for hybrid renewable microgrids."""

__version__ = "0.1.0"
