"""Sequential, parallel and random-access decompression of gzip files."""

__version__ = "0.1.0"
