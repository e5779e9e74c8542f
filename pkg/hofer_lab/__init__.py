"""hofer-lab: computational lab for C⁰, derivative and Hofer/spectral norms of surface maps."""

__version__ = "0.1.0"
