"""Index theory of closed characteristics on star-shaped hypersurfaces."""
__version__ = "0.1.0"
