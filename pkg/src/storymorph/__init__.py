"""storymorph: narrative-structure search with quality-diversity evolution."""

__version__ = "0.1.0"
