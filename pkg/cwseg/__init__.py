"""
Context-window pixel classification for object/background segmentation.
"""

__version__ = "0.1.0"
