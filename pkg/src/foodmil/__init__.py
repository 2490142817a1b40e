"""
FoodMIL - weakly supervised food detection and segmentation

Attention-based multiple instance learning trained from image-level labels
only. The attention weights of a trained detector double as a heatmap that
segments the food class it was trained on.
"""

__version__ = "0.1.0"
__author__ = "FoodMIL Development Team"

from .config import RunConfig, load_config
from .exceptions import FoodMILError
from .foodmil_core import FoodMILCore

__all__ = ["FoodMILCore", "FoodMILError", "RunConfig", "load_config"]
