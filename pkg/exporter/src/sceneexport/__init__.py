"""sceneexport: thin adapter from vision/diffusion backbones to scene manifests.

Runs a registered backbone over posed RGB-D input, pools the native token
grid to the analysis grid, converts millimeter depth to float32 meters, and
writes manifest directories the voxelprobe toolkit consumes. No scoring
happens here.
"""

__version__ = "0.1.0"

from .backbones import Backbone, BackboneLoadError, DummyRandomBackbone, load_backbone, register_backbone
from .export import ExportConfig, InputFrame, InputScene, export_scene, load_input_scene

__all__ = [
    "Backbone",
    "BackboneLoadError",
    "DummyRandomBackbone",
    "ExportConfig",
    "InputFrame",
    "InputScene",
    "export_scene",
    "load_backbone",
    "load_input_scene",
    "register_backbone",
]
