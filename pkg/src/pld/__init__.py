"""Physical-layer deception: FBL error model, semantic distortion and blocklength allocation."""

__version__ = "0.1.0"
