"""Semi super-resolution GAN for inpainting randomly corrupted images."""

__version__ = "0.1.0"
