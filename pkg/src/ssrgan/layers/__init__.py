from ssrgan.layers.functional import (
    activation, batch_norm2d, conv2d, conv_output_size, leaky_relu, pixel_shuffle,
    pixel_unshuffle, prelu, relu, sigmoid, tanh, transpose_conv2d, transpose_output_size,
)
from ssrgan.layers.modules import (
    BatchNorm2d, Conv2d, ConvTranspose2d, Identity, LeakyReLU, Module, PixelShuffle, PReLU,
    ResidualBlock, Sequential, Sigmoid, Tanh, residual_block,
)
