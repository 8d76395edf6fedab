"""Weak innovation autoencoder (WIAE) and generative probabilistic forecasting."""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
