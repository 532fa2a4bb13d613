"""Simulator and design-space explorer for a delay-buffered WDM photonic
convolutional neural network accelerator (IPCNN)."""

__version__ = "0.1.0"
