"""Lottery-ticket experiments on simulated variational quantum circuits."""

__version__ = "0.1.0"
