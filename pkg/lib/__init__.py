"""
SphereAR Desk Library Package

Spherical latents for autoregressive generation at desk scale: a numpy
autodiff core, directional distributions, sphere geometry, variational
bounds, a toy S-VAE, the AR pipeline and the experiment front end.
"""

__version__ = "0.1.0"
