"""helmdd: a 2D finite-element Helmholtz lab comparing the overlapping
restricted additive Schwarz preconditioner with the non-overlapping
substructured Schwarz solver for many right-hand sides."""

__version__ = "0.1.0"
