"""Free probability toolkit: non-crossing partitions, free cumulants,
analytic free convolution and random-matrix checks."""

__version__ = "0.1.0"
