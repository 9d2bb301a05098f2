"""sketchkit: structured random test matrices for randomized linear algebra.

Sparse, trigonometric-transform, and Khatri-Rao sketching operators
with subspace-injection diagnostics, the standard sketching algorithms
(randomized SVD, psd and generalized Nystrom, sketch-and-solve,
bilinear matrix recovery), variance-reduced trace estimation, and a
benchmark CLI.
"""

from . import bench, core, diagnostics, rand_nla, sketch, trace

__all__ = ["bench", "core", "diagnostics", "rand_nla", "sketch", "trace"]
__version__ = "0.1.0"
