"""gmvlab: mixture-prior VAE laboratory.

Simulates a bifurcating surface-reaction dataset, trains a Gaussian-mixture
VAE with EM-alternating updates, and scores latent embeddings with a
graph-spectral smoothness metric, alongside classical MDS/Isomap baselines
and affine latent-to-parameter alignment.
"""

__version__ = "0.1.0"
