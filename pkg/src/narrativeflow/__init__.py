"""narrativeflow: track news stories across websites from passage embeddings.

Clusters passages into story clusters (delayed-creation DP-means on the unit
sphere), labels them with PMI keywords, builds per-story time cascades,
infers the inter-website influence network greedily from those cascades, and
computes ecosystem analytics: centralities, copy matrices, stance aggregates,
bias latents, and divergence measures.
"""

__version__ = "0.1.0"
