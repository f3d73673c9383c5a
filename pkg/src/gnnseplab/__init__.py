"""Color refinement versus bounded recurrent GNNs on depth-two trees."""

__version__ = "0.1.0"
