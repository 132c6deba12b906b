"""Prior-shift and feature-shift adjustment for transferring multi-class
crop classifiers across regions, with the full featurization, classification,
adjustment, and evaluation pipeline."""

__version__ = "0.1.0"

from cropshift.dataset import ClassPriors, Dataset, predict_label, predict_labels

__all__ = ["ClassPriors", "Dataset", "predict_label", "predict_labels", "__version__"]
