"""Handwritten character recognition workbench.

Binary-image preprocessing, four structural feature extractors, a
feature-wise MLP ensemble with voting fusion and an SMO-trained kernel SVM.
"""

__version__ = "0.1.0"
