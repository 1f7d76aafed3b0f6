"""Adversarial robustness of hate-speech classifiers: attacks, spell-based
correction and numpy LSTM/GRU/CNN baselines."""

__version__ = "0.1.0"
