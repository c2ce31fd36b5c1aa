"""Toolkit for mining, generating, filtering and evaluating parallel corpora
built from topic-aligned comparable document collections."""

__version__ = "0.1.0"
