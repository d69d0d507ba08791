"""Latent-variable extractive summarization.

Sentence extraction is modeled with a hierarchical recurrent labeler
whose binary keep/drop decisions are treated as latent variables: the
labeler is pretrained on heuristic oracle labels, then refined with a
sampled policy-gradient objective whose reward comes from a seq2seq
sentence-compression scorer.
"""

__version__ = "0.1.0"
