"""Machine-generated text detection toolkit.

Three detector families over one corpus pipeline: contrastive corpus
statistics, classical classifiers on skip-gram document embeddings, and
zero-shot probability-curvature scoring under an n-gram language model,
plus the adversarial evaluation harness that compares them.
"""

__version__ = "0.1.0"
