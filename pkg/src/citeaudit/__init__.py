"""Citation-quality audit pipeline for search-augmented LLM responses.

The package covers the full batch flow: extracting citations from provider
response payloads, crawling cited sources politely, filtering to the
evaluable pool, classifying with an LLM judge, scoring through the alignment
and suitability matrices plus the fidelity rubric, and computing the failure,
exposure, independence, sensitivity, and reliability statistics.
"""

__version__ = "0.1.0"
