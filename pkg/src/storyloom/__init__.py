"""Storyloom: turn a one-line requirement into a reviewable set of behavior
scenarios, then into a working three-file static web prototype.

The package is organized around the pipeline:

- :mod:`storyloom.gherkin` keyword-anchored scenario text blocks
- :mod:`storyloom.memory` requirement/scenario memory with Jaccard matching
- :mod:`storyloom.gateway` model providers, usage accounting, transcripts
- :mod:`storyloom.scenarios` requirement -> scenarios -> decisions chain
- :mod:`storyloom.prototype` scenarios -> page/visual design -> code chain
- :mod:`storyloom.session` stateful sessions behind an HTTP API
- :mod:`storyloom.evaluation` batch runner and report metrics
"""

__version__ = "0.1.0"
