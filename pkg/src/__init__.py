"""
Code Summary Entity Tracer

Detects and localizes hallucinations in natural-language summaries of Java
code by tracing the entities a summary mentions back to the code and
verifying how each one is described.
"""

__version__ = "1.0.0"
