"""Analogical concept memory and interactive concept-learning agent."""
