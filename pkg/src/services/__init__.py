"""Completion backends: live chat completion, fixture replay and gold-label oracle."""
