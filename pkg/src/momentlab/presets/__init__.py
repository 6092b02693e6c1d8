"""Bundled configs, one per reproduced experiment."""
