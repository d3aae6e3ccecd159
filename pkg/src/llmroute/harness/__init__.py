"""Experiment harness: simulated studies, dataset ingestion, live runs."""
