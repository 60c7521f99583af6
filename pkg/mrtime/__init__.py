"""Execution-time modeling of MapReduce jobs from their mapper and reducer counts."""
