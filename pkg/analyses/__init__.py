"""Analysis stages: one per CLI command, each writing a CSV plus the run manifest."""
