"""Simulator of collaborating wireless sensor networks whose Enhanced Gateways share trust-weighted summaries."""
