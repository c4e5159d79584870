"""Anycast DDoS mitigation sandbox: routing simulation, playbooks, offered-load
estimation, and an automated rebalancing controller."""

__version__ = "0.1.0"
