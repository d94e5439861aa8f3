"""Decentralized authentication and reputation for wireless sensor networks.

A simulated hash-chained ledger hosts the identity registry, the web of
trust and one reputation contract per node. The :mod:`batman.simharness`
module reproduces the reputation-estimation experiments.
"""

__version__ = "0.1.0"

# Version of the canonical transaction/block encoding and CSV layouts.
FORMAT_VERSION = "1"
