"""Energy-efficient cell-free massive-MIMO ISAC downlink for URLLC users."""

__version__ = "0.1.0"
