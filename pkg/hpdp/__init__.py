"""
HPDP Dataflow Lab
=================
Cycle-level simulator, conv mapper and benchmark harness for an XPP-style
reconfigurable dataflow array.
"""

__version__ = "1.0.0"
