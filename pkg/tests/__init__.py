"""Test suite for the SPDC MDI-QKD simulation library."""
