"""Physical verification for a predictive 15 nm FinFET PDK: DRC, extraction/LVS and first-order PEX."""

__version__ = "0.1.0"
