"""Low-discrepancy integer sets, exact linear-form distributions,
sign-approximation oracles, halfspace lifting, and circulant expanders,
with verifiable certificates."""

__version__ = "0.1.0"
