from htdp.mech.accounting import AccountantLedger, LedgerEntry
from htdp.mech.noise import (
    RDP_ORDERS,
    ApproxDp,
    Cdp,
    Rdp,
    cdp_to_dp,
    gaussian_cdp_cost,
    gaussian_sigma_for,
    laplace_acceptance,
    noise_disabled,
    noise_enabled,
    rdp_to_dp,
    sample_bounded_laplace,
    sample_gaussian,
    sample_laplace,
)
from htdp.mech.rng import RngStream, as_generator, as_stream
from htdp.mech.svt import BOTTOM, TOP, SvtConfig, svt_run

__all__ = [
    "AccountantLedger", "LedgerEntry", "RDP_ORDERS", "ApproxDp", "Cdp", "Rdp",
    "cdp_to_dp", "gaussian_cdp_cost", "gaussian_sigma_for", "laplace_acceptance",
    "noise_disabled", "noise_enabled", "rdp_to_dp", "sample_bounded_laplace",
    "sample_gaussian", "sample_laplace", "RngStream", "as_generator", "as_stream",
    "BOTTOM", "TOP", "SvtConfig", "svt_run",
]
