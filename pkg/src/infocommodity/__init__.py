"""Information-based pricing of storable commodities with an Ornstein-Uhlenbeck convenience dividend."""
from .config import DEFAULT_CONFIG, ModelConfig
from .curves import RateCurve
from .derivatives import (
    GaussianLaw,
    OptionSpec,
    call_on_futures,
    call_on_spot,
    futures_price,
    futures_terminal_law,
    gaussian_call,
    spot_terminal_law,
)
from .market_info import MarketParams, PathBundle, discount_bundle, simulate_joint, weight_z
from .ou_core import OuParams, Schedule, TimeGrid, bridge_moments
from .pricing import SpotQuote, spot_price, spot_price_general, spot_price_inhom
from .suites import SuiteSettings, VerificationReport, run_suite

__version__ = "0.1.0"
