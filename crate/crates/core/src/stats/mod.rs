//! Streaming estimators for the quantities measured on the model. Every
//! accumulator is an [`Observer`](crate::Observer) and merges with another
//! accumulator of the same shape.

pub mod catastrophe;
pub mod correlation;
pub mod csv;
pub mod definetti;
pub mod direction;
pub mod flood;
pub mod histogram;
pub mod switching;

pub use catastrophe::{CatastropheAccumulator, CatastropheConfig, Numerator, Pairing, Side};
pub use correlation::{time_avg_correlation, LoadCorrelationAccumulator};
pub use definetti::{
    definetti_estimate, endpoint_fraction, frequency_estimates, ks_distance, left_probability_estimates,
    DeFinettiHistogram,
};
pub use direction::{pearson, same_row_pair_correlation, Correlation, FreezeTracker, Lag1Autocorrelation};
pub use flood::{flood_ratio, FloodAccumulator, FloodConfig};
pub use histogram::{load_histogram, Binning, Histogram, LoadHistogram};
pub use switching::SwitchAccumulator;
