//! Conditionally Poisson dynamic model: structure, simulation, filtering and
//! posterior predictive sampling.

mod filter;
mod forecast;
mod series;
mod simulate;
mod spec;

pub use filter::{FilterState, PredictiveSummary, LIKELIHOOD_FLOOR};
pub use forecast::{forecast, ForecastSamples};
pub use series::TimeSeries;
pub use simulate::simulate;
pub use spec::ModelSpec;
