//! Gas-price paths, fee-elastic Poisson arrivals and seeded random streams.

mod demand;
mod poisson;
mod price;
mod rng;

pub use demand::{arrival_rate, sample_arrivals, DemandModel};
pub use poisson::{poisson_pmf, PoissonSampler};
pub use price::{
    sample_price_iid, stationary_std, step_price_ar1, PriceMode, PriceModel, PricePath, PriceState,
};
pub use rng::{Role, RngStream};
