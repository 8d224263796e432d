//! Physics-informed PDE solving with a trainable rational activation.
//!
//! The model is a single hidden layer of neurons z -> (mu1*z + mu2)/(z^2 + d^2),
//! each with its own trainable (mu1, mu2, d), followed by a linear readout. Because
//! the activation is rational, every quantity a collocation loss needs, the network
//! value, its input gradient, its per-coordinate second derivatives, and the parameter
//! gradient of any scalar built from those, has a closed form. No autodiff anywhere.
//!
//! Crate layout:
//! * [`activation`]: the rational kernel and its derivatives, plus a tanh reference.
//! * [`cauchy`]: contour-integral sums the activation family descends from, kept as
//!   an independent verification path.
//! * [`network`], [`constraints`]: the model, and hard-constraint ansatz composition.
//! * [`problems`], [`sampling`], [`loss`]: benchmark PDEs, point sets, the objective.
//! * [`optim`], [`train`], [`metrics`]: Adam and L-BFGS, the run driver, reporting.

pub mod activation;
pub mod cauchy;
pub mod constraints;
pub mod fd;
pub mod loss;
pub mod metrics;
pub mod network;
pub mod optim;
pub mod problems;
pub mod rng;
pub mod sampling;
pub mod train;

pub use activation::CauchyParams;
pub use loss::LossBreakdown;
pub use metrics::RunReport;
pub use network::{CauchyNet, Jet, NetJet};
pub use problems::PdeProblem;
pub use sampling::PointSet;
pub use train::TrainConfig;

/// Install a global rayon pool of the given size. Idempotent in effect: a
/// second call with a different size fails quietly because the pool is
/// process-global, and every algorithm here is correct under any pool size.
pub fn build_thread_pool(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Crate-wide error type. `Config` covers bad user input, `Numerical` covers
/// runs that produced non-finite values; the CLI maps them to distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
