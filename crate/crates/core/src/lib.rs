//! Error-exponent reliability bounds, blocklength allocation and ARQ latency
//! for linear half-duplex decode-and-forward multi-hop links.
//!
//! Rates and exponents are in nats per channel use; SNRs are linear except at
//! the CLI and scenario-file boundary, which accept dB.

pub mod allocation;
pub mod arq;
pub mod channel;
pub mod cli;
pub mod distproto;
pub mod error;
pub mod exponents;
pub mod figures;
pub mod oracle;
pub mod scenario;
pub mod system;
pub mod verify;

pub use allocation::{Allocation, Method, TimeShare};
pub use arq::{ArqChain, LatencyEstimate};
pub use channel::{Dmc, HopChannel};
pub use error::{Error, Result};
pub use exponents::{CriticalRate, ExponentResult, Regime};
pub use system::SystemBounds;
