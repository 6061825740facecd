//! Simulation toolkit for doubly selective channels.
//!
//! A channel draw is a set of paths with fractional delays and Dopplers. From
//! it the crate builds the `P×P` delay-time channel matrix, moves it to the
//! frequency-Doppler and delay-Doppler domains, measures how concentrated
//! each view is, and equalizes SC, OFDM and OTFS frames in any of them.
//!
//! ```
//! use dslab::channel::{build_h_dt, case_config, sample_paths};
//! use dslab::domains::{to_domain, Domain};
//! use dslab::sparsity::lpr;
//!
//! let cfg = case_config(3, 256, 16, 16)?;
//! let h_dt = build_h_dt(&sample_paths(&cfg, 7)?, cfg.p())?;
//! let h_fd = to_domain(&h_dt, Domain::FrequencyDoppler, cfg.fact)?;
//! assert!(lpr(&h_fd, 16)? > 0.9);
//! # Ok::<(), dslab::Error>(())
//! ```

mod error;
mod rng;

pub mod channel;
pub mod domains;
pub mod equalize;
pub mod harness;
pub mod modem;
pub mod sparsity;
pub mod spectral;

pub use error::{Error, Result};
pub use rng::{derive_seed, keyed_stream, SeedKey, Stream};

/// Guide chapters, compiled as doctests so their snippets stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/channels.md")]
    pub struct Channels;
    #[doc = include_str!("../../../book/src/transforms.md")]
    pub struct Transforms;
    #[doc = include_str!("../../../book/src/domains.md")]
    pub struct Domains;
    #[doc = include_str!("../../../book/src/sparsity.md")]
    pub struct Sparsity;
    #[doc = include_str!("../../../book/src/equalization.md")]
    pub struct Equalization;
    #[doc = include_str!("../../../book/src/sweeps.md")]
    pub struct Sweeps;
}
