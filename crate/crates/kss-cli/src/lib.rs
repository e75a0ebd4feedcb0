//! IO, configuration and orchestration around the `kss-core` solver kernels:
//! key-value config parsing, the run loop with CSV/JSON/snapshot output, the
//! alpha sweep and the ODE-bound verification campaign.

pub mod config;
pub mod lemma;
pub mod run;
pub mod snapshot;
pub mod sweep;
