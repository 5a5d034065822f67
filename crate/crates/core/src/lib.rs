//! Periodic traveling waves of Korteweg-type Hamiltonian PDEs, their
//! abbreviated action, and the Whitham modulation system in the
//! `(k, alpha, M)` variables, together with its harmonic and soliton limits
//! and the explicit modulational-instability indices.

pub mod action;
pub mod dd;
pub mod error;
pub mod fit;
pub mod func;
pub mod jet;
pub mod limits;
pub mod linalg;
pub mod miindex;
pub mod model;
pub mod modulation;
pub mod profiles;
pub mod quad;
pub mod ser;
pub mod sweep;

pub use error::{Error, LimitSide, Result};
pub use func::{Family, Func};
pub use model::{ModelKind, ModelSpec, WaveParams};
