//! Extremal set theory in the Boolean lattice.
//!
//! * [`lattice`]: subsets, families and k-chains of `P(n)`.
//! * [`density`]: exact l-chain densities and permutation-method quantities.
//! * [`supersat`]: the edge-by-edge balanced supersaturation builder.
//! * [`containers`]: container steps, the iterated fingerprint pipeline and its counting bounds.
//! * [`extremal`]: exact maximum antichains and maximum k-chain-free subfamilies.
//! * [`random_lab`]: seeded experiments on the random family `P(n, p)`.
//! * [`cli`]: configuration and dispatch for the `spernerlab` binary.

pub mod error;
pub mod density;
pub mod lattice;
pub mod extremal;
pub mod supersat;
pub mod containers;
pub mod random_lab;
pub mod cli;
pub(crate) mod flow;

pub use error::{Error, Result};
pub use lattice::{Chain, SubsetFamily, SubsetId};
