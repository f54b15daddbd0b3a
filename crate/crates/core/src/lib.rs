//! Piggybacking MDS array codes over GF(2^8).
//!
//! Two code families are provided, both systematic and MDS (any `k` of the
//! `n` nodes recover the data) with low single-node repair bandwidth at
//! small sub-packetization:
//!
//! - [`C1Spec`]: `C1(n, k, m, L)` with `2 <= m <= r = n - k`, where the
//!   piggyback functions help repair both data and parity nodes.
//! - [`C2Spec`]: `C2(n, k, m = s r, L)` with `2 <= s <= r`, combining
//!   piggybacks for data nodes with a pairwise transformation of parity
//!   cells for parity nodes.
//!
//! Every repair is expressed as a [`RepairPlan`]: the exact set of cells to
//! download plus a small linear program that rebuilds the lost row.
//! [`analysis`] holds the closed-form repair-ratio bounds and a sweep
//! harness; [`shard`] stores stripes as shard files.
//!
//! ```
//! use piggyback::{ArrayCode, C1Spec, ErasedStripe, Grid, Gf256};
//!
//! let code = C1Spec::new(11, 6, 4, 2).unwrap();
//! let data = Grid::from_fn(6, 4, |r, c| Gf256((r * 4 + c) as u8));
//! let stripe = code.encode(&data).unwrap();
//!
//! let plan = code.plan_repair(0).unwrap();
//! assert_eq!(plan.bandwidth(), 20);
//! let row = plan.execute(code.base(), &ErasedStripe { stripe: &stripe, erased: 0 }).unwrap();
//! assert_eq!(row, stripe.row(0));
//! ```

pub mod analysis;
pub mod base_mds;
pub mod c1;
pub mod c2;
pub mod cli;
pub mod code;
pub mod error;
pub mod field;
pub mod grid;
pub mod matrix;
pub mod repair;
pub mod shard;

pub use base_mds::BaseCode;
pub use c1::{C1Spec, PiggybackFn};
pub use c2::{C2Spec, PiggybackSlot, TransformPair, DEFAULT_THETA};
pub use code::{decode_any_k, verify_mds, ArrayCode, CodeParams, CodeSpec, Decoder, MdsReport, Variant};
pub use error::{Error, Result};
pub use field::Gf256;
pub use grid::{Cell, Grid, Stripe};
pub use repair::{bandwidth_table, BandwidthTable, CellSource, ErasedStripe, PlanExecutor, RepairPlan};
