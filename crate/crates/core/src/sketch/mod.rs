//! Mergeable probabilistic structures used by the engine: a Count-Min
//! Sketch for block sizes, a Bloom filter for over-size membership and an
//! XOR membership hash identifying a block by its exact record set.
//!
//! Each structure has an exact counterpart ([`SizeCounter::Exact`],
//! [`OversizeFilter::Exact`]) selected by [`Approximation`](crate::model::Approximation).

mod bloom;
mod cms;
mod counter;
mod membership;

pub use bloom::{bloom_build, BloomFilter};
pub use cms::CountMinSketch;
pub use counter::{OversizeFilter, SizeCounter};
pub use membership::{xor_membership, MembershipHash};
