use std::ops::BitXor;

use serde::{Deserialize, Serialize};

use crate::model::{record_digest, RecordId};

/// XOR-fold of per-record digests; equal record-id sets give equal hashes
/// regardless of order or partitioning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MembershipHash(pub u128);

impl MembershipHash {
    pub const EMPTY: MembershipHash = MembershipHash(0);

    pub fn with(self, rid: RecordId) -> Self {
        MembershipHash(self.0 ^ record_digest(rid))
    }
}

impl BitXor for MembershipHash {
    type Output = MembershipHash;

    fn bitxor(self, rhs: Self) -> Self {
        MembershipHash(self.0 ^ rhs.0)
    }
}

pub fn xor_membership(rids: impl IntoIterator<Item = RecordId>) -> MembershipHash {
    rids.into_iter().fold(MembershipHash::EMPTY, MembershipHash::with)
}
