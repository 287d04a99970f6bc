//! Stores: one domain per variable, the self-contained unit of work that is
//! copied between workers and transmitted between teams.
//!
//! Wire format (bit-exact): a 2-byte unsigned little-endian variable count
//! `n`, followed by `n` 8-byte little-endian domain masks in variable order.

use crate::domain::FiniteDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreStatus {
    /// Every domain is a singleton: the store holds exactly one tuple.
    Solution,
    /// Some domain is empty: the store holds no tuple.
    Failed,
    Open,
}

/// The domains of all variables of a problem; a sub-search space.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Store {
    domains: Vec<FiniteDomain>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("store frame too short: need {need} bytes, got {got}")]
    Truncated { need: usize, got: usize },
    #[error("store frame length mismatch: {n} variables need {need} bytes, got {got}")]
    LengthMismatch { n: usize, need: usize, got: usize },
}

impl Store {
    pub fn new(domains: Vec<FiniteDomain>) -> Store {
        Store { domains }
    }

    /// All `n` variables get the full domain `0..=max`.
    pub fn uniform(n: usize, max: u8) -> Store {
        Store { domains: vec![FiniteDomain::range(0, max); n] }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.domains.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    #[inline]
    pub fn domain(&self, var: usize) -> FiniteDomain {
        self.domains[var]
    }

    #[inline]
    pub fn set_domain(&mut self, var: usize, d: FiniteDomain) {
        self.domains[var] = d;
    }

    pub fn domains(&self) -> &[FiniteDomain] {
        &self.domains
    }

    /// Copy with `var` narrowed to the singleton `{v}`.
    pub fn with_assigned(&self, var: usize, v: u8) -> Store {
        let mut s = self.clone();
        s.domains[var] = s.domains[var].assign(v);
        s
    }

    /// Copy with `var` replaced by `d`.
    pub fn with_domain(&self, var: usize, d: FiniteDomain) -> Store {
        let mut s = self.clone();
        s.domains[var] = d;
        s
    }

    pub fn status(&self) -> StoreStatus {
        let mut all_singleton = true;
        for d in &self.domains {
            if d.is_empty() {
                return StoreStatus::Failed;
            }
            all_singleton &= d.is_singleton();
        }
        if all_singleton {
            StoreStatus::Solution
        } else {
            StoreStatus::Open
        }
    }

    /// The single tuple of a solution store; `None` unless every domain is a
    /// singleton.
    pub fn as_tuple(&self) -> Option<Vec<u8>> {
        self.domains
            .iter()
            .map(|d| if d.is_singleton() { d.min() } else { None })
            .collect()
    }

    /// Number of tuples in the cross product of the domains, saturating.
    pub fn tuple_count(&self) -> u128 {
        self.domains
            .iter()
            .fold(1u128, |acc, d| acc.saturating_mul(d.size() as u128))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 + 8 * self.domains.len());
        out.extend_from_slice(&(self.domains.len() as u16).to_le_bytes());
        for d in &self.domains {
            out.extend_from_slice(&d.mask().to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Store, CodecError> {
        if bytes.len() < 2 {
            return Err(CodecError::Truncated { need: 2, got: bytes.len() });
        }
        let n = u16::from_le_bytes([bytes[0], bytes[1]]) as usize;
        let need = 2 + 8 * n;
        if bytes.len() != need {
            return Err(CodecError::LengthMismatch { n, need, got: bytes.len() });
        }
        let domains = bytes[2..]
            .chunks_exact(8)
            .map(|c| FiniteDomain::from_mask(u64::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Ok(Store { domains })
    }
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.domains.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(values: &[u8]) -> FiniteDomain {
        values.iter().copied().collect()
    }

    #[test]
    fn status_trichotomy() {
        let sol = Store::new(vec![dom(&[2]), dom(&[0]), dom(&[3]), dom(&[1])]);
        assert_eq!(sol.status(), StoreStatus::Solution);
        let failed = Store::new(vec![dom(&[2]), FiniteDomain::EMPTY, dom(&[3])]);
        assert_eq!(failed.status(), StoreStatus::Failed);
        let open = Store::new(vec![dom(&[2]), dom(&[0, 1])]);
        assert_eq!(open.status(), StoreStatus::Open);
    }

    #[test]
    fn encode_single_variable() {
        let s = Store::new(vec![dom(&[0])]);
        assert_eq!(s.encode(), vec![0x01, 0x00, 0x01, 0, 0, 0, 0, 0, 0, 0]);
        let s = Store::new(vec![FiniteDomain::range(0, 63)]);
        assert_eq!(
            s.encode(),
            vec![0x01, 0x00, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF]
        );
    }

    #[test]
    fn decode_rejects_bad_lengths() {
        assert!(matches!(Store::decode(&[1]), Err(CodecError::Truncated { .. })));
        let mut bytes = Store::new(vec![dom(&[0]), dom(&[1])]).encode();
        bytes.pop();
        assert!(matches!(Store::decode(&bytes), Err(CodecError::LengthMismatch { .. })));
        bytes.push(0);
        bytes.push(0);
        assert!(matches!(Store::decode(&bytes), Err(CodecError::LengthMismatch { .. })));
    }

    #[test]
    fn roundtrip_five_variables() {
        let s = Store::new(vec![
            dom(&[0, 5, 63]),
            dom(&[7]),
            FiniteDomain::range(0, 63),
            FiniteDomain::EMPTY,
            dom(&[1, 2, 3]),
        ]);
        assert_eq!(Store::decode(&s.encode()).unwrap(), s);
    }
}
