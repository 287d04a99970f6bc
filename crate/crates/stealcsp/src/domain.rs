//! Bit-packed finite domains over the values `0..=63`.

/// Largest value a domain can hold.
pub const MAX_VALUE: u8 = 63;

/// A set of integer values in `0..=63`, stored as a 64-bit mask with bit `v`
/// set iff value `v` is in the domain.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FiniteDomain(u64);

impl FiniteDomain {
    pub const EMPTY: FiniteDomain = FiniteDomain(0);

    #[inline]
    pub fn from_mask(mask: u64) -> FiniteDomain {
        FiniteDomain(mask)
    }

    #[inline]
    pub fn mask(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn singleton(v: u8) -> FiniteDomain {
        debug_assert!(v <= MAX_VALUE);
        FiniteDomain(1 << v)
    }

    /// Domain holding every value in `lo..=hi`; empty when `lo > hi`.
    #[inline]
    pub fn range(lo: u8, hi: u8) -> FiniteDomain {
        if lo > hi || lo > MAX_VALUE {
            return FiniteDomain::EMPTY;
        }
        let hi = hi.min(MAX_VALUE);
        let width = hi - lo + 1;
        let bits = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        FiniteDomain(bits << lo)
    }

    /// Clamp to `lo..=hi` given signed bounds, treating an inverted or fully
    /// out-of-range interval as empty.
    #[inline]
    pub fn clamp(self, lo: i32, hi: i32) -> FiniteDomain {
        if lo > hi || hi < 0 || lo > MAX_VALUE as i32 {
            return FiniteDomain::EMPTY;
        }
        FiniteDomain(self.0 & FiniteDomain::range(lo.max(0) as u8, hi.min(63) as u8).0)
    }

    #[inline]
    pub fn contains(self, v: u8) -> bool {
        v <= MAX_VALUE && self.0 & (1 << v) != 0
    }

    #[inline]
    pub fn size(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn is_singleton(self) -> bool {
        self.0.count_ones() == 1
    }

    /// Lowest value, or `None` on the empty domain.
    #[inline]
    pub fn min(self) -> Option<u8> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as u8)
        }
    }

    /// Highest value, or `None` on the empty domain.
    #[inline]
    pub fn max(self) -> Option<u8> {
        if self.0 == 0 {
            None
        } else {
            Some(63 - self.0.leading_zeros() as u8)
        }
    }

    /// Singleton `{v}`. The value must be present; a missing value is a
    /// programming error, not a search failure.
    #[inline]
    pub fn assign(self, v: u8) -> FiniteDomain {
        assert!(self.contains(v), "assign: value {v} not in domain");
        FiniteDomain::singleton(v)
    }

    /// `self` without `v`; may be empty, which signals failure to the caller.
    #[inline]
    pub fn remove(self, v: u8) -> FiniteDomain {
        if v > MAX_VALUE {
            return self;
        }
        FiniteDomain(self.0 & !(1 << v))
    }

    #[inline]
    pub fn intersect(self, other: FiniteDomain) -> FiniteDomain {
        FiniteDomain(self.0 & other.0)
    }

    #[inline]
    pub fn is_subset_of(self, other: FiniteDomain) -> bool {
        self.0 & !other.0 == 0
    }

    /// The set `{ v + delta : v in self }`, dropping values that leave
    /// `0..=63`.
    #[inline]
    pub fn shift(self, delta: i32) -> FiniteDomain {
        debug_assert!(delta.unsigned_abs() < 64);
        if delta >= 0 {
            FiniteDomain(self.0 << delta)
        } else {
            FiniteDomain(self.0 >> -delta)
        }
    }

    /// Values strictly below `v`.
    #[inline]
    pub fn below(self, v: u8) -> FiniteDomain {
        if v == 0 {
            return FiniteDomain::EMPTY;
        }
        FiniteDomain(self.0 & ((1u64 << v) - 1))
    }

    /// Values strictly above `v`.
    #[inline]
    pub fn above(self, v: u8) -> FiniteDomain {
        if v >= MAX_VALUE {
            return FiniteDomain::EMPTY;
        }
        FiniteDomain(self.0 & !((1u64 << (v + 1)) - 1))
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let v = rest.trailing_zeros() as u8;
                rest &= rest - 1;
                Some(v)
            }
        })
    }
}

impl FromIterator<u8> for FiniteDomain {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> FiniteDomain {
        let mut mask = 0u64;
        for v in iter {
            debug_assert!(v <= MAX_VALUE);
            mask |= 1 << v;
        }
        FiniteDomain(mask)
    }
}

impl std::fmt::Debug for FiniteDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(values: &[u8]) -> FiniteDomain {
        values.iter().copied().collect()
    }

    #[test]
    fn assign_yields_singleton() {
        assert_eq!(dom(&[1, 2, 3]).assign(2), dom(&[2]));
        assert_eq!(FiniteDomain::range(0, 63).assign(63), dom(&[63]));
        assert_eq!(dom(&[5]).assign(5), dom(&[5]));
    }

    #[test]
    #[should_panic(expected = "not in domain")]
    fn assign_missing_value_panics() {
        dom(&[1, 3]).assign(2);
    }

    #[test]
    fn remove_is_set_difference() {
        assert_eq!(dom(&[1, 2, 3]).remove(2), dom(&[1, 3]));
        assert!(dom(&[5]).remove(5).is_empty());
        assert_eq!(dom(&[1, 3]).remove(2), dom(&[1, 3]));
    }

    #[test]
    fn size_min_max() {
        let d = dom(&[3, 17, 40]);
        assert_eq!(d.size(), 3);
        assert_eq!(d.min(), Some(3));
        assert_eq!(d.max(), Some(40));
        assert_eq!(FiniteDomain::EMPTY.min(), None);
        assert_eq!(FiniteDomain::range(0, 63).size(), 64);
    }

    #[test]
    fn shift_drops_out_of_range() {
        assert_eq!(dom(&[0, 62, 63]).shift(1), dom(&[1, 63]));
        assert_eq!(dom(&[0, 1, 5]).shift(-1), dom(&[0, 4]));
    }

    #[test]
    fn below_above() {
        let d = dom(&[0, 3, 5, 63]);
        assert_eq!(d.below(5), dom(&[0, 3]));
        assert_eq!(d.above(3), dom(&[5, 63]));
        assert_eq!(d.above(63), FiniteDomain::EMPTY);
        assert_eq!(d.below(0), FiniteDomain::EMPTY);
    }

    #[test]
    fn iter_ascending() {
        assert_eq!(dom(&[9, 2, 44]).iter().collect::<Vec<_>>(), vec![2, 9, 44]);
    }
}
