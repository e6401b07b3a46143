use std::ops::AddAssign;

/// Per-category tally of scalar operations performed by an estimator call.
///
/// The categories are kept separate because there is no single agreed
/// definition of "one operation"; any weighted total can be rebuilt from
/// the fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub real_adds: u64,
    pub real_mults: u64,
    pub comparisons: u64,
    pub divisions: u64,
    pub exponentials: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }

    pub fn total(&self) -> u64 {
        self.real_adds + self.real_mults + self.comparisons + self.divisions + self.exponentials
    }

    #[inline]
    pub fn add(&mut self, n: u64) {
        self.real_adds += n;
    }

    #[inline]
    pub fn mul(&mut self, n: u64) {
        self.real_mults += n;
    }

    #[inline]
    pub fn cmp(&mut self, n: u64) {
        self.comparisons += n;
    }

    #[inline]
    pub fn div(&mut self, n: u64) {
        self.divisions += n;
    }

    #[inline]
    pub fn exp(&mut self, n: u64) {
        self.exponentials += n;
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.real_adds += rhs.real_adds;
        self.real_mults += rhs.real_mults;
        self.comparisons += rhs.comparisons;
        self.divisions += rhs.divisions;
        self.exponentials += rhs.exponentials;
    }
}
