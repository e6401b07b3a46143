//! Sample median and order statistics.
//!
//! The sample median of `x ∈ R^D` averages the `⌊(D+1)/2⌋`-th and
//! `⌈(D+1)/2⌉`-th smallest entries, which is the middle entry for odd `D`
//! and the mean of the two central entries for even `D`. Two routes are
//! provided: randomized quickselect (expected `O(D)`) and a full sort
//! (`O(D log D)` worst case). Both return the identical floating-point value.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ops::OpCounter;
use crate::rng::RngStream;

const DEFAULT_PIVOT_SEED: u64 = 0x6d65_6469_616e;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MedianMethod {
    Quickselect,
    FullSort,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianResult {
    pub value: f64,
    pub method: MedianMethod,
    pub ops: OpCounter,
}

fn validate(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::domain("median of an empty array"));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("median input contains NaN"));
    }
    Ok(())
}

/// Sample median using a fixed pivot stream for quickselect. The value does
/// not depend on the pivot sequence; only the operation counts do.
pub fn sample_median(x: &[f64], method: MedianMethod) -> Result<MedianResult> {
    let mut rng = RngStream::new(DEFAULT_PIVOT_SEED, x.len() as u64);
    sample_median_with_rng(x, method, &mut rng)
}

pub fn sample_median_with_rng(
    x: &[f64],
    method: MedianMethod,
    rng: &mut RngStream,
) -> Result<MedianResult> {
    validate(x)?;
    let mut ops = OpCounter::new();
    let mut scratch = x.to_vec();
    let value = match method {
        MedianMethod::Quickselect => median_by_select(&mut scratch, rng, &mut ops),
        MedianMethod::FullSort => {
            let mut n_cmp = 0u64;
            scratch.sort_unstable_by(|a, b| {
                n_cmp += 1;
                a.total_cmp(b)
            });
            ops.cmp(n_cmp);
            let v = median_of_sorted(&scratch);
            if scratch.len().is_multiple_of(2) {
                ops.add(1);
                ops.mul(1);
            }
            v
        }
    };
    Ok(MedianResult { value, method, ops })
}

/// Median of an already ascending-sorted, non-empty slice.
pub fn median_of_sorted(sorted: &[f64]) -> f64 {
    let d = sorted.len();
    debug_assert!(d > 0);
    if d % 2 == 1 {
        sorted[d / 2]
    } else {
        0.5 * (sorted[d / 2 - 1] + sorted[d / 2])
    }
}

fn median_by_select(v: &mut [f64], rng: &mut RngStream, ops: &mut OpCounter) -> f64 {
    let d = v.len();
    if d % 2 == 1 {
        return select_in_place(v, d / 2, rng, ops);
    }
    let lower = select_in_place(v, d / 2 - 1, rng, ops);
    // everything right of the selected slot is >= it
    let mut upper = v[d / 2];
    for &w in &v[d / 2 + 1..] {
        ops.cmp(1);
        if w < upper {
            upper = w;
        }
    }
    ops.add(1);
    ops.mul(1);
    0.5 * (lower + upper)
}

/// Three-way-partition quickselect with uniformly random pivots. On return,
/// `v[k]` holds the `(k+1)`-th smallest value, entries left of `k` are no
/// larger and entries right of `k` are no smaller.
fn select_in_place(v: &mut [f64], k: usize, rng: &mut RngStream, ops: &mut OpCounter) -> f64 {
    let (mut lo, mut hi) = (0usize, v.len());
    loop {
        if hi - lo == 1 {
            return v[lo];
        }
        let pivot = v[rng.random_range(lo..hi)];
        let (mut lt, mut i, mut gt) = (lo, lo, hi);
        while i < gt {
            ops.cmp(1);
            if v[i] < pivot {
                v.swap(lt, i);
                lt += 1;
                i += 1;
            } else {
                ops.cmp(1);
                if v[i] > pivot {
                    gt -= 1;
                    v.swap(i, gt);
                } else {
                    i += 1;
                }
            }
        }
        if k < lt {
            hi = lt;
        } else if k >= gt {
            lo = gt;
        } else {
            v[k] = pivot;
            return pivot;
        }
    }
}

/// `k`-th smallest entry (1-based).
pub fn kth_smallest(x: &[f64], k: usize) -> Result<f64> {
    let mut rng = RngStream::new(DEFAULT_PIVOT_SEED, x.len() as u64);
    let mut ops = OpCounter::new();
    kth_smallest_with_rng(x, k, &mut rng, &mut ops)
}

pub fn kth_smallest_with_rng(
    x: &[f64],
    k: usize,
    rng: &mut RngStream,
    ops: &mut OpCounter,
) -> Result<f64> {
    validate(x)?;
    if k == 0 || k > x.len() {
        return Err(Error::domain(format!(
            "order statistic k={k} out of range 1..={}",
            x.len()
        )));
    }
    let mut scratch = x.to_vec();
    Ok(select_in_place(&mut scratch, k - 1, rng, ops))
}
