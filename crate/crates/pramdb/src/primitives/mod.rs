//! Constant-depth array primitives.

mod compact;
mod links;
mod prefix;
mod schedule;
mod sort;

pub use compact::{approx_compact, compact_plan, Compacted};
pub use links::{predecessor_links, pred_links_of, successor_links, succ_links_of};
pub use prefix::{approx_prefix_sums, build_summation_tree, make_consistent, prefix_from_tree, SummationTree};
pub use schedule::{schedule_tasks, Schedule};
pub use sort::{padded_sort, padded_sort_wide};

pub(crate) use compact::segmented_compact_plan;

use crate::error::{param, Result};

pub(crate) fn check_params(lambda: f64, epsilon: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(param(format!("lambda must be positive, got {lambda}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(param(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// `ceil(x)`, forgiving float noise just above an integer.
pub(crate) fn ceil_tol(x: f64) -> u32 {
    ((x - 1e-9).ceil() as u32).max(1)
}

/// Smallest `b >= 2` with `b^k >= n`.
pub(crate) fn root_ceil(n: usize, k: u32) -> usize {
    let mut b = ((n as f64).powf(1.0 / k as f64).floor() as usize).max(2);
    while b > 2 && (b - 1).checked_pow(k).is_none_or(|x| x >= n) {
        b -= 1;
    }
    while b.checked_pow(k).is_some_and(|x| x < n) {
        b += 1;
    }
    b
}
