//! Order-preserving approximate compaction.

use crate::error::Result;
use crate::kernel::{Arr, Machine, Word};

use super::prefix::{approx_prefix_sums, segmented_prefix_sums};

/// Prefix sums of a 0/1 indicator and the resulting output length. A
/// non-empty cell `i` moves to position `B[i] - 1`.
pub fn compact_plan(m: &mut Machine, ind: Arr<u64>, lambda: f64, epsilon: f64) -> Result<(Arr<u64>, usize)> {
    let b = approx_prefix_sums(m, ind, lambda, epsilon)?;
    let len = if b.is_empty() { 0 } else { m.peek(b, b.len() - 1) as usize };
    Ok((b, len))
}

/// Segment-local positions: within every segment, cell `i` goes to local
/// position `B[i] - 1`.
pub(crate) fn segmented_compact_plan(
    m: &mut Machine,
    ind: Arr<u64>,
    start: Arr<Option<u32>>,
    len: Arr<u32>,
    maxlen: usize,
    lambda: f64,
    epsilon: f64,
) -> Result<Arr<u64>> {
    segmented_prefix_sums(m, ind, start, len, maxlen, lambda, epsilon)
}

#[derive(Clone, Copy, Debug)]
pub struct Compacted<T> {
    pub out: Arr<Option<T>>,
    /// Output cell → input index.
    pub from: Arr<Option<u32>>,
    /// Input cell → output index.
    pub to: Arr<Option<u32>>,
}

pub fn approx_compact<T: Word + Copy>(m: &mut Machine, a: Arr<Option<T>>, lambda: f64, epsilon: f64) -> Result<Compacted<T>> {
    m.phase("compact", |m| {
        let n = a.len();
        let ind = m.alloc::<u64>(n);
        m.step(n, |i, r, o| o.put(ind, i, r.get(a, i).is_some() as u64))?;
        let (b, len) = compact_plan(m, ind, lambda, epsilon)?;
        let out = m.alloc::<Option<T>>(len);
        let from = m.alloc::<Option<u32>>(len);
        let to = m.alloc::<Option<u32>>(n);
        m.step(n, |i, r, o| {
            if let Some(v) = r.get(a, i) {
                let p = r.get(b, i) as usize - 1;
                o.put(out, p, Some(v));
                o.put(from, p, Some(i as u32));
                o.put(to, i, Some(p as u32));
            }
        })?;
        Ok(Compacted { out, from, to })
    })
}
