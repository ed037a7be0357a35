//! Padded sorting of small integers.
//!
//! Values are made distinct by `a_i (N+1) + i`. Each round splits a value
//! into a high part (at most the table size) and a low part, marks the high
//! parts in a table, compacts the table and replaces every high part by its
//! rank. The range shrinks by about `N^δ` per round. Finally every value
//! marks its own cell in a table of the remaining range, and compacting that
//! table yields the sorted order.

use crate::error::{param, Error, Result};
use crate::kernel::{Arr, Machine};

use super::compact::compact_plan;
use super::{ceil_tol, check_params};

/// Sorts the active entries of `a`, whose values lie in `[0, N^c)` with
/// `N = max(n_param, |a|, 2)`. Returns original indices in nondecreasing
/// value order, ties by index, in an array of at most `(1+λ)` times the
/// number of active entries.
pub fn padded_sort_wide(
    m: &mut Machine,
    a: Arr<u128>,
    active: Option<Arr<bool>>,
    n_param: usize,
    c: u32,
    lambda: f64,
    epsilon: f64,
) -> Result<Arr<Option<u32>>> {
    check_params(lambda, epsilon)?;
    if c == 0 {
        return Err(param("c must be positive"));
    }
    m.phase("padded_sort", |m| {
        let len = a.len();
        let nn = n_param.max(len).max(2) as u128;
        let bound = nn.checked_pow(c).ok_or_else(|| param("value range exceeds 128 bits"))?;
        let mut range = bound.checked_mul(nn + 1).ok_or_else(|| param("value range exceeds 128 bits"))?;
        let delta = epsilon / 3.0;
        let t = ((nn as f64).powf(delta).ceil() as u128).max(2);
        let table = (nn * t) as usize;
        let rounds = ceil_tol(c as f64 / delta) + 1;
        let lambda_r = (1.0 + lambda).powf(1.0 / rounds as f64) - 1.0;
        let is_active = move |r: &crate::kernel::Mem, i: usize| active.is_none_or(|f| r.get(f, i));

        let mut cur = m.alloc::<u128>(len);
        m.step(len, |i, r, o| {
            if !is_active(r, i) {
                return;
            }
            let v = r.get(a, i);
            if v >= bound {
                o.fail(Error::Param(format!("value {v} outside [0, {bound})")));
                return;
            }
            o.put(cur, i, v * (nn + 1) + i as u128);
        })?;

        for _ in 0..rounds {
            let w = range.div_ceil(table as u128).max(1);
            let mark = m.alloc::<u64>(table);
            m.step(len, |i, r, o| {
                if is_active(r, i) {
                    o.put(mark, (r.get(cur, i) / w) as usize, 1);
                }
            })?;
            let (rank, kept) = compact_plan(m, mark, lambda_r, delta)?;
            let next = m.alloc::<u128>(len);
            m.step(len, |i, r, o| {
                if is_active(r, i) {
                    let v = r.get(cur, i);
                    let hi = r.get(rank, (v / w) as usize) as u128 - 1;
                    o.put(next, i, hi * w + v % w);
                }
            })?;
            range = (kept as u128).max(1) * w;
            cur = next;
        }

        let size = usize::try_from(range).map_err(|_| param("final range too large"))?;
        let mark = m.alloc::<u64>(size);
        let who = m.alloc::<Option<u32>>(size);
        m.step(len, |i, r, o| {
            if is_active(r, i) {
                let v = r.get(cur, i) as usize;
                o.put(mark, v, 1);
                o.put(who, v, Some(i as u32));
            }
        })?;
        let (pos, total) = compact_plan(m, mark, lambda, delta)?;
        let out = m.alloc::<Option<u32>>(total);
        m.step(size, |x, r, o| {
            if let Some(i) = r.get(who, x) {
                o.put(out, r.get(pos, x) as usize - 1, Some(i));
            }
        })?;
        Ok(out)
    })
}

/// Padded sort of naturals in `[0, n^c)`; inhabited cells carry
/// `(value, original index)`.
pub fn padded_sort(m: &mut Machine, a: Arr<u64>, lambda: f64, epsilon: f64, c: u32) -> Result<Arr<Option<(u64, u32)>>> {
    let wide = m.alloc::<u128>(a.len());
    m.step(a.len(), |i, r, o| o.put(wide, i, r.get(a, i) as u128))?;
    let idx = padded_sort_wide(m, wide, None, a.len(), c, lambda, epsilon)?;
    let out = m.alloc::<Option<(u64, u32)>>(idx.len());
    m.step(idx.len(), |j, r, o| {
        if let Some(i) = r.get(idx, j) {
            o.put(out, j, Some((r.get(a, i as usize), i)));
        }
    })?;
    Ok(out)
}
