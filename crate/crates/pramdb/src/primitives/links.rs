//! Predecessor and successor links.
//!
//! Round r looks at super-intervals of g^r cells, each split into g
//! sub-intervals of the previous round. A g×g table per super-interval
//! marks pairs (p, q) of sub-intervals with p non-empty; a third index k
//! between them clears the mark if sub-interval k is non-empty too. What
//! survives are the nearest non-empty predecessors, which unlinked cells
//! of q then adopt.

use crate::error::Result;
use crate::kernel::{Arr, Machine, Word};

use super::{ceil_tol, check_params, root_ceil};

fn links(m: &mut Machine, flags: Arr<bool>, epsilon: f64, rev: bool) -> Result<Arr<Option<u32>>> {
    check_params(1.0, epsilon)?;
    let n = flags.len();
    let rounds = ceil_tol(2.0 / epsilon);
    let g = root_ceil(n, rounds);
    let phys = move |j: usize| if rev { n - 1 - j } else { j };

    let link = m.alloc::<Option<u32>>(n);
    // Summary of a sub-interval: its last non-empty cell (logical index).
    let mut summ = m.alloc::<Option<u32>>(n);
    m.step(n, |j, r, o| {
        if r.get(flags, phys(j)) {
            o.put(summ, j, Some(j as u32));
        }
    })?;

    let mut sub = 1usize;
    for _ in 0..rounds {
        let ns = n.div_ceil(sub);
        let nsup = ns.div_ceil(g);
        let has = move |r: &crate::kernel::Mem, s: usize| s < ns && r.get(summ, s).is_some();

        let table = m.alloc::<bool>(nsup * g * g);
        m.step(nsup * g * g, |x, r, o| {
            let (s, p, q) = (x / (g * g), x / g % g, x % g);
            if p < q && has(r, s * g + p) && s * g + q < ns {
                o.put(table, x, true);
            }
        })?;
        m.step(nsup * g * g * g, |x, r, o| {
            let (s, p, k, q) = (x / (g * g * g), x / (g * g) % g, x / g % g, x % g);
            if p < k && k < q && has(r, s * g + k) {
                o.put(table, (s * g + p) * g + q, false);
            }
        })?;
        let pred_sub = m.alloc::<Option<u32>>(ns);
        m.step(nsup * g * g, |x, r, o| {
            if r.get(table, x) {
                let (s, p, q) = (x / (g * g), x / g % g, x % g);
                o.put(pred_sub, s * g + q, Some((s * g + p) as u32));
            }
        })?;
        m.step(n, |j, r, o| {
            if r.get(link, phys(j)).is_some() {
                return;
            }
            if let Some(p) = r.get(pred_sub, j / sub) {
                if let Some(i) = r.get(summ, p as usize) {
                    o.put(link, phys(j), Some(phys(i as usize) as u32));
                }
            }
        })?;

        // Summary of each super-interval: the last sub-interval with one.
        let last = m.alloc::<bool>(nsup * g);
        m.step(nsup * g, |x, r, o| {
            if has(r, x) {
                o.put(last, x, true);
            }
        })?;
        m.step(nsup * g * g, |x, r, o| {
            let (s, p, q) = (x / (g * g), x / g % g, x % g);
            if p < q && has(r, s * g + q) {
                o.put(last, s * g + p, false);
            }
        })?;
        let next = m.alloc::<Option<u32>>(nsup);
        m.step(nsup * g, |x, r, o| {
            if x < ns && r.get(last, x) {
                o.put(next, x / g, r.get(summ, x));
            }
        })?;
        summ = next;
        sub = sub.saturating_mul(g);
    }
    Ok(link)
}

/// `B[j]` = largest `i < j` with a set flag.
pub fn predecessor_links(m: &mut Machine, flags: Arr<bool>, epsilon: f64) -> Result<Arr<Option<u32>>> {
    m.phase("links", |m| links(m, flags, epsilon, false))
}

/// `B[j]` = smallest `i > j` with a set flag.
pub fn successor_links(m: &mut Machine, flags: Arr<bool>, epsilon: f64) -> Result<Arr<Option<u32>>> {
    m.phase("links", |m| links(m, flags, epsilon, true))
}

fn flags_of<T: Word>(m: &mut Machine, a: Arr<Option<T>>) -> Result<Arr<bool>> {
    let f = m.alloc::<bool>(a.len());
    m.step(a.len(), |i, r, o| {
        if r.at(a, i).is_some_and(|x| x.is_some()) {
            o.put(f, i, true)
        }
    })?;
    Ok(f)
}

pub fn pred_links_of<T: Word>(m: &mut Machine, a: Arr<Option<T>>, epsilon: f64) -> Result<Arr<Option<u32>>> {
    let f = flags_of(m, a)?;
    predecessor_links(m, f, epsilon)
}

pub fn succ_links_of<T: Word>(m: &mut Machine, a: Arr<Option<T>>, epsilon: f64) -> Result<Arr<Option<u32>>> {
    let f = flags_of(m, a)?;
    successor_links(m, f, epsilon)
}
