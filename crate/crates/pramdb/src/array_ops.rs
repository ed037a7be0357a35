//! Basic operations on relation arrays: compaction, sorting, full links,
//! array hash tables, tuple search and deduplication.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::kernel::{Arr, Machine, Mem, WriteMode};
use crate::primitives::{compact_plan, padded_sort_wide, predecessor_links, successor_links};
use crate::primitives::{ceil_tol, check_params, root_ceil};
use crate::relstore::{Cell, RelArray, Slot, Tup, Values};

/// For every query `q` with a range `(base, len)`, the largest `k` in the
/// range whose predicate holds, assuming the predicate holds on a prefix of
/// the range. `f`-ary search in `⌈1/ε⌉` rounds with `f^rounds > maxlen`.
/// Returns `L` per query: 0 if no position qualifies, else `k - base + 1`.
pub(crate) fn monotone_search<R, P>(
    m: &mut Machine,
    nq: usize,
    maxlen: usize,
    epsilon: f64,
    range: R,
    pred: P,
) -> Result<Arr<u64>>
where
    R: Fn(&Mem, usize) -> Option<(usize, usize)>,
    P: Fn(&Mem, usize, usize) -> bool,
{
    check_params(1.0, epsilon)?;
    let rounds = ceil_tol(1.0 / epsilon);
    let f = root_ceil(maxlen + 1, rounds);
    m.phase("search", |m| {
        let mut lo = m.alloc::<u64>(nq);
        let mut hi = m.alloc::<u64>(nq);
        m.step(nq, |q, r, o| {
            if let Some((_, len)) = range(r, q) {
                o.put(hi, q, len as u64 + 1);
            }
        })?;
        for _ in 0..rounds {
            let (nlo, nhi) = (m.alloc::<u64>(nq), m.alloc::<u64>(nq));
            m.step(nq * f, |x, r, o| {
                let (q, l) = (x / f, (x % f) as u64);
                let Some((base, _)) = range(r, q) else { return };
                let (lv, hv) = (r.get(lo, q), r.get(hi, q));
                let w = hv - lv;
                if w <= 1 {
                    if l == 0 {
                        o.put(nlo, q, lv);
                        o.put(nhi, q, hv);
                    }
                    return;
                }
                let s = w.div_ceil(f as u64);
                let a = lv + l * s;
                if a >= hv {
                    return;
                }
                let b = (a + s).min(hv);
                // Relative position p stands for absolute index base + p - 1.
                let fa = a == lv || pred(r, q, base + a as usize - 1);
                let fb = b != hv && pred(r, q, base + b as usize - 1);
                if fa && !fb {
                    o.put(nlo, q, a);
                    o.put(nhi, q, b);
                }
            })?;
            lo = nlo;
            hi = nhi;
        }
        Ok(lo)
    })
}

/// Largest index with a tuple `≤ key` and smallest with a tuple `≥ key`, per
/// query, over the inhabited cells of an ordered, fully linked array.
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub le: Arr<Option<u32>>,
    pub ge: Arr<Option<u32>>,
}

pub(crate) fn bounds_by_key<K>(
    m: &mut Machine,
    b: &RelArray,
    pb: &[usize],
    nq: usize,
    vals: Values,
    epsilon: f64,
    key: K,
) -> Result<Bounds>
where
    K: Fn(&Mem, usize) -> Option<Tup>,
{
    let arr = b.arr;
    let n = arr.len();
    let range = |r: &Mem, q: usize| key(r, q).map(|_| (0, n));
    let cmp_at = |r: &Mem, q: usize, k: usize| -> Option<Ordering> {
        let c = r.get(arr, k);
        let key = key(r, q)?;
        Some(vals.cmp_tup(c.t.project(pb).as_slice(), key.as_slice()))
    };
    let le_raw = monotone_search(m, nq, n, epsilon, range, |r, q, k| {
        let c = r.get(arr, k);
        let k2 = if c.live { Some(k as u32) } else { c.link(Slot::Succ) };
        k2.is_some_and(|k2| cmp_at(r, q, k2 as usize).is_some_and(|o| o.is_le()))
    })?;
    let ge_raw = monotone_search(m, nq, n, epsilon, range, |r, q, k| {
        let c = r.get(arr, k);
        let k2 = if c.live { Some(k as u32) } else { c.link(Slot::Pred) };
        !k2.is_some_and(|k2| cmp_at(r, q, k2 as usize).is_some_and(|o| o.is_ge()))
    })?;
    let le = m.alloc::<Option<u32>>(nq);
    let ge = m.alloc::<Option<u32>>(nq);
    m.step(nq, |q, r, o| {
        if key(r, q).is_none() {
            return;
        }
        let l = r.get(le_raw, q);
        if l > 0 {
            o.put(le, q, Some(l as u32 - 1));
        }
        let g = r.get(ge_raw, q) as usize;
        if g < n {
            o.put(ge, q, Some(g as u32));
        }
    })?;
    Ok(Bounds { le, ge })
}

fn need_keys(a: &RelArray) -> Result<u64> {
    a.vmax()
}

/// Adds predecessor and successor links to every cell.
pub fn link_rel(m: &mut Machine, a: &mut RelArray, epsilon: f64) -> Result<()> {
    m.phase("link", |m| {
        let arr = a.arr;
        let n = arr.len();
        let live = m.alloc::<bool>(n);
        m.step(n, |i, r, o| o.put(live, i, r.get(arr, i).live))?;
        let pred = predecessor_links(m, live, epsilon)?;
        let succ = successor_links(m, live, epsilon)?;
        m.step(n, |i, r, o| {
            let c = r.get(arr, i).with(Slot::Pred, r.get(pred, i)).with(Slot::Succ, r.get(succ, i));
            o.put(arr, i, c);
        })?;
        Ok(())
    })?;
    a.linked = true;
    Ok(())
}

/// Order-preserving compaction; the output cell links to its source and
/// the source cell to its image (partner slots).
pub fn compact_rel(m: &mut Machine, a: &RelArray, lambda: f64, epsilon: f64) -> Result<RelArray> {
    m.phase("compact_rel", |m| {
        let arr = a.arr;
        let n = arr.len();
        let ind = m.alloc::<u64>(n);
        m.step(n, |i, r, o| o.put(ind, i, r.get(arr, i).live as u64))?;
        let (pos, len) = compact_plan(m, ind, lambda, epsilon)?;
        let out = m.alloc::<Cell>(len);
        m.step(n, |i, r, o| {
            let c = r.get(arr, i);
            if c.live {
                let p = r.get(pos, i) as usize - 1;
                o.put(out, p, Cell::new(c.t).with(Slot::Partner, Some(i as u32)));
                o.put(arr, i, c.with(Slot::Partner, Some(p as u32)));
            }
        })?;
        Ok(RelArray { arr: out, linked: false, ..a.clone() })
    })
}

/// Padded sort by `x` followed by the remaining attributes (dictionary
/// setting): the characteristic number of a tuple is its digit string in
/// base `vmax + 1`. The result is fully ordered; partner slots link sorted
/// cells and their sources both ways.
pub fn sort_rel(m: &mut Machine, a: &RelArray, x: &[String], lambda: f64, epsilon: f64) -> Result<RelArray> {
    let vmax = need_keys(a)?;
    let mut order: Vec<String> = x.to_vec();
    order.extend(a.attrs.iter().filter(|t| !x.contains(t)).cloned());
    let pos = a.positions(&order)?;
    m.phase("sort_rel", |m| {
        let arr = a.arr;
        let n = arr.len();
        let base = vmax as u128 + 1;
        let k = pos.len().max(1) as u32;
        let chars = m.alloc::<u128>(n);
        let active = m.alloc::<bool>(n);
        m.step(n, |i, r, o| {
            let c = r.get(arr, i);
            if c.live {
                let v = pos.iter().fold(0u128, |acc, &p| acc * base + c.t.get(p) as u128);
                o.put(chars, i, v);
                o.put(active, i, true);
            }
        })?;
        let n_param = n.max(base as usize);
        let idx = padded_sort_wide(m, chars, Some(active), n_param, k, lambda, epsilon)?;
        let out = m.alloc::<Cell>(idx.len());
        m.step(idx.len(), |j, r, o| {
            if let Some(i) = r.get(idx, j) {
                let c = r.get(arr, i as usize);
                o.put(out, j, Cell::new(c.t).with(Slot::Partner, Some(i)));
                o.put(arr, i as usize, c.with(Slot::Partner, Some(j as u32)));
            }
        })?;
        Ok(RelArray { arr: out, order, linked: false, ..a.clone() })
    })
}

/// Array hash table over processors `0..n`: equal tuples get equal hashes
/// in `[0, n)`, different tuples different ones. Every value is split into
/// base-β digits with `β ≈ (vmax+1)^ε`; each digit is one write/read-back
/// round on an `n × β` grid under Arbitrary resolution.
pub(crate) fn hash_cells<F>(m: &mut Machine, n: usize, arity: usize, vmax: u64, epsilon: f64, tup: F) -> Result<Arr<u32>>
where
    F: Fn(&Mem, usize) -> Option<Tup>,
{
    if m.mode() == WriteMode::Common {
        return Err(Error::Setting("array hash tables need Arbitrary or Priority writes".into()));
    }
    check_params(1.0, epsilon)?;
    let beta = (((vmax as f64 + 1.0).powf(epsilon).ceil() as u64).max(2)).min(vmax.max(1) + 1);
    let mut digits = 1u32;
    while beta.checked_pow(digits).is_some_and(|p| p <= vmax) {
        digits += 1;
    }
    m.phase("hash", |m| {
        let h = m.alloc::<u32>(n);
        let grid = m.alloc::<u32>(n * beta as usize);
        for j in 0..arity {
            for e in (0..digits).rev() {
                let p = beta.pow(e);
                let cell = |r: &Mem, i: usize| -> Option<usize> {
                    let t = tup(r, i)?;
                    Some(r.get(h, i) as usize * beta as usize + (t.get(j) / p % beta) as usize)
                };
                m.step(n, |i, r, o| {
                    if let Some(c) = cell(r, i) {
                        o.put(grid, c, i as u32);
                    }
                })?;
                m.step(n, |i, r, o| {
                    if let Some(c) = cell(r, i) {
                        o.put(h, i, r.get(grid, c));
                    }
                })?;
            }
        }
        m.free(grid);
        Ok(h)
    })
}

#[derive(Clone, Copy, Debug)]
pub struct HashTable {
    /// Hash per cell in `[0, |A|)`; meaningful for inhabited cells.
    pub hash: Arr<u32>,
}

pub fn hash_table(m: &mut Machine, a: &RelArray, epsilon: f64) -> Result<HashTable> {
    let vmax = need_keys(a)?;
    let arr = a.arr;
    let hash = hash_cells(m, arr.len(), a.arity(), vmax, epsilon, |r, i| {
        let c = r.get(arr, i);
        c.live.then_some(c.t)
    })?;
    Ok(HashTable { hash })
}

/// Sets the partner slot of every inhabited cell of `a` to a cell of `b`
/// agreeing on `x`, or clears it if there is none (dictionary setting).
pub fn search_tuples_dict(m: &mut Machine, a: &RelArray, b: &RelArray, x: &[String], epsilon: f64) -> Result<()> {
    let vmax = need_keys(a)?.max(need_keys(b)?);
    let (pa, pb) = (a.positions(x)?, b.positions(x)?);
    let (aa, ba) = (a.arr, b.arr);
    let (na, nb) = (aa.len(), ba.len());
    m.phase("search_dict", |m| {
        let h = hash_cells(m, na + nb, x.len(), vmax, epsilon, |r, i| {
            let (c, p) = if i < na { (r.get(aa, i), &pa) } else { (r.get(ba, i - na), &pb) };
            c.live.then(|| c.t.project(p))
        })?;
        let post = m.alloc::<Option<u32>>(na + nb);
        m.step(nb, |q, r, o| {
            if r.get(ba, q).live {
                o.put(post, r.get(h, na + q) as usize, Some(q as u32));
            }
        })?;
        m.step(na, |i, r, o| {
            let c = r.get(aa, i);
            if c.live {
                o.put(aa, i, c.with(Slot::Partner, r.get(post, r.get(h, i) as usize)));
            }
        })?;
        Ok(())
    })
}

/// Deduplication by hashing (dictionary setting): one representative per
/// distinct tuple stays inhabited; every inhabited input cell gets a rep
/// link (representatives link to themselves).
pub fn dedup_dict(m: &mut Machine, a: &mut RelArray, epsilon: f64) -> Result<()> {
    let vmax = need_keys(a)?;
    let arr = a.arr;
    let n = arr.len();
    m.phase("dedup_dict", |m| {
        let h = hash_cells(m, n, a.arity(), vmax, epsilon, |r, i| {
            let c = r.get(arr, i);
            c.live.then_some(c.t)
        })?;
        let post = m.alloc::<u32>(n);
        m.step(n, |i, r, o| {
            if r.get(arr, i).live {
                o.put(post, r.get(h, i) as usize, i as u32);
            }
        })?;
        m.step(n, |i, r, o| {
            let c = r.get(arr, i);
            if c.live {
                let j = r.get(post, r.get(h, i) as usize);
                let c = c.with(Slot::Rep, Some(j));
                o.put(arr, i, if j == i as u32 { c } else { c.dead() });
            }
        })?;
        Ok(())
    })?;
    a.linked = false;
    a.concise = true;
    Ok(())
}

/// Representatives of runs of equal keys (projected on `p`) in an array
/// ordered by them: returns (rep flag, pred links over reps, succ links
/// over reps).
fn runs(
    m: &mut Machine,
    arr: Arr<Cell>,
    p: &[usize],
    vals: Values,
    epsilon: f64,
) -> Result<(Arr<bool>, Arr<Option<u32>>, Arr<Option<u32>>)> {
    let n = arr.len();
    let live = m.alloc::<bool>(n);
    m.step(n, |i, r, o| o.put(live, i, r.get(arr, i).live))?;
    let pred = predecessor_links(m, live, epsilon)?;
    let rep = m.alloc::<bool>(n);
    m.step(n, |i, r, o| {
        let c = r.get(arr, i);
        if !c.live {
            return;
        }
        let first = match r.get(pred, i) {
            None => true,
            Some(j) => !vals.eq_tup(r.get(arr, j as usize).t.project(p).as_slice(), c.t.project(p).as_slice()),
        };
        if first {
            o.put(rep, i, true);
        }
    })?;
    let rp = predecessor_links(m, rep, epsilon)?;
    let rs = successor_links(m, rep, epsilon)?;
    Ok((rep, rp, rs))
}

/// Deduplication of a fully ordered array via predecessor links. The array
/// stays fully linked over the remaining representatives.
pub fn dedup_ordered(m: &mut Machine, a: &mut RelArray, vals: Values, epsilon: f64) -> Result<()> {
    vals.require_order()?;
    if !a.fully_ordered() {
        return Err(Error::Precondition(format!("dedup_ordered needs a fully ordered array, order is {:?}", a.order)));
    }
    let arr = a.arr;
    let all: Vec<usize> = (0..a.arity()).collect();
    m.phase("dedup_ordered", |m| {
        let (rep, rp, rs) = runs(m, arr, &all, vals, epsilon)?;
        m.step(arr.len(), |i, r, o| {
            let c = r.get(arr, i).with(Slot::Pred, r.get(rp, i)).with(Slot::Succ, r.get(rs, i));
            let c = match (c.live, r.get(rep, i)) {
                (true, true) => c.with(Slot::Rep, Some(i as u32)),
                (true, false) => c.with(Slot::Rep, r.get(rp, i)).dead(),
                _ => c,
            };
            o.put(arr, i, c);
        })?;
        Ok(())
    })?;
    a.linked = true;
    a.concise = true;
    Ok(())
}

fn order_prefix(b: &RelArray, x: &[String], what: &str) -> Result<Vec<String>> {
    b.ordered_prefix(x).ok_or_else(|| {
        Error::Precondition(format!("{what}: array ordered by {:?} does not start with {:?}", b.order, x))
    })
}

/// Boundary search of every inhabited tuple of `a` (projected on `x`) in
/// `b`, which must be fully ordered starting with `x` and fully linked.
pub fn search_ordered_into_b(
    m: &mut Machine,
    a: &RelArray,
    b: &RelArray,
    x: &[String],
    vals: Values,
    epsilon: f64,
) -> Result<Bounds> {
    vals.require_order()?;
    let p = order_prefix(b, x, "search_ordered_into_b")?;
    if !b.fully_ordered() || !b.linked {
        return Err(Error::Precondition("search_ordered_into_b needs a fully ordered, fully linked array".into()));
    }
    let (pa, pb) = (a.positions(&p)?, b.positions(&p)?);
    let aa = a.arr;
    m.phase("search_into_b", |m| {
        bounds_by_key(m, b, &pb, aa.len(), vals, epsilon, |r, q| {
            let c = r.get(aa, q);
            c.live.then(|| c.t.project(&pa))
        })
    })
}

/// Partner links for the inhabited cells of `a`, which must be ordered
/// starting with `x`: `a` is deduplicated on `x` virtually, every tuple of
/// `b` finds the smallest representative `≥` itself, and matches are
/// posted back to the representatives' runs.
pub fn search_ordered_into_a(
    m: &mut Machine,
    a: &RelArray,
    b: &RelArray,
    x: &[String],
    vals: Values,
    epsilon: f64,
) -> Result<()> {
    vals.require_order()?;
    let p = order_prefix(a, x, "search_ordered_into_a")?;
    let (pa, pb) = (a.positions(&p)?, b.positions(&p)?);
    let (aa, ba) = (a.arr, b.arr);
    let (na, nb) = (aa.len(), ba.len());
    m.phase("search_into_a", |m| {
        let (rep, rp, _) = runs(m, aa, &pa, vals, epsilon)?;
        let own_rep = move |r: &Mem, k: usize| if r.get(rep, k) { Some(k as u32) } else { r.get(rp, k) };
        let key = |r: &Mem, q: usize| {
            let c = r.get(ba, q);
            c.live.then(|| c.t.project(&pb))
        };
        let ge_raw = monotone_search(m, nb, na, epsilon, |r, q| key(r, q).map(|_| (0, na)), |r, q, k| {
            let Some(k2) = own_rep(r, k) else { return true };
            let Some(key) = key(r, q) else { return true };
            vals.cmp_tup(r.get(aa, k2 as usize).t.project(&pa).as_slice(), key.as_slice()).is_lt()
        })?;
        let hit = m.alloc::<Option<u32>>(na);
        m.step(nb, |q, r, o| {
            let Some(key) = key(r, q) else { return };
            let j = r.get(ge_raw, q) as usize;
            if j < na && vals.eq_tup(r.get(aa, j).t.project(&pa).as_slice(), key.as_slice()) {
                o.put(hit, j, Some(q as u32));
            }
        })?;
        m.step(na, |i, r, o| {
            let c = r.get(aa, i);
            if c.live {
                let partner = own_rep(r, i).and_then(|k| r.get(hit, k as usize));
                o.put(aa, i, c.with(Slot::Partner, partner));
            }
        })?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::MachineConfig;

    fn attrs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn rel(m: &mut Machine, names: &[&str], rows: &[Vec<u64>], vmax: u64) -> RelArray {
        RelArray::from_rows(m, attrs(names), rows, vmax)
    }

    fn machine() -> Machine {
        Machine::new(MachineConfig::default())
    }

    #[test]
    fn monotone_search_finds_boundary() {
        let mut m = machine();
        for n in [0usize, 1, 2, 7, 100] {
            for t in 0..=n {
                let out = monotone_search(&mut m, 1, n, 0.5, |_, _| Some((0, n)), |_, _, k| k < t).unwrap();
                assert_eq!(m.peek(out, 0), t as u64, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn hash_equality_matches_tuples() {
        let mut m = machine();
        let rows: Vec<Vec<u64>> = (0..300u64).map(|i| vec![(i * 7) % 13 + 1, (i * 11) % 5 + 1]).collect();
        let a = rel(&mut m, &["A", "B"], &rows, 100);
        let ht = hash_table(&mut m, &a, 0.5).unwrap();
        let h = m.read(ht.hash);
        for i in 0..rows.len() {
            assert!((h[i] as usize) < rows.len());
            for j in 0..rows.len() {
                assert_eq!(h[i] == h[j], rows[i] == rows[j]);
            }
        }
    }

    #[test]
    fn hash_needs_arbitrary() {
        let mut m = Machine::new(MachineConfig::with_mode(WriteMode::Common));
        let a = rel(&mut m, &["A"], &[vec![1]], 4);
        assert!(matches!(hash_table(&mut m, &a, 0.5), Err(Error::Setting(_))));
    }

    #[test]
    fn dedup_both_ways() {
        let mut m = machine();
        let rows = vec![vec![1], vec![1], vec![2], vec![1]];
        let mut a = rel(&mut m, &["A"], &rows, 4);
        dedup_dict(&mut m, &mut a, 0.5).unwrap();
        let mut got = a.rows(&m);
        got.sort();
        assert_eq!(got, vec![vec![1], vec![2]]);

        let mut b = rel(&mut m, &["A"], &[vec![1], vec![1], vec![2]], 4);
        b.order = attrs(&["A"]);
        dedup_ordered(&mut m, &mut b, Values::Keys, 0.5).unwrap();
        let cells = m.read(b.arr);
        assert!(cells[0].live && !cells[1].live && cells[2].live);
        assert_eq!(cells[1].link(Slot::Rep), Some(0));
    }

    #[test]
    fn sort_then_search() {
        let mut m = machine();
        let rows = vec![vec![5, 1], vec![2, 9], vec![5, 0], vec![7, 3], vec![2, 2]];
        let a = rel(&mut m, &["A", "B"], &rows, 10);
        let mut s = sort_rel(&mut m, &a, &attrs(&["A"]), 0.5, 0.5).unwrap();
        assert_eq!(s.rows(&m), vec![vec![2, 2], vec![2, 9], vec![5, 0], vec![5, 1], vec![7, 3]]);
        link_rel(&mut m, &mut s, 0.5).unwrap();
        let q = rel(&mut m, &["A"], &[vec![1], vec![2], vec![5], vec![6], vec![8]], 10);
        let bd = search_ordered_into_b(&mut m, &q, &s, &attrs(&["A"]), Values::Keys, 0.5).unwrap();
        let cells = m.read(s.arr);
        let val = |i: Option<u32>| i.map(|i| cells[i as usize].t.get(0));
        let le: Vec<_> = m.read(bd.le).into_iter().map(val).collect();
        let ge: Vec<_> = m.read(bd.ge).into_iter().map(val).collect();
        assert_eq!(le, vec![None, Some(2), Some(5), Some(5), Some(7)]);
        assert_eq!(ge, vec![Some(2), Some(2), Some(5), Some(7), None]);
        // extreme indices of the run of 5s
        let le_i = m.read(bd.le)[2].unwrap() as usize;
        let ge_i = m.read(bd.ge)[2].unwrap() as usize;
        assert_eq!(cells[le_i].t.get(1), 1);
        assert_eq!(cells[ge_i].t.get(1), 0);
    }

    #[test]
    fn search_into_a_and_dict_agree() {
        let mut m = machine();
        let ra: Vec<Vec<u64>> = vec![vec![1], vec![3], vec![3], vec![4], vec![9]];
        let rb: Vec<Vec<u64>> = vec![vec![3], vec![9], vec![2], vec![3]];
        let mut a = rel(&mut m, &["A"], &ra, 10);
        a.order = attrs(&["A"]);
        let b = rel(&mut m, &["A"], &rb, 10);
        search_ordered_into_a(&mut m, &a, &b, &attrs(&["A"]), Values::Keys, 0.5).unwrap();
        let got: Vec<bool> = m.read(a.arr).iter().map(|c| c.link(Slot::Partner).is_some()).collect();
        assert_eq!(got, vec![false, true, true, false, true]);
        let a2 = rel(&mut m, &["A"], &ra, 10);
        search_tuples_dict(&mut m, &a2, &b, &attrs(&["A"]), 0.5).unwrap();
        let cells = m.read(a2.arr);
        for (i, c) in cells.iter().enumerate() {
            assert_eq!(c.link(Slot::Partner).is_some(), got[i]);
            if let Some(p) = c.link(Slot::Partner) {
                assert_eq!(rb[p as usize], ra[i]);
            }
        }
    }

    #[test]
    fn compact_links_roundtrip() {
        let mut m = machine();
        let mut a = rel(&mut m, &["A"], &[vec![1], vec![2], vec![3], vec![4]], 8);
        let mut cells = m.read(a.arr);
        cells[1].live = false;
        cells[2].live = false;
        a.arr = m.load(cells);
        let c = compact_rel(&mut m, &a, 0.5, 0.5).unwrap();
        assert!(c.len() <= 3);
        assert_eq!(c.rows(&m), vec![vec![1], vec![4]]);
        let src = m.read(a.arr);
        let dst = m.read(c.arr);
        for (i, s) in src.iter().enumerate().filter(|x| x.1.live) {
            let p = s.link(Slot::Partner).unwrap() as usize;
            assert_eq!(dst[p].link(Slot::Partner), Some(i as u32));
        }
    }
}
