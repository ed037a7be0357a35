//! Consistent approximate prefix sums.
//!
//! The array is cut into blocks of `b` cells. Each block gets a summation
//! tree whose labels are rounded up to a few significant bits, the tree is
//! made consistent, and local prefix sums are read off the left siblings
//! along each leaf-to-root path. Block totals are summed recursively and
//! added back. The number of levels depends only on ε, so the depth does
//! too.

use crate::error::{param, Error, Result};
use crate::kernel::{Arr, Machine, Mem};

use super::{ceil_tol, check_params, root_ceil};

/// Heap-ordered labels of one or more summation trees with `leaf_count`
/// leaves each; node `v` of tree `t` sits at `t * 2 * leaf_count + v`.
#[derive(Clone, Copy, Debug)]
pub struct SummationTree {
    pub leaf_count: usize,
    /// Accuracy λ' = 2^-mu_bits.
    pub mu_bits: u32,
    pub labels: Arr<u64>,
}

impl SummationTree {
    pub fn lambda_prime(&self) -> f64 {
        (0.5f64).powi(self.mu_bits as i32)
    }
}

/// Where the cells of a level live. A whole array is one segment at
/// offset 0; segmented runs keep a flat array in which segment `s` owns
/// positions `start_s ..` and only its first `ceil(len_s / div)` are used.
#[derive(Clone, Copy)]
pub(crate) enum Layout {
    Whole { len: usize },
    Seg { start: Arr<Option<u32>>, len: Arr<u32>, div: u64, flat: usize },
}

impl Layout {
    fn size(&self) -> usize {
        match *self {
            Layout::Whole { len } => len,
            Layout::Seg { flat, .. } => flat,
        }
    }

    fn slots(&self, b: usize) -> usize {
        match *self {
            Layout::Whole { len } => len.div_ceil(b),
            Layout::Seg { flat, .. } => flat,
        }
    }

    /// `(segment start, local index, segment length at this level)`.
    fn at(&self, r: &Mem, p: usize) -> Option<(usize, usize, usize)> {
        match *self {
            Layout::Whole { len } => Some((0, p, len)),
            Layout::Seg { start, len, div, .. } => {
                let s = r.get(start, p)? as usize;
                let l = (r.get(len, p) as u64).div_ceil(div) as usize;
                Some((s, p - s, l))
            }
        }
    }

    fn next(&self, b: usize) -> Layout {
        match *self {
            Layout::Whole { len } => Layout::Whole { len: len.div_ceil(b) },
            Layout::Seg { start, len, div, flat } => Layout::Seg { start, len, div: div.saturating_mul(b as u64), flat },
        }
    }
}

fn round_up_bits(v: u64, bits: u32) -> Option<u64> {
    let len = 64 - v.leading_zeros();
    if len <= bits {
        return Some(v);
    }
    let mask = (1u64 << (len - bits)) - 1;
    v.checked_add(mask).map(|x| x & !mask)
}

/// `floor(v * (1 + 2^-m)^h)`, floored after every factor. Flooring each
/// step keeps both the lower bound and the consistency inequality.
fn inflate(v: u64, m: u32, h: u32) -> Option<u64> {
    let mut x = v as u128;
    for _ in 0..h {
        x = (x * ((1u128 << m) + 1)) >> m;
    }
    u64::try_from(x).ok()
}

fn height_of(v: usize, leaves: usize) -> u32 {
    leaves.trailing_zeros() - (usize::BITS - 1 - v.leading_zeros())
}

/// One round: labels of every node of every block tree.
fn build_forest(m: &mut Machine, vals: Arr<u64>, lay: Layout, b: usize, leaves: usize, mu_bits: u32) -> Result<Arr<u64>> {
    let slots = lay.slots(b);
    let tree = m.alloc::<u64>(slots * 2 * leaves);
    m.step(slots * 2 * leaves, |idx, r, o| {
        let (q, v) = (idx / (2 * leaves), idx % (2 * leaves));
        if v == 0 {
            return;
        }
        let Some((start, k, len)) = lay.at(r, q) else { return };
        if k * b >= len {
            return;
        }
        let d = usize::BITS - 1 - v.leading_zeros();
        let span = leaves >> d;
        let first = (v - (1 << d)) * span;
        let mut buf = [0u64; 64];
        let mut n = 0;
        for j in first..first + span {
            let local = k * b + j;
            buf[n] = if j < b && local < len { r.get(vals, start + local) } else { 0 };
            n += 1;
        }
        let s = o.sum(&buf[..n]);
        let label = if span == 1 {
            s
        } else {
            match round_up_bits(s, mu_bits + 1) {
                Some(x) => x,
                None => {
                    o.fail(Error::Overflow("summation tree label".into()));
                    return;
                }
            }
        };
        o.put(tree, idx, label);
    })?;
    Ok(tree)
}

fn consistent_forest(m: &mut Machine, tree: Arr<u64>, leaves: usize, mu_bits: u32) -> Result<Arr<u64>> {
    let out = m.alloc::<u64>(tree.len());
    m.step(tree.len(), |idx, r, o| {
        let v = idx % (2 * leaves);
        if v == 0 {
            return;
        }
        let h = height_of(v, leaves);
        o.charge(h as u64);
        match inflate(r.get(tree, idx), mu_bits, h) {
            Some(x) => o.put(out, idx, x),
            None => o.fail(Error::Overflow("consistent label".into())),
        }
    })?;
    Ok(out)
}

/// One round: b_i = a_i + Σ labels of left siblings on the leaf's root path.
fn prefix_forest(m: &mut Machine, tree: Arr<u64>, lay: Layout, b: usize, leaves: usize) -> Result<Arr<u64>> {
    let out = m.alloc::<u64>(lay.size());
    m.step(lay.size(), |p, r, o| {
        let Some((start, local, len)) = lay.at(r, p) else { return };
        if local >= len {
            return;
        }
        let base = (start + local / b) * 2 * leaves;
        let mut u = leaves + local % b;
        let mut buf = [0u64; 65];
        buf[0] = r.get(tree, base + u);
        let mut n = 1;
        while u > 1 {
            if u & 1 == 1 {
                buf[n] = r.get(tree, base + u - 1);
                n += 1;
            }
            u >>= 1;
        }
        let s = o.sum(&buf[..n]);
        o.put(out, p, s);
    })?;
    Ok(out)
}

pub(crate) struct PsPlan {
    pub levels: u32,
    pub b: usize,
    pub leaves: usize,
    pub mu_bits: u32,
}

/// Parameters for a run whose longest segment has `maxlen` cells.
pub(crate) fn plan(maxlen: usize, lambda: f64, epsilon: f64) -> Result<PsPlan> {
    check_params(lambda, epsilon)?;
    let levels = ceil_tol(3.0 / epsilon);
    let b = root_ceil(maxlen, levels);
    let leaves = b.next_power_of_two();
    if leaves > 64 {
        return Err(param(format!("block size {b} exceeds the macro width; increase epsilon")));
    }
    let h = leaves.trailing_zeros() + 1;
    let budget = lambda.ln_1p() / (h * levels) as f64;
    let mut mu_bits = 1;
    while (0.5f64).powi(mu_bits as i32) > budget {
        mu_bits += 1;
        if mu_bits > 40 {
            return Err(param("lambda too small"));
        }
    }
    Ok(PsPlan { levels, b, leaves, mu_bits })
}

fn run(m: &mut Machine, vals: Arr<u64>, lay: Layout, pl: &PsPlan, level: u32) -> Result<Arr<u64>> {
    let (b, leaves) = (pl.b, pl.leaves);
    let raw = build_forest(m, vals, lay, b, leaves, pl.mu_bits)?;
    let tree = consistent_forest(m, raw, leaves, pl.mu_bits)?;
    let local = prefix_forest(m, tree, lay, b, leaves)?;
    if level == pl.levels {
        return Ok(local);
    }
    // Block totals: C[k] = local prefix at the end of block k-1, C[0] = 0.
    let next = lay.next(b);
    let c = m.alloc::<u64>(next.size());
    m.step(next.size(), |p, r, o| {
        let Some((start, k, len)) = next.at(r, p) else { return };
        if k >= len {
            return;
        }
        let v = if k == 0 { 0 } else { r.get(local, start + k * b - 1) };
        o.put(c, p, v);
    })?;
    let d = run(m, c, next, pl, level + 1)?;
    let out = m.alloc::<u64>(lay.size());
    m.step(lay.size(), |p, r, o| {
        let Some((start, k, len)) = lay.at(r, p) else { return };
        if k >= len {
            return;
        }
        match r.get(local, p).checked_add(r.get(d, start + k / b)) {
            Some(x) => o.put(out, p, x),
            None => o.fail(Error::Overflow("prefix sum".into())),
        }
    })?;
    Ok(out)
}

/// Consistent λ-approximate prefix sums: `Σ_{j≤i} a_j ≤ B[i] ≤ (1+λ) Σ_{j≤i} a_j`
/// and `B[i] - B[i-1] ≥ a_i`.
pub fn approx_prefix_sums(m: &mut Machine, a: Arr<u64>, lambda: f64, epsilon: f64) -> Result<Arr<u64>> {
    let pl = plan(a.len(), lambda, epsilon)?;
    m.phase("prefix_sums", |m| run(m, a, Layout::Whole { len: a.len() }, &pl, 1))
}

/// Prefix sums restarted at every segment of a flat array. Position `p`
/// belongs to the segment starting at `start[p]` (if any) whose length is
/// `len[p]`; positions past the segment length are ignored.
pub(crate) fn segmented_prefix_sums(
    m: &mut Machine,
    a: Arr<u64>,
    start: Arr<Option<u32>>,
    len: Arr<u32>,
    maxlen: usize,
    lambda: f64,
    epsilon: f64,
) -> Result<Arr<u64>> {
    let pl = plan(maxlen, lambda, epsilon)?;
    let lay = Layout::Seg { start, len, div: 1, flat: a.len() };
    m.phase("prefix_sums", |m| run(m, a, lay, &pl, 1))
}

fn mu_bits_for(lambda_prime: f64) -> Result<u32> {
    if !(lambda_prime > 0.0) {
        return Err(param("lambda' must be positive"));
    }
    let mut k = 1;
    while (0.5f64).powi(k as i32) > lambda_prime {
        k += 1;
        if k > 40 {
            return Err(param("lambda' too small"));
        }
    }
    Ok(k)
}

/// Summation tree over `a` (length a power of two, at most the macro
/// width). Leaves are exact; inner labels are exact sums rounded up.
pub fn build_summation_tree(m: &mut Machine, a: Arr<u64>, lambda_prime: f64) -> Result<SummationTree> {
    let n = a.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(param("leaf count must be a power of two"));
    }
    if n > m.config().macro_width {
        return Err(param("leaf count exceeds the macro width"));
    }
    let mu_bits = mu_bits_for(lambda_prime)?;
    let labels = build_forest(m, a, Layout::Whole { len: n }, n, n, mu_bits)?;
    Ok(SummationTree { leaf_count: n, mu_bits, labels })
}

/// Multiplies every label at height h by (1+λ')^h.
pub fn make_consistent(m: &mut Machine, t: &SummationTree) -> Result<SummationTree> {
    let labels = consistent_forest(m, t.labels, t.leaf_count, t.mu_bits)?;
    Ok(SummationTree { labels, ..*t })
}

pub fn prefix_from_tree(m: &mut Machine, t: &SummationTree) -> Result<Arr<u64>> {
    let n = t.leaf_count;
    prefix_forest(m, t.labels, Layout::Whole { len: n }, n, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{MachineConfig, WriteMode};

    fn mach() -> Machine {
        Machine::new(MachineConfig::with_mode(WriteMode::Common))
    }

    fn scan(a: &[u64]) -> Vec<u64> {
        a.iter()
            .scan(0u64, |s, &x| {
                *s += x;
                Some(*s)
            })
            .collect()
    }

    fn check(a: &[u64], b: &[u64], lambda: f64) {
        let ex = scan(a);
        for i in 0..a.len() {
            assert!(ex[i] <= b[i], "lower bound at {i}");
            assert!(b[i] as f64 <= (1.0 + lambda) * ex[i] as f64, "upper bound at {i}");
            let prev = if i == 0 { 0 } else { b[i - 1] };
            assert!(b[i] >= prev + a[i], "gap at {i}");
        }
    }

    #[test]
    fn ones() {
        let mut m = mach();
        let a = m.load(vec![1u64; 4]);
        let b = approx_prefix_sums(&mut m, a, 0.5, 0.5).unwrap();
        check(&[1; 4], &m.read(b), 0.5);
    }

    #[test]
    fn zeros() {
        let mut m = mach();
        let a = m.load(vec![0u64; 100]);
        let b = approx_prefix_sums(&mut m, a, 0.5, 0.5).unwrap();
        assert!(m.read(b).iter().all(|&x| x == 0));
    }

    #[test]
    fn bad_params() {
        let mut m = mach();
        let a = m.load(vec![1u64]);
        assert!(approx_prefix_sums(&mut m, a, 0.0, 0.5).is_err());
        assert!(approx_prefix_sums(&mut m, a, 0.5, -1.0).is_err());
    }

    #[test]
    fn random_1024() {
        let mut m = mach();
        let a: Vec<u64> = (0..1024u64).map(|i| (i * 7919 + 13) % 1000).collect();
        let arr = m.load(a.clone());
        let b = approx_prefix_sums(&mut m, arr, 0.1, 0.5).unwrap();
        check(&a, &m.read(b), 0.1);
    }

    #[test]
    fn depth_is_size_independent() {
        let mut d = Vec::new();
        for n in [0usize, 1, 100, 1600] {
            let mut m = mach();
            let a = m.load(vec![3u64; n]);
            approx_prefix_sums(&mut m, a, 0.5, 0.5).unwrap();
            d.push(m.depth());
        }
        assert!(d.windows(2).all(|w| w[0] == w[1]), "{d:?}");
    }

    #[test]
    fn tree_single_leaf() {
        let mut m = mach();
        let a = m.load(vec![5u64]);
        let t = build_summation_tree(&mut m, a, 0.25).unwrap();
        assert_eq!(m.peek(t.labels, 1), 5);
        let t = make_consistent(&mut m, &t).unwrap();
        let p = prefix_from_tree(&mut m, &t).unwrap();
        assert_eq!(m.read(p), vec![5]);
    }

    #[test]
    fn tree_root_lower_bound() {
        let mut m = mach();
        let a = m.load(vec![1u64, 2, 3, 4]);
        let t = build_summation_tree(&mut m, a, 0.25).unwrap();
        assert!(m.peek(t.labels, 1) >= 10);
    }

    #[test]
    fn two_leaf_root_scaled() {
        let mut m = mach();
        let a = m.load(vec![8u64, 8]);
        let t = build_summation_tree(&mut m, a, 0.25).unwrap();
        assert_eq!(m.peek(t.labels, 1), 16);
        let c = make_consistent(&mut m, &t).unwrap();
        assert_eq!(m.peek(c.labels, 1), 20);
        let p = prefix_from_tree(&mut m, &c).unwrap();
        assert_eq!(m.read(p), vec![8, 16]);
    }

    #[test]
    fn leaves_one_one() {
        let mut m = mach();
        let a = m.load(vec![1u64, 1]);
        let t = build_summation_tree(&mut m, a, 0.5).unwrap();
        let t = make_consistent(&mut m, &t).unwrap();
        let p = prefix_from_tree(&mut m, &t).unwrap();
        let p = m.read(p);
        assert_eq!(p[0], 1);
        assert!(p[1] >= 2);
    }

    #[test]
    fn segmented_restarts_per_segment() {
        let mut m = mach();
        // Segments [0,5), [5,6), [7,12) with position 6 unused.
        let segs = [(0usize, 5usize), (5, 1), (7, 5)];
        let vals: Vec<u64> = (0..12u64).map(|i| i % 3).collect();
        let mut start = vec![None; 12];
        let mut len = vec![0u32; 12];
        for &(s, l) in &segs {
            for p in s..s + l {
                start[p] = Some(s as u32);
                len[p] = l as u32;
            }
        }
        let a = m.load(vals.clone());
        let st = m.load(start);
        let ln = m.load(len);
        for (lambda, eps) in [(0.5, 0.5), (1.0 / 3.0, 1.0 / 6.0)] {
            let out = segmented_prefix_sums(&mut m, a, st, ln, 12, lambda, eps).unwrap();
            let b = m.read(out);
            for &(s, l) in &segs {
                check(&vals[s..s + l], &b[s..s + l], lambda);
            }
        }
    }
}
