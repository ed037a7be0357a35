//! Invariant checks for the primitives against exact sequential results,
//! and a runner that exercises one primitive on random input.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{Machine, MachineConfig};
use crate::oracle::{oracle_exact_scan, oracle_sort};
use crate::primitives::{
    approx_compact, approx_prefix_sums, padded_sort, predecessor_links, schedule_tasks, successor_links,
};

/// `Ok` or a description of the first violation.
pub type Check = std::result::Result<(), String>;

fn within(len: usize, k: usize, lambda: f64) -> bool {
    len as f64 <= (1.0 + lambda) * k as f64 + 1e-9
}

/// `Σ_{j≤i} a_j ≤ B[i] ≤ (1+λ) Σ_{j≤i} a_j` and `B[i] − B[i−1] ≥ a_i`.
pub fn check_prefix_sums(a: &[u64], b: &[u64], lambda: f64) -> Check {
    if a.len() != b.len() {
        return Err(format!("{} sums for {} values", b.len(), a.len()));
    }
    let exact = oracle_exact_scan(a);
    for i in 0..a.len() {
        let (s, v) = (exact[i], b[i]);
        if v < s || v as f64 > (1.0 + lambda) * s as f64 + 1e-9 {
            return Err(format!("B[{i}] = {v} outside [{s}, (1+{lambda})·{s}]"));
        }
        let prev = if i == 0 { 0 } else { b[i - 1] };
        if v < prev || v - prev < a[i] {
            return Err(format!("B[{i}] - B[{}] = {} < A[{i}] = {}", i as i64 - 1, v as i128 - prev as i128, a[i]));
        }
    }
    Ok(())
}

/// Same inhabited values in the same order, in at most `(1+λ)k` cells.
pub fn check_compaction(input: &[Option<u64>], out: &[Option<u64>], lambda: f64) -> Check {
    let want: Vec<u64> = input.iter().flatten().copied().collect();
    let got: Vec<u64> = out.iter().flatten().copied().collect();
    if !within(out.len(), want.len(), lambda) {
        return Err(format!("{} cells for {} items", out.len(), want.len()));
    }
    if got != want {
        let i = got.iter().zip(&want).position(|(a, b)| a != b).unwrap_or(got.len().min(want.len()));
        return Err(format!("item {i} differs: got {:?}, want {:?}", got.get(i), want.get(i)));
    }
    Ok(())
}

/// Sorted, same multiset, at most `(1+λ)n` cells, indices pointing at
/// their values.
pub fn check_padded_sort(input: &[u64], out: &[Option<(u64, u32)>], lambda: f64) -> Check {
    if !within(out.len(), input.len(), lambda) {
        return Err(format!("{} cells for {} values", out.len(), input.len()));
    }
    let got: Vec<u64> = out.iter().flatten().map(|x| x.0).collect();
    if got != oracle_sort(input) {
        return Err("not a sorted permutation of the input".into());
    }
    if let Some((v, i)) = out.iter().flatten().find(|(v, i)| input.get(*i as usize) != Some(v)) {
        return Err(format!("cell says value {v} came from index {i}"));
    }
    Ok(())
}

/// Nearest set flag strictly before / after every position.
pub fn check_links(flags: &[bool], pred: &[Option<u32>], succ: &[Option<u32>]) -> Check {
    let mut last = None;
    for i in 0..flags.len() {
        if pred[i] != last {
            return Err(format!("pred[{i}] = {:?}, want {last:?}", pred[i]));
        }
        if flags[i] {
            last = Some(i as u32);
        }
    }
    let mut next = None;
    for i in (0..flags.len()).rev() {
        if succ[i] != next {
            return Err(format!("succ[{i}] = {:?}, want {next:?}", succ[i]));
        }
        if flags[i] {
            next = Some(i as u32);
        }
    }
    Ok(())
}

/// Every task owns `demand` consecutive cells from its lead cell, cells
/// name their owner's lead, and the schedule has at most `(1+λ)Σ demand`
/// cells.
pub fn check_schedule(demand: &[u64], cells: &[Option<(u32, u32)>], leads: &[Option<u32>], lambda: f64) -> Check {
    let total: u64 = demand.iter().sum();
    if !within(cells.len(), total as usize, lambda) {
        return Err(format!("{} cells for total demand {total}", cells.len()));
    }
    for (i, &d) in demand.iter().enumerate() {
        match (d, leads[i]) {
            (0, None) => {}
            (0, Some(l)) => return Err(format!("task {i} without demand has lead {l}")),
            (_, None) => return Err(format!("task {i} has no lead")),
            (d, Some(l)) => {
                for p in l as usize..l as usize + d as usize {
                    if cells.get(p).copied().flatten() != Some((i as u32, l)) {
                        return Err(format!("cell {p} of task {i} holds {:?}", cells.get(p)));
                    }
                }
            }
        }
    }
    if let Some((p, (t, l))) =
        cells.iter().enumerate().find_map(|(p, c)| c.filter(|&(t, l)| leads.get(t as usize) != Some(&Some(l))).map(|c| (p, c)))
    {
        return Err(format!("cell {p} names task {t} with lead {l}"));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct PrimitiveReport {
    pub primitive: String,
    pub n: usize,
    pub passed: bool,
    pub counterexample: Option<String>,
    pub work: u64,
    pub depth: u64,
    pub space: u64,
}

pub const PRIMITIVES: [&str; 5] = ["prefix-sums", "compact", "padded-sort", "links", "schedule"];

/// Options for [`run_primitive`].
#[derive(Clone, Debug)]
pub struct PrimitiveRun {
    pub n: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Padded sort: value range exponent, values in `[0, n^c)`.
    pub c: u32,
    /// Padded sort: force one input value (may lie outside the range).
    pub plant: Option<u64>,
}

impl Default for PrimitiveRun {
    fn default() -> Self {
        PrimitiveRun { n: 1024, lambda: 0.5, epsilon: 0.5, seed: 0, c: 2, plant: None }
    }
}

/// Runs one primitive on seeded random input and checks its invariants.
/// Parameter faults of the primitive are returned as errors.
pub fn run_primitive(name: &str, cfg: MachineConfig, run: &PrimitiveRun) -> Result<PrimitiveReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut m = Machine::new(cfg);
    let (n, lambda, epsilon) = (run.n, run.lambda, run.epsilon);
    let check = match name {
        "prefix-sums" => {
            let a: Vec<u64> = (0..n).map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(1..=100) }).collect();
            let arr = m.load(a.clone());
            let b = approx_prefix_sums(&mut m, arr, lambda, epsilon)?;
            check_prefix_sums(&a, &m.read(b), lambda)
        }
        "compact" => {
            let a: Vec<Option<u64>> = (0..n).map(|i| rng.random_bool(0.5).then_some(i as u64)).collect();
            let arr = m.load(a.clone());
            let c = approx_compact(&mut m, arr, lambda, epsilon)?;
            check_compaction(&a, &m.read(c.out), lambda)
        }
        "padded-sort" => {
            let bound = (n.max(2) as u128).saturating_pow(run.c).min(u64::MAX as u128) as u64;
            let mut a: Vec<u64> = (0..n).map(|_| rng.random_range(0..bound)).collect();
            if let (Some(v), Some(x)) = (run.plant, a.first_mut()) {
                *x = v;
            }
            let arr = m.load(a.clone());
            let out = padded_sort(&mut m, arr, lambda, epsilon, run.c)?;
            check_padded_sort(&a, &m.read(out), lambda)
        }
        "links" => {
            let f: Vec<bool> = (0..n).map(|_| rng.random_bool(0.2)).collect();
            let arr = m.load(f.clone());
            let p = predecessor_links(&mut m, arr, epsilon)?;
            let s = successor_links(&mut m, arr, epsilon)?;
            check_links(&f, &m.read(p), &m.read(s))
        }
        "schedule" => {
            let d: Vec<u64> = (0..n).map(|_| if rng.random_bool(0.4) { 0 } else { rng.random_range(1..=8) }).collect();
            let arr = m.load(d.clone());
            let s = schedule_tasks(&mut m, arr, lambda, epsilon)?;
            check_schedule(&d, &m.read(s.cells), &m.read(s.leads), lambda)
        }
        _ => return Err(Error::Param(format!("unknown primitive {name:?}; known: {}", PRIMITIVES.join(", ")))),
    };
    Ok(PrimitiveReport {
        primitive: name.to_string(),
        n,
        passed: check.is_ok(),
        counterexample: check.err(),
        work: m.work(),
        depth: m.depth(),
        space: m.space(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_primitive_passes() {
        for p in PRIMITIVES {
            for n in [0, 1, 300] {
                let r = run_primitive(p, MachineConfig::default(), &PrimitiveRun { n, ..Default::default() }).unwrap();
                assert!(r.passed, "{p} n={n}: {:?}", r.counterexample);
            }
        }
    }

    #[test]
    fn checkers_catch_violations() {
        assert!(check_prefix_sums(&[1, 2], &[1, 2], 0.5).is_err());
        assert!(check_prefix_sums(&[1, 2], &[1, 3], 0.5).is_ok());
        assert!(check_compaction(&[Some(1), None, Some(2)], &[Some(2), Some(1)], 0.5).is_err());
        assert!(check_padded_sort(&[2, 1], &[Some((2, 0)), Some((1, 1))], 0.5).is_err());
        assert!(check_links(&[true, false], &[None, None], &[None, Some(0)]).is_err());
        assert!(check_schedule(&[2], &[Some((0, 0)), None], &[Some(0)], 0.5).is_err());
    }

    #[test]
    fn out_of_range_sort_value() {
        let run = PrimitiveRun { n: 16, plant: Some(1 << 40), ..Default::default() };
        let r = run_primitive("padded-sort", MachineConfig::default(), &run);
        assert!(matches!(r, Err(Error::Param(_))));
        assert!(matches!(run_primitive("bogus", MachineConfig::default(), &run), Err(Error::Param(_))));
    }
}
