//! Seeded database generators for benchmarks and tests.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::query::{parse_query, Query};
use crate::relstore::Database;
use crate::run::Evaluator;

pub const FAMILIES: [&str; 5] = ["uniform", "skewed-join", "evens-vs-odds", "path", "triangle"];

pub struct Workload {
    pub family: String,
    pub n: usize,
    pub db: Database,
    pub query: Query,
    pub evaluator: Evaluator,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` distinct tuples of the given arity over `[1, domain]` (fewer if the
/// domain is too small).
pub fn random_rows(rng: &mut impl Rng, n: usize, arity: usize, domain: u64) -> Vec<Vec<u64>> {
    let cap = (domain as u128).saturating_pow(arity as u32).min(n as u128) as usize;
    let mut s = BTreeSet::new();
    while s.len() < cap {
        s.insert((0..arity).map(|_| rng.random_range(1..=domain)).collect::<Vec<u64>>());
    }
    s.into_iter().collect()
}

fn db(rels: Vec<(&str, Vec<&str>, Vec<Vec<u64>>)>) -> Result<Database> {
    Database::from_keys(rels)
}

fn cq(s: &str) -> Query {
    parse_query(s).expect("built-in query")
}

/// One instance of a family at size `n`:
/// - `uniform`: `R(A,B) ⋉ S(B,C)` as a plan, uniform values in `[1, 2n]`;
/// - `skewed-join`: `R(a,b) ⋈ S(b,c)` where `⌈√n⌉` tuples on each side share
///   one join value and the rest are unique;
/// - `evens-vs-odds`: `R ⋉ S` for `R = {2, 4, …, 2n}`, `S = {1, 3, …, 2n−1}`;
/// - `path`: endpoints of 3-edge paths in the path graph `1 → 2 → … → n+1`;
/// - `triangle`: `R(a,b) ⋈ S(b,c) ⋈ T(a,c)`, uniform over `[1, ⌈n^{2/3}⌉]`.
pub fn generate(family: &str, n: usize, seed: u64) -> Result<Workload> {
    let mut r = rng(seed);
    let nn = n as u64;
    let (db, query, evaluator) = match family {
        "uniform" => (
            db(vec![
                ("R", vec!["A", "B"], random_rows(&mut r, n, 2, 2 * nn.max(1))),
                ("S", vec!["B", "C"], random_rows(&mut r, n, 2, 2 * nn.max(1))),
            ])?,
            crate::query::parse_plan("(sjoin R S)").map(Query::Plan)?,
            Evaluator::Plan,
        ),
        "skewed-join" => {
            let k = (n as f64).sqrt().ceil() as u64;
            let side = |off: u64, heavy_first: bool| -> Vec<Vec<u64>> {
                (1..=nn)
                    .map(|i| {
                        let b = if i <= k { 1 } else { i + 1 };
                        let o = off + i;
                        if heavy_first {
                            vec![o, b]
                        } else {
                            vec![b, o]
                        }
                    })
                    .collect()
            };
            (
                db(vec![("R", vec!["A", "B"], side(0, true)), ("S", vec!["B", "C"], side(nn, false))])?,
                cq("Q(a,b,c) :- R(a,b), S(b,c)."),
                Evaluator::FreeConnex,
            )
        }
        "evens-vs-odds" => (
            db(vec![
                ("R", vec!["A"], (1..=nn).map(|i| vec![2 * i]).collect()),
                ("S", vec!["A"], (1..=nn).map(|i| vec![2 * i - 1]).collect()),
            ])?,
            crate::query::parse_plan("(sjoin R S)").map(Query::Plan)?,
            Evaluator::Plan,
        ),
        "path" => (
            db(vec![("E", vec!["X", "Y"], (1..=nn).map(|i| vec![i, i + 1]).collect())])?,
            cq("Q(x,w) :- E(x,y), E(y,z), E(z,w)."),
            Evaluator::Acyclic,
        ),
        "triangle" => {
            let dom = ((n as f64).powf(2.0 / 3.0).ceil() as u64).max(2);
            (
                db(vec![
                    ("R", vec!["A", "B"], random_rows(&mut r, n, 2, dom)),
                    ("S", vec!["B", "C"], random_rows(&mut r, n, 2, dom)),
                    ("T", vec!["A", "C"], random_rows(&mut r, n, 2, dom)),
                ])?,
                cq("Q(a,b,c) :- R(a,b), S(b,c), T(a,c)."),
                Evaluator::Wcoj,
            )
        }
        _ => return Err(Error::Param(format!("unknown family {family:?}; known: {}", FAMILIES.join(", ")))),
    };
    Ok(Workload { family: family.to_string(), n, db, query, evaluator })
}

/// Least-squares slope of `ln y` against `ln x` over points with positive
/// coordinates.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let p: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if p.len() < 2 {
        return None;
    }
    let k = p.len() as f64;
    let (mx, my) = (p.iter().map(|q| q.0).sum::<f64>() / k, p.iter().map(|q| q.1).sum::<f64>() / k);
    let sxx: f64 = p.iter().map(|q| (q.0 - mx).powi(2)).sum();
    let sxy: f64 = p.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
