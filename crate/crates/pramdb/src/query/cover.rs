//! Fractional edge covers and the AGM bound.

use num_rational::Ratio;

use super::ConjunctiveQuery;
use crate::error::{Error, Result};

/// Snapping grid for solver output.
const GRID: i64 = 1 << 20;

/// Weights `x_i ≥ 0` per body atom with `Σ_{i: A ∈ R_i} x_i ≥ 1` for every
/// variable `A`. Weights are exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalCover {
    pub weights: Vec<Ratio<i64>>,
}

impl FractionalCover {
    /// Weights like `1/2`, `0.5` or `1`.
    pub fn parse(items: &[&str]) -> Result<FractionalCover> {
        let weights = items.iter().map(|s| parse_ratio(s)).collect::<Result<_>>()?;
        Ok(FractionalCover { weights })
    }

    pub fn objective(&self) -> Ratio<i64> {
        self.weights.iter().sum()
    }

    /// Every constraint, checked exactly.
    pub fn verify(&self, q: &ConjunctiveQuery) -> Result<()> {
        if self.weights.len() != q.body.len() {
            return Err(Error::Param(format!("cover has {} weights for {} atoms", self.weights.len(), q.body.len())));
        }
        if let Some(w) = self.weights.iter().find(|w| **w < Ratio::from_integer(0)) {
            return Err(Error::Param(format!("negative cover weight {w}")));
        }
        for x in q.vars() {
            let s: Ratio<i64> =
                q.body.iter().zip(&self.weights).filter(|(a, _)| a.vars.contains(&x)).map(|(_, w)| *w).sum();
            if s < Ratio::from_integer(1) {
                return Err(Error::Param(format!("cover leaves {x} with weight {s} < 1")));
            }
        }
        Ok(())
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|w| *w.numer() as f64 / *w.denom() as f64).collect()
    }
}

fn parse_ratio(s: &str) -> Result<Ratio<i64>> {
    let bad = || Error::Param(format!("bad cover weight {s:?}"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('.') {
        if b.is_empty() || b.len() > 12 || !b.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10i64.pow(b.len() as u32);
        let whole: i64 = if a.is_empty() { 0 } else { a.parse().map_err(|_| bad())? };
        let frac: i64 = b.parse().map_err(|_| bad())?;
        return Ok(Ratio::new(whole * den + frac, den));
    }
    s.parse::<Ratio<i64>>().map_err(|_| bad())
}

/// Minimum fractional edge cover. The dual packing LP
/// `max Σ y_A` s.t. `Σ_{A ∈ R_i} y_A ≤ 1` is solved by a dense simplex with
/// Bland's rule; the cover is read off the slack columns, snapped up to
/// multiples of 2^-20 and verified exactly (bumped where a constraint
/// would fail).
pub fn fractional_cover(q: &ConjunctiveQuery) -> Result<FractionalCover> {
    let vars = q.vars();
    let (m, n) = (q.body.len(), vars.len());
    if m == 0 {
        return Err(Error::Param("empty query".into()));
    }
    // Tableau: rows 0..m constraints, row m objective; columns 0..n y,
    // n..n+m slacks, last = rhs.
    let w = n + m + 1;
    let mut t = vec![vec![0.0f64; w]; m + 1];
    for (i, a) in q.body.iter().enumerate() {
        for (j, x) in vars.iter().enumerate() {
            if a.vars.contains(x) {
                t[i][j] = 1.0;
            }
        }
        t[i][n + i] = 1.0;
        t[i][w - 1] = 1.0;
    }
    for j in 0..n {
        t[m][j] = -1.0;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    const EPS: f64 = 1e-12;
    for _ in 0..10_000 {
        let Some(e) = (0..n + m).find(|&j| t[m][j] < -EPS) else { break };
        let mut leave: Option<(f64, usize, usize)> = None;
        for i in 0..m {
            if t[i][e] > EPS {
                let r = t[i][w - 1] / t[i][e];
                let better = match leave {
                    None => true,
                    Some((br, _, bb)) => r < br - EPS || (r <= br + EPS && basis[i] < bb),
                };
                if better {
                    leave = Some((r, i, basis[i]));
                }
            }
        }
        let Some((_, r, _)) = leave else {
            return Err(Error::Param("cover LP is unbounded".into()));
        };
        let p = t[r][e];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        let row = t[r].clone();
        for (i, ti) in t.iter_mut().enumerate() {
            if i != r && ti[e].abs() > EPS {
                let f = ti[e];
                for (v, rv) in ti.iter_mut().zip(&row) {
                    *v -= f * rv;
                }
            }
        }
        basis[r] = e;
    }
    let mut k: Vec<i64> = (0..m).map(|i| (t[m][n + i].max(0.0) * GRID as f64 - 1e-6).ceil().max(0.0) as i64).collect();
    loop {
        let short = vars.iter().find(|x| {
            q.body.iter().zip(&k).filter(|(a, _)| a.vars.contains(x)).map(|(_, k)| *k).sum::<i64>() < GRID
        });
        match short {
            None => break,
            Some(x) => {
                for (a, ki) in q.body.iter().zip(k.iter_mut()) {
                    if a.vars.contains(x) {
                        *ki += 1;
                    }
                }
            }
        }
    }
    let c = FractionalCover { weights: k.into_iter().map(|k| Ratio::new(k, GRID)).collect() };
    c.verify(q)?;
    Ok(c)
}

/// `Π |R_i|^{x_i}`, computed as `exp(Σ x_i ln |R_i|)`. Results within a
/// relative 1e-9 of an integer are taken as that integer, anything else is
/// rounded up; saturates at `u64::MAX`.
pub fn agm_bound(cover: &FractionalCover, sizes: &[u64]) -> u64 {
    let mut s = 0.0f64;
    for (x, &n) in cover.as_f64().iter().zip(sizes) {
        if *x == 0.0 {
            continue;
        }
        if n == 0 {
            return 0;
        }
        s += x * (n as f64).ln();
    }
    let v = s.exp();
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.max(1.0) {
        r as u64
    } else {
        v.ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{parse_query, Query};
    use proptest::prelude::*;

    fn cq(s: &str) -> ConjunctiveQuery {
        match parse_query(s).unwrap() {
            Query::Cq(q) => q,
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_atom() {
        let q = cq("Q(a,b) :- R(a,b).");
        let c = fractional_cover(&q).unwrap();
        assert_eq!(c.weights, vec![Ratio::from_integer(1)]);
        assert_eq!(agm_bound(&c, &[37]), 37);
    }

    #[test]
    fn triangle() {
        let q = cq("Q(a,b,c) :- R(a,b), S(b,c), T(a,c).");
        let c = fractional_cover(&q).unwrap();
        assert_eq!(c.objective(), Ratio::new(3, 2));
        let half = FractionalCover::parse(&["1/2", "0.5", "1/2"]).unwrap();
        half.verify(&q).unwrap();
        for n in [64u64, 128, 256, 1000] {
            assert_eq!(agm_bound(&half, &[n, n, n]), (n as f64).powf(1.5).ceil() as u64);
        }
        assert_eq!(agm_bound(&half, &[64, 64, 64]), 512);
        assert_eq!(agm_bound(&half, &[0, 64, 64]), 0);
        assert!(FractionalCover::parse(&["1/2", "1/2", "1/3"]).unwrap().verify(&q).is_err());
    }

    proptest! {
        #[test]
        fn solver_beats_supplied_covers(
            edges in prop::collection::vec(prop::collection::btree_set(0usize..5, 1..4), 1..5),
            extra in prop::collection::vec(0i64..3, 5),
        ) {
            let body: Vec<String> = edges
                .iter()
                .enumerate()
                .map(|(i, e)| format!("R{i}({})", e.iter().map(|v| format!("v{v}")).collect::<Vec<_>>().join(",")))
                .collect();
            let q = cq(&format!("Q() :- {}.", body.join(", ")));
            let c = fractional_cover(&q).unwrap();
            c.verify(&q).unwrap();
            // Integral covers: each atom weight 1 plus noise.
            let user = FractionalCover { weights: (0..edges.len()).map(|i| Ratio::from_integer(1 + extra[i])).collect() };
            user.verify(&q).unwrap();
            prop_assert!(c.objective() <= user.objective());
        }
    }
}
