//! Attribute-elimination join: for the attribute list `A_1..A_k`, `L_1` is
//! the intersection of the `A_1` columns and `L_j` extends every tuple of
//! `L_{j-1}` by the `A_j` values of its smallest group among the
//! relations containing `A_j`, filtered by semijoins with all of them.
//! Every `L_j` array stays within `(1+λ)·AGM`.

use super::eval::{Evaluation, SizeCheck, Source};
use super::{agm_bound, fractional_cover, ConjunctiveQuery, FractionalCover};
use crate::array_ops::{bounds_by_key, compact_rel, link_rel, sort_rel};
use crate::dbops::{self, compact_groups, inner_params, Variant};
use crate::error::{Error, Result};
use crate::kernel::{Arr, Machine};
use crate::primitives::{check_params, schedule_tasks};
use crate::relstore::{Cell, Domain, RelArray, Slot};

#[derive(Clone, Debug, Default)]
pub struct WcojOptions {
    /// Attribute list; defaults to the variables in order of occurrence.
    pub attr_order: Option<Vec<String>>,
    /// Cover used for the size checks; defaults to a minimum one.
    pub cover: Option<FractionalCover>,
}

fn mul_bound(x: u64, f: f64) -> u64 {
    let v = x as f64 * f;
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        (v + 1e-9).floor() as u64
    }
}

pub fn wcoj(
    m: &mut Machine,
    src: &Source,
    q: &ConjunctiveQuery,
    opts: &WcojOptions,
    lambda: f64,
    epsilon: f64,
) -> Result<Evaluation> {
    check_params(lambda, epsilon)?;
    if !q.is_join_query() {
        return Err(Error::Precondition("quantified variables: not a join query".into()));
    }
    let vars = q.vars();
    let x = match &opts.attr_order {
        None => vars.clone(),
        Some(o) => {
            let mut a = o.clone();
            let mut b = vars.clone();
            a.sort();
            b.sort();
            if a != b {
                return Err(Error::Param(format!("attribute order {o:?} is not a permutation of {vars:?}")));
            }
            o.clone()
        }
    };
    let cover = match &opts.cover {
        Some(c) => c.clone(),
        None => fractional_cover(q)?,
    };
    cover.verify(q)?;
    let (lp, delta) = inner_params(lambda, epsilon);
    let vals = src.values();
    let k = x.len();
    let nrel = q.body.len();

    m.phase("wcoj", |m| {
        // p[i][j]: R_i projected on its attributes among A_1..A_j; p[i][0]
        // is the projection on nothing.
        let mut p: Vec<Vec<RelArray>> = Vec::with_capacity(nrel);
        let mut input = 0u64;
        m.phase("init", |m| {
            for a in &q.body {
                let r = src.load(m, &a.rel, Some(&a.vars))?;
                input = input.max(r.len() as u64);
                let z: Vec<String> = x.iter().filter(|v| a.vars.contains(v)).cloned().collect();
                let mut r = if r.ordered_prefix(&z).is_some() {
                    r
                } else if matches!(r.domain, Domain::Keys { .. }) {
                    sort_rel(m, &r, &z, lp, epsilon)?
                } else {
                    return Err(Error::Precondition(format!(
                        "missing order metadata: {} must be ordered by {z:?}, order is {:?}",
                        a.alias, r.order
                    )));
                };
                if !r.linked {
                    link_rel(m, &mut r, epsilon)?;
                }
                let mut levels = vec![dbops::projection(m, &r, &z, Variant::OrderedIntoOther, vals, epsilon)?];
                for j in (1..=k).rev() {
                    let top = levels.last().unwrap();
                    let next = if a.vars.contains(&x[j - 1]) {
                        let y: Vec<String> = z.iter().filter(|v| x[..j - 1].contains(v)).cloned().collect();
                        dbops::projection(m, top, &y, Variant::OrderedIntoOther, vals, epsilon)?
                    } else {
                        top.clone()
                    };
                    levels.push(next);
                }
                levels.reverse();
                p.push(levels);
            }
            Ok(())
        })?;
        let sizes: Vec<u64> = p.iter().map(|l| l[k].count(m) as u64).collect();
        let agm = agm_bound(&cover, &sizes);
        let cap = mul_bound(agm, 1.0 + lambda);
        let mut checks = Vec::new();
        let rels = |j: usize| -> Vec<usize> { (0..nrel).filter(|&i| q.body[i].vars.contains(&x[j - 1])).collect() };

        let first = rels(1);
        let mut l = m.phase("level", |m| {
            let mut l = dbops::projection(m, &p[first[0]][1], &x[..1], Variant::OrderedIntoOther, vals, epsilon)?;
            for &i in &first[1..] {
                l = dbops::semijoin(m, &l, &p[i][1], Variant::OrderedIntoOther, vals, epsilon)?;
            }
            compact_rel(m, &l, lambda, epsilon)
        })?;
        checks.push(SizeCheck { label: "|L_1|".into(), value: l.len() as u64, bound: cap });

        for j in 2..=k {
            let rj = rels(j);
            l = m.phase("level", |m| {
                // Grouping: P_{i,j} is grouped by its projection link into
                // P_{i,j-1}; each group is compacted in its own range.
                let mut groups: Vec<(Arr<Cell>, Arr<Option<(u32, u32)>>, Arr<Option<u32>>)> = Vec::new();
                for &i in &rj {
                    let (hi_arr, lo_arr) = (&p[i][j], &p[i][j - 1]);
                    let (pa, n, ng) = (hi_arr.arr, hi_arr.len(), lo_arr.len());
                    let lo = m.alloc::<Option<u32>>(ng);
                    let hi = m.alloc::<Option<u32>>(ng);
                    m.step(n, |s, mem, o| {
                        let c = mem.get(pa, s);
                        if !c.live {
                            return;
                        }
                        let g = c.link(Slot::Proj).unwrap();
                        let other = |t: Option<u32>| t.map(|t| mem.get(pa, t as usize).link(Slot::Proj));
                        if other(c.link(Slot::Pred)) != Some(Some(g)) {
                            o.put(lo, g as usize, Some(s as u32));
                        }
                        if other(c.link(Slot::Succ)) != Some(Some(g)) {
                            o.put(hi, g as usize, Some(s as u32));
                        }
                    })?;
                    let (garr, ends) = compact_groups(m, pa, ng, n, lp, delta, move |mem, g| {
                        match (mem.get(lo, g), mem.get(hi, g)) {
                            (Some(a), Some(b)) => Some((a as usize, (b - a + 1) as usize)),
                            _ => None,
                        }
                    })?;
                    // Where each tuple of L_{j-1} sits in P_{i,j-1}.
                    let y = &lo_arr.attrs;
                    let py = l.positions(y)?;
                    let pb: Vec<usize> = (0..y.len()).collect();
                    let la = l.arr;
                    let b = bounds_by_key(m, lo_arr, &pb, l.len(), vals, epsilon, move |mem, t| {
                        let c = mem.get(la, t);
                        c.live.then(|| c.t.project(&py))
                    })?;
                    let at = m.alloc::<Option<u32>>(l.len());
                    let pl = lo_arr.arr;
                    let py = l.positions(y)?;
                    m.step(l.len(), |t, mem, o| {
                        let c = mem.get(la, t);
                        let Some(g) = mem.get(b.ge, t).filter(|_| c.live) else { return };
                        let cand = mem.get(pl, g as usize);
                        if cand.live && vals.eq_tup(cand.t.as_slice(), c.t.project(&py).as_slice()) {
                            o.put(at, t, Some(g));
                        }
                    })?;
                    groups.push((garr, ends, at));
                }
                // Smallest group per tuple; a missing group empties it.
                let nl = l.len();
                let la = l.arr;
                let demand = m.alloc::<u64>(nl);
                let choice = m.alloc::<Option<(u32, u32)>>(nl);
                let gs = groups.clone();
                m.step(nl, |t, mem, o| {
                    if !mem.get(la, t).live {
                        return;
                    }
                    let mut best: Option<(u64, usize, u32)> = None;
                    for (gi, (_, ends, at)) in gs.iter().enumerate() {
                        let range = mem.get(*at, t).and_then(|g| mem.get(*ends, g as usize));
                        let Some((j1, j2)) = range else {
                            return;
                        };
                        let w = (j2 - j1 + 1) as u64;
                        if best.is_none_or(|(bw, _, _)| w < bw) {
                            best = Some((w, gi, j1));
                        }
                    }
                    o.charge(gs.len() as u64);
                    if let Some((w, gi, j1)) = best {
                        o.put(demand, t, w);
                        o.put(choice, t, Some((gi as u32, j1)));
                    }
                })?;
                let sched = schedule_tasks(m, demand, lp, epsilon)?;
                let size = sched.len();
                let out = m.alloc::<Cell>(size);
                let garrs: Vec<Arr<Cell>> = groups.iter().map(|g| g.0).collect();
                m.step(size, |s, mem, o| {
                    let Some((t, lead)) = mem.get(sched.cells, s) else { return };
                    let (gi, j1) = mem.get(choice, t as usize).unwrap();
                    let g = mem.get(garrs[gi as usize], j1 as usize + s - lead as usize);
                    if g.live {
                        let last = g.t.len() - 1;
                        o.put(out, s, Cell::new(mem.get(la, t as usize).t.concat(&g.t, &[last])));
                    }
                })?;
                let mut lj = RelArray {
                    attrs: x[..j].to_vec(),
                    arr: out,
                    order: Vec::new(),
                    linked: false,
                    concise: true,
                    domain: l.domain,
                };
                for &i in &rj {
                    lj = dbops::semijoin(m, &lj, &p[i][j], Variant::OrderedIntoOther, vals, epsilon)?;
                }
                Ok(lj)
            })?;
            checks.push(SizeCheck { label: format!("|L_{j}|"), value: l.len() as u64, bound: cap });
        }

        let result = if k > 1 { compact_rel(m, &l, lambda, epsilon)? } else { l };
        let result = dbops::reorder(m, &result, &q.head)?;
        let out = result.count(m) as u64;
        checks.push(SizeCheck {
            label: "result array".into(),
            value: result.len() as u64,
            bound: mul_bound(out, 1.0 + lambda).max(1),
        });
        let notes = vec![
            format!("attribute order: {}", x.join(", ")),
            format!("cover ({}) AGM {agm}", cover.weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(", ")),
        ];
        let e = Evaluation { result, out, input, checks, notes };
        match e.checks.iter().find(|c| !c.ok()) {
            Some(c) => Err(Error::Assertion(format!("{}: {} > {}", c.label, c.value, c.bound))),
            None => Ok(e),
        }
    })
}
