//! Relational operators over concise relation arrays.

use crate::array_ops::{
    bounds_by_key, compact_rel, dedup_dict, dedup_ordered, link_rel, search_ordered_into_a, search_ordered_into_b,
    search_tuples_dict, sort_rel,
};
use crate::error::{Error, Result};
use crate::kernel::{Arr, Machine, Mem};
use crate::primitives::{approx_compact, schedule_tasks, segmented_compact_plan};
use crate::relstore::{Cell, RelArray, Slot, Token, Tup, Values};

/// Which algorithm an operator runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Hashing in the dictionary setting.
    DictionaryHash,
    /// The second argument is ordered (and fully linked); search into it.
    OrderedIntoOther,
    /// The first argument is ordered; the second searches into it.
    OrderedIntoSelf,
    /// One processor per pair of cells; works in every setting.
    Naive,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dictionary" | "hash" => Ok(Variant::DictionaryHash),
            "ordered" | "ordered-other" => Ok(Variant::OrderedIntoOther),
            "ordered-self" => Ok(Variant::OrderedIntoSelf),
            "naive" => Ok(Variant::Naive),
            _ => Err(Error::Param(format!("unknown variant {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Const {
    Key(u64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pred {
    AttrEq(String, String),
    ConstEq(String, Const),
}

/// λ' and δ used inside the join.
pub fn inner_params(lambda: f64, epsilon: f64) -> (f64, f64) {
    ((lambda / 3.0).min(1.0 / 3.0), (epsilon / 3.0).min(1.0 / 3.0))
}

fn copy_rel(m: &mut Machine, a: &RelArray) -> Result<RelArray> {
    let (src, n) = (a.arr, a.len());
    let arr = m.alloc::<Cell>(n);
    m.step(n, |i, r, o| {
        let c = r.get(src, i);
        if c.live {
            o.put(arr, i, Cell::new(c.t));
        }
    })?;
    Ok(RelArray { arr, linked: false, ..a.clone() })
}

fn need_keys(vals: Values, what: &str) -> Result<()> {
    match vals {
        Values::Keys => Ok(()),
        Values::Tokens(_) => Err(Error::Setting(format!("{what} needs the dictionary setting"))),
    }
}

fn shared(r: &RelArray, s: &RelArray) -> Vec<String> {
    r.attrs.iter().filter(|a| s.attrs.contains(a)).cloned().collect()
}

fn same_schema(r: &RelArray, s: &RelArray) -> Result<()> {
    if r.arity() != s.arity() || !r.attrs.iter().all(|a| s.attrs.contains(a)) {
        return Err(Error::Schema(format!("attribute sets differ: {:?} vs {:?}", r.attrs, s.attrs)));
    }
    Ok(())
}

/// `σ`: failing tuples become uninhabited; size and order are kept.
pub fn selection(m: &mut Machine, a: &RelArray, pred: &Pred, vals: Values) -> Result<RelArray> {
    enum P {
        Attr(usize, usize),
        Key(usize, u64),
        Text(usize, String),
    }
    let p = match pred {
        Pred::AttrEq(x, y) => P::Attr(a.pos(x)?, a.pos(y)?),
        Pred::ConstEq(x, Const::Key(k)) => {
            need_keys(vals, "selection by key")?;
            P::Key(a.pos(x)?, *k)
        }
        Pred::ConstEq(x, Const::Text(t)) => match vals {
            Values::Keys => match t.trim().parse::<u64>() {
                Ok(k) => P::Key(a.pos(x)?, k),
                Err(_) => P::Key(a.pos(x)?, 0),
            },
            Values::Tokens(_) => P::Text(a.pos(x)?, t.clone()),
        },
    };
    let (src, n) = (a.arr, a.len());
    m.phase("selection", |m| {
        let arr = m.alloc::<Cell>(n);
        m.step(n, |i, r, o| {
            let c = r.get(src, i);
            if !c.live {
                return;
            }
            let keep = match &p {
                P::Attr(x, y) => vals.eq(c.t.get(*x), c.t.get(*y)),
                P::Key(x, k) => c.t.get(*x) == *k,
                P::Text(x, t) => match vals {
                    Values::Tokens(db) => db.equal_const(Token::unpack(c.t.get(*x)), t).unwrap_or(false),
                    Values::Keys => false,
                },
            };
            if keep {
                o.put(arr, i, Cell::new(c.t));
            }
        })?;
        Ok(RelArray { arr, linked: false, ..a.clone() })
    })
}

/// Pairwise deduplication (every setting): the first of equal tuples stays.
fn dedup_naive(m: &mut Machine, a: &mut RelArray, vals: Values) -> Result<()> {
    let (arr, n) = (a.arr, a.len());
    let eq = move |r: &Mem, i: usize, j: usize| {
        let (x, y) = (r.get(arr, i), r.get(arr, j));
        x.live && y.live && vals.eq_tup(x.t.as_slice(), y.t.as_slice())
    };
    m.phase("dedup_naive", |m| {
        let dup = m.alloc::<bool>(n);
        m.step(n * n, |x, r, o| {
            let (i, j) = (x / n, x % n);
            if i < j && eq(r, i, j) {
                o.put(dup, j, true);
            }
        })?;
        m.step(n * n, |x, r, o| {
            let (i, j) = (x / n, x % n);
            if r.get(dup, i) || !(i == j || (i < j && eq(r, i, j))) {
                return;
            }
            let c = r.get(arr, j).with(Slot::Rep, Some(i as u32));
            o.put(arr, j, if i == j { c } else { c.dead() });
        })?;
        Ok(())
    })?;
    a.linked = false;
    Ok(())
}

/// `π_X`: one projected tuple per input cell, then deduplication. Input
/// cells get a projection link to their result cell.
pub fn projection(
    m: &mut Machine,
    a: &RelArray,
    x: &[String],
    variant: Variant,
    vals: Values,
    epsilon: f64,
) -> Result<RelArray> {
    let px = a.positions(x)?;
    let mut order: Vec<String> = Vec::new();
    for o in &a.order {
        if x.contains(o) {
            order.push(o.clone());
        } else {
            break;
        }
    }
    if matches!(variant, Variant::OrderedIntoOther | Variant::OrderedIntoSelf) && order.len() < x.len() {
        return Err(Error::Precondition(format!(
            "ordered projection to {x:?} needs an array ordered by them first, order is {:?}",
            a.order
        )));
    }
    if x.is_empty() {
        return m.phase("projection", |m| project_nothing(m, a));
    }
    m.phase("projection", |m| {
        let (src, n) = (a.arr, a.len());
        let arr = m.alloc::<Cell>(n);
        m.step(n, |i, r, o| {
            let c = r.get(src, i);
            if c.live {
                o.put(arr, i, Cell::new(c.t.project(&px)));
            }
        })?;
        let mut out = RelArray { attrs: x.to_vec(), arr, order, linked: false, concise: false, domain: a.domain };
        match variant {
            Variant::DictionaryHash => {
                need_keys(vals, "hash projection")?;
                dedup_dict(m, &mut out, epsilon)?
            }
            Variant::OrderedIntoOther | Variant::OrderedIntoSelf => dedup_ordered(m, &mut out, vals, epsilon)?,
            Variant::Naive => dedup_naive(m, &mut out, vals)?,
        }
        m.step(n, |i, r, o| {
            let c = r.get(src, i);
            if c.live {
                o.put(src, i, c.with(Slot::Proj, r.get(arr, i).link(Slot::Rep)));
            }
        })?;
        out.concise = true;
        Ok(out)
    })
}

/// `π_∅`: one cell, inhabited by the empty tuple iff `a` has a tuple.
fn project_nothing(m: &mut Machine, a: &RelArray) -> Result<RelArray> {
    let (src, n) = (a.arr, a.len());
    let arr = m.alloc::<Cell>(1);
    m.step(n, |i, r, o| {
        let c = r.get(src, i);
        if c.live {
            o.put(arr, 0, Cell::new(Tup::new(&[])));
            o.put(src, i, c.with(Slot::Proj, Some(0)));
        }
    })?;
    Ok(RelArray { attrs: Vec::new(), arr, order: Vec::new(), linked: true, concise: true, domain: a.domain })
}

/// Sets partner slots of a fresh copy of `r` (cells of `s` agreeing on
/// `x`), per variant. Naive search records only whether a partner exists.
fn partners(m: &mut Machine, r: &RelArray, s: &RelArray, x: &[String], variant: Variant, vals: Values, epsilon: f64) -> Result<RelArray> {
    let out = copy_rel(m, r)?;
    match variant {
        Variant::DictionaryHash => {
            need_keys(vals, "hash search")?;
            search_tuples_dict(m, &out, s, x, epsilon)?;
        }
        Variant::OrderedIntoOther => {
            let p = s.ordered_prefix(x).ok_or_else(|| {
                Error::Precondition(format!("second array must be ordered by {x:?} first, order is {:?}", s.order))
            })?;
            let b = search_ordered_into_b(m, &out, s, &p, vals, epsilon)?;
            let (pr, ps) = (out.positions(&p)?, s.positions(&p)?);
            let (oa, sa) = (out.arr, s.arr);
            m.step(out.len(), |i, mem, o| {
                let c = mem.get(oa, i);
                if !c.live {
                    return;
                }
                let hit = mem.get(b.le, i).filter(|&j| {
                    vals.eq_tup(mem.get(sa, j as usize).t.project(&ps).as_slice(), c.t.project(&pr).as_slice())
                });
                o.put(oa, i, c.with(Slot::Partner, hit));
            })?;
        }
        Variant::OrderedIntoSelf => {
            let p = out.ordered_prefix(x).ok_or_else(|| {
                Error::Precondition(format!("first array must be ordered by {x:?} first, order is {:?}", out.order))
            })?;
            search_ordered_into_a(m, &out, s, &p, vals, epsilon)?;
        }
        Variant::Naive => {
            let (pr, ps) = (out.positions(x)?, s.positions(x)?);
            let (oa, sa) = (out.arr, s.arr);
            let (nr, ns) = (out.len(), s.len());
            let hit = m.alloc::<bool>(nr);
            m.step(nr * ns, |q, mem, o| {
                let (i, j) = (q / ns.max(1), q % ns.max(1));
                let (a, b) = (mem.get(oa, i), mem.get(sa, j));
                if a.live && b.live && vals.eq_tup(a.t.project(&pr).as_slice(), b.t.project(&ps).as_slice()) {
                    o.put(hit, i, true);
                }
            })?;
            m.step(nr, |i, mem, o| {
                let c = mem.get(oa, i);
                if c.live {
                    o.put(oa, i, c.with(Slot::Partner, mem.get(hit, i).then_some(u32::MAX)));
                }
            })?;
        }
    }
    Ok(out)
}

fn keep_where(m: &mut Machine, a: RelArray, matched: bool) -> Result<RelArray> {
    let arr = a.arr;
    m.step(a.len(), |i, r, o| {
        let c = r.get(arr, i);
        if c.live && c.link(Slot::Partner).is_some() != matched {
            o.put(arr, i, c.dead());
        }
    })?;
    Ok(a)
}

/// `R ⋉ S` over the shared attributes. Output has `|R|` cells, keeps R's
/// order, and links every tuple to a partner in S (except the naive variant).
pub fn semijoin(m: &mut Machine, r: &RelArray, s: &RelArray, variant: Variant, vals: Values, epsilon: f64) -> Result<RelArray> {
    let x = shared(r, s);
    m.phase("semijoin", |m| {
        let out = partners(m, r, s, &x, variant, vals, epsilon)?;
        keep_where(m, out, true)
    })
}

/// `R ∖ S` (same attribute sets). Output has `|R|` cells in R's order.
pub fn difference(m: &mut Machine, r: &RelArray, s: &RelArray, variant: Variant, vals: Values, epsilon: f64) -> Result<RelArray> {
    same_schema(r, s)?;
    let x = match variant {
        Variant::OrderedIntoOther if s.fully_ordered() => s.order.clone(),
        Variant::OrderedIntoSelf if r.fully_ordered() => r.order.clone(),
        Variant::OrderedIntoOther | Variant::OrderedIntoSelf => {
            return Err(Error::Precondition("ordered difference needs a fully ordered array".into()))
        }
        _ => r.attrs.clone(),
    };
    m.phase("difference", |m| {
        let out = partners(m, r, s, &x, variant, vals, epsilon)?;
        keep_where(m, out, false)
    })
}

/// `R ∪ S` as `(R ∖ S)` followed by S; `|R| + |S|` cells.
pub fn union(m: &mut Machine, r: &RelArray, s: &RelArray, variant: Variant, vals: Values, epsilon: f64) -> Result<RelArray> {
    same_schema(r, s)?;
    let ps = s.positions(&r.attrs)?;
    m.phase("union", |m| {
        let d = difference(m, r, s, variant, vals, epsilon)?;
        let (da, sa) = (d.arr, s.arr);
        let (nr, ns) = (d.len(), s.len());
        let arr = m.alloc::<Cell>(nr + ns);
        m.step(nr + ns, |i, mem, o| {
            let c = if i < nr { mem.get(da, i) } else { mem.get(sa, i - nr) };
            if c.live {
                let t = if i < nr { c.t } else { c.t.project(&ps) };
                o.put(arr, i, Cell::new(t));
            }
        })?;
        Ok(RelArray { attrs: r.attrs.clone(), arr, order: Vec::new(), linked: false, concise: true, domain: r.domain })
    })
}

/// `R ⋈ S` with output attributes R followed by S's other attributes, in
/// an array of at most `(1+λ)|R ⋈ S|` cells.
pub fn join(
    m: &mut Machine,
    r: &RelArray,
    s: &RelArray,
    variant: Variant,
    vals: Values,
    lambda: f64,
    epsilon: f64,
) -> Result<RelArray> {
    crate::primitives::check_params(lambda, epsilon)?;
    m.phase("join", |m| match variant {
        Variant::DictionaryHash => {
            need_keys(vals, "hash join")?;
            let x = shared(r, s);
            let (lp, _) = inner_params(lambda, epsilon);
            let sorted = m.phase("sort", |m| sort_rel(m, s, &x, lp, epsilon))?;
            join_ordered(m, r, &sorted, vals, lambda, epsilon)
        }
        Variant::OrderedIntoOther => join_ordered(m, r, s, vals, lambda, epsilon),
        Variant::OrderedIntoSelf => {
            let j = join_ordered(m, s, r, vals, lambda, epsilon)?;
            let mut attrs = r.attrs.clone();
            attrs.extend(s.attrs.iter().filter(|a| !r.attrs.contains(a)).cloned());
            reorder(m, &j, &attrs)
        }
        Variant::Naive => join_naive(m, r, s, vals, lambda, epsilon),
    })
}

/// Permutes the columns of every cell to the given attribute list.
pub fn reorder(m: &mut Machine, a: &RelArray, attrs: &[String]) -> Result<RelArray> {
    let p = a.positions(attrs)?;
    if p.iter().enumerate().all(|(i, &q)| i == q) {
        return Ok(a.clone());
    }
    let (src, n) = (a.arr, a.len());
    let arr = m.alloc::<Cell>(n);
    m.step(n, |i, r, o| {
        let c = r.get(src, i);
        if c.live {
            o.put(arr, i, Cell::new(c.t.project(&p)));
        }
    })?;
    Ok(RelArray { attrs: attrs.to_vec(), arr, order: a.order.clone(), linked: false, ..a.clone() })
}

fn output_attrs(r: &RelArray, s: &RelArray) -> (Vec<String>, Vec<usize>) {
    let mut attrs = r.attrs.clone();
    let mut rest = Vec::new();
    for (k, a) in s.attrs.iter().enumerate() {
        if !r.attrs.contains(a) {
            attrs.push(a.clone());
            rest.push(k);
        }
    }
    (attrs, rest)
}

fn join_naive(m: &mut Machine, r: &RelArray, s: &RelArray, vals: Values, lambda: f64, epsilon: f64) -> Result<RelArray> {
    let x = shared(r, s);
    let (pr, ps) = (r.positions(&x)?, s.positions(&x)?);
    let (attrs, rest) = output_attrs(r, s);
    let (ra, sa, nr, ns) = (r.arr, s.arr, r.len(), s.len());
    let pairs = m.alloc::<Option<Tup>>(nr * ns);
    m.step(nr * ns, |q, mem, o| {
        let (a, b) = (mem.get(ra, q / ns), mem.get(sa, q % ns));
        if a.live && b.live && vals.eq_tup(a.t.project(&pr).as_slice(), b.t.project(&ps).as_slice()) {
            o.put(pairs, q, Some(a.t.concat(&b.t, &rest)));
        }
    })?;
    let c = approx_compact(m, pairs, lambda, epsilon)?;
    let arr = m.alloc::<Cell>(c.out.len());
    m.step(c.out.len(), |i, mem, o| {
        if let Some(t) = mem.get(c.out, i) {
            o.put(arr, i, Cell::new(t));
        }
    })?;
    Ok(RelArray { attrs, arr, order: Vec::new(), linked: false, concise: true, domain: r.domain })
}

/// The nine-step join; `s` must be fully ordered starting with the shared
/// attributes.
fn join_ordered(m: &mut Machine, r: &RelArray, s: &RelArray, vals: Values, lambda: f64, epsilon: f64) -> Result<RelArray> {
    vals.require_order()?;
    let x0 = shared(r, s);
    let x = s.ordered_prefix(&x0).filter(|_| s.fully_ordered()).ok_or_else(|| {
        Error::Precondition(format!("join needs the second array fully ordered by {x0:?} first, order is {:?}", s.order))
    })?;
    let (lp, delta) = inner_params(lambda, epsilon);
    let (attrs, rest) = output_attrs(r, s);
    let pr = r.positions(&x)?;
    let ps = s.positions(&x)?;

    // (1) A1 = R ⋉ S, λ'-compact.
    let a1 = m.phase("step1", |m| {
        let mut s_l = s.clone();
        if !s_l.linked {
            s_l = copy_rel(m, s)?;
            link_rel(m, &mut s_l, epsilon)?;
        }
        let sj = semijoin(m, r, &s_l, Variant::OrderedIntoOther, vals, epsilon)?;
        compact_rel(m, &sj, lp, epsilon)
    })?;
    // (2)-(3) B1 = S ⋉ R, X-ordered, fully linked.
    let mut b1 = m.phase("step2", |m| semijoin(m, s, r, Variant::OrderedIntoSelf, vals, epsilon))?;
    m.phase("step3", |m| link_rel(m, &mut b1, epsilon))?;
    // (4) B2 = π_X(B1); representatives sit at the first cell of their group.
    let b2 = m.phase("step4", |m| projection(m, &b1, &x, Variant::OrderedIntoOther, vals, epsilon))?;
    let (b1a, b2a) = (b1.arr, b2.arr);
    let (n1, n2) = (b1a.len(), b2a.len());
    let ident: Vec<usize> = (0..x.len()).collect();

    // (5) group ends i1, i2 of every representative.
    let g = m.phase("step5", |m| {
        bounds_by_key(m, &b1, &ps, n2, vals, epsilon, |mem, q| {
            let c = mem.get(b2a, q);
            c.live.then(|| c.t.project(&ident))
        })
    })?;

    // (6)-(7) per-group compaction of B1 into B3, with the new group ends.
    let (b3, j12) = m.phase("step6", |m| {
        compact_groups(m, b1a, n2, n1, lp, delta, move |mem, q| {
            let (i1, i2) = (mem.get(g.ge, q)?, mem.get(g.le, q)?);
            Some((i1 as usize, (i2 - i1) as usize + 1))
        })
    })?;

    // (8) s(t) for every tuple of A1: the first cell of its group in B1.
    let a1a = a1.arr;
    let st = m.phase("step8", |m| {
        bounds_by_key(m, &b1, &ps, a1a.len(), vals, epsilon, |mem, i| {
            let c = mem.get(a1a, i);
            c.live.then(|| c.t.project(&pr))
        })
    })?;

    // (9) every A1 tuple combines with its group in B3.
    m.phase("step9", |m| {
        let na = a1a.len();
        let span = move |mem: &Mem, i: usize| -> Option<(u32, u32)> {
            let k = mem.get(st.ge, i)?;
            let q = mem.get(b1a, k as usize).link(Slot::Proj)?;
            mem.get(j12, q as usize)
        };
        let demand = m.alloc::<u64>(na);
        m.step(na, |i, mem, o| {
            if !mem.get(a1a, i).live {
                return;
            }
            match span(mem, i) {
                Some((j1, j2)) => o.put(demand, i, (j2 - j1) as u64 + 1),
                None => o.fail(Error::Assertion("semijoin tuple without a group".into())),
            }
        })?;
        let sched = schedule_tasks(m, demand, lp, epsilon)?;
        let arr = m.alloc::<Cell>(sched.len());
        m.step(sched.len(), |p, mem, o| {
            let Some((i, k)) = mem.get(sched.cells, p) else { return };
            let (j1, _) = span(mem, i as usize).unwrap();
            let b = mem.get(b3, j1 as usize + p - k as usize);
            if b.live {
                o.put(arr, p, Cell::new(mem.get(a1a, i as usize).t.concat(&b.t, &rest)));
            }
        })?;
        Ok(RelArray { attrs, arr, order: Vec::new(), linked: false, concise: true, domain: r.domain })
    })
}

/// Compacts groups of `src` in parallel. `group(q)` for `q < ngroups` is a
/// range `(start, width)` whose first and last cells are inhabited. Each
/// group gets `max(⌈w^{1+δ}⌉, ⌊(1+λ')w⌋)` scheduled cells and is compacted
/// within them; returns the compacted cells (partner slot = source index)
/// and per group the first and last index of its compacted range.
pub(crate) fn compact_groups<G>(
    m: &mut Machine,
    src: Arr<Cell>,
    ngroups: usize,
    maxlen: usize,
    lp: f64,
    delta: f64,
    group: G,
) -> Result<(Arr<Cell>, Arr<Option<(u32, u32)>>)>
where
    G: Fn(&Mem, usize) -> Option<(usize, usize)> + Copy,
{
    let demand = m.alloc::<u64>(ngroups);
    m.step(ngroups, |q, mem, o| {
        if let Some((_, w)) = group(mem, q) {
            let grow = (w as f64).powf(1.0 + delta).ceil() as u64;
            let pad = ((1.0 + lp) * w as f64).floor() as u64;
            o.put(demand, q, grow.max(pad).max(w as u64));
        }
    })?;
    let sched = schedule_tasks(m, demand, lp, delta)?;
    let size = sched.len();
    let ind = m.alloc::<u64>(size);
    let start = m.alloc::<Option<u32>>(size);
    let seglen = m.alloc::<u32>(size);
    m.step(size, |p, mem, o| {
        let Some((q, k)) = mem.get(sched.cells, p) else { return };
        let Some((i1, w)) = group(mem, q as usize) else { return };
        let e = p - k as usize;
        if e < w {
            o.put(ind, p, mem.get(src, i1 + e).live as u64);
            o.put(start, p, Some(k));
            o.put(seglen, p, w as u32);
        }
    })?;
    let pos = segmented_compact_plan(m, ind, start, seglen, maxlen.max(1), lp, delta)?;
    let out = m.alloc::<Cell>(size);
    m.step(size, |p, mem, o| {
        if mem.get(ind, p) == 1 {
            let (q, k) = mem.get(sched.cells, p).unwrap();
            let (i1, _) = group(mem, q as usize).unwrap();
            let from = i1 + p - k as usize;
            let to = k as usize + mem.get(pos, p) as usize - 1;
            o.put(out, to, Cell::new(mem.get(src, from).t).with(Slot::Partner, Some(from as u32)));
        }
    })?;
    let ends = m.alloc::<Option<(u32, u32)>>(ngroups);
    m.step(ngroups, |q, mem, o| {
        let (Some((_, w)), Some(k)) = (group(mem, q), mem.get(sched.leads, q)) else { return };
        let k = k as usize;
        let j1 = k + mem.get(pos, k) as usize - 1;
        let j2 = k + mem.get(pos, k + w - 1) as usize - 1;
        o.put(ends, q, Some((j1 as u32, j2 as u32)));
    })?;
    Ok((out, ends))
}

/// Relation array over keys from host rows.
pub fn keys_rel(m: &mut Machine, attrs: &[&str], rows: &[Vec<u64>], vmax: u64) -> RelArray {
    RelArray::from_rows(m, attrs.iter().map(|s| s.to_string()).collect(), rows, vmax)
}
