//! Yannakakis-style evaluation of acyclic queries, its free-connex and
//! decomposition-based variants, and semijoin-algebra plans.

use serde::Serialize;

use super::tree::head_tree;
use super::{gyo_join_tree, Atom, ConjunctiveQuery, Ghd, JoinTree, Plan};
use crate::array_ops::{compact_rel, link_rel};
use crate::dbops::{self, Const, Pred, Variant};
use crate::error::{Error, Result};
use crate::kernel::Machine;
use crate::relstore::{
    build_dictionary_aordered, build_dictionary_general, Database, Dictionary, Domain, RelArray, Setting, Token,
    Values,
};

/// Relations of a database as arrays of keys: the values themselves in the
/// dictionary setting, otherwise keys from a dictionary built on the
/// machine. [`Source::tokens`] keeps token arrays instead.
pub struct Source<'a> {
    pub db: &'a Database,
    dict: Option<Dictionary>,
    tokens: bool,
}

impl<'a> Source<'a> {
    pub fn new(m: &mut Machine, db: &'a Database, epsilon: f64) -> Result<Source<'a>> {
        let dict = match db.setting {
            Setting::Dictionary => None,
            Setting::General => Some(m.phase("dictionary", |m| build_dictionary_general(m, db))?),
            Setting::Ordered => {
                let orders = db.attribute_orders()?;
                Some(m.phase("dictionary", |m| build_dictionary_aordered(m, db, &orders, epsilon))?)
            }
        };
        Ok(Source { db, dict, tokens: false })
    }

    pub fn tokens(db: &'a Database) -> Source<'a> {
        Source { db, dict: None, tokens: true }
    }

    pub fn dictionary(&self) -> Option<&Dictionary> {
        self.dict.as_ref()
    }

    pub fn load(&self, m: &mut Machine, rel: &str, attrs: Option<&[String]>) -> Result<RelArray> {
        if self.tokens {
            return self.db.load_tokens(m, rel, attrs);
        }
        match &self.dict {
            None => self.db.load_keys(m, rel, attrs),
            Some(d) => d.load_relation(m, self.db, rel, attrs),
        }
    }

    fn load_atoms(&self, m: &mut Machine, q: &ConjunctiveQuery) -> Result<Vec<RelArray>> {
        q.body.iter().map(|a| self.load(m, &a.rel, Some(&a.vars))).collect()
    }

    pub fn values(&self) -> Values<'a> {
        if self.tokens {
            Values::Tokens(self.db)
        } else {
            Values::Keys
        }
    }

    /// Inhabited tuples as value strings, in array order.
    pub fn decode(&self, m: &Machine, a: &RelArray) -> Result<Vec<Vec<String>>> {
        let rows = a.rows(m);
        match (a.domain, &self.dict) {
            (Domain::Tokens, _) => rows
                .iter()
                .map(|r| r.iter().map(|&t| Ok(self.db.value(Token::unpack(t))?.to_string())).collect())
                .collect(),
            (Domain::Keys { .. }, Some(d)) => d.decode(m, self.db, &rows),
            (Domain::Keys { .. }, None) => {
                Ok(rows.iter().map(|r| r.iter().map(|k| k.to_string()).collect()).collect())
            }
        }
    }

    /// Key used for a literal in selections.
    fn constant(&self, m: &mut Machine, c: &Const) -> Result<Const> {
        match (c, &self.dict) {
            (Const::Text(s), Some(d)) if !self.tokens => Ok(Const::Key(d.lookup_const(m, self.db, s)?.unwrap_or(0))),
            _ => Ok(c.clone()),
        }
    }
}

/// A size bound checked during evaluation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SizeCheck {
    pub label: String,
    pub value: u64,
    pub bound: u64,
}

impl SizeCheck {
    pub fn ok(&self) -> bool {
        self.value <= self.bound
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub result: RelArray,
    /// Number of tuples in the result.
    pub out: u64,
    /// Largest input array.
    pub input: u64,
    pub checks: Vec<SizeCheck>,
    pub notes: Vec<String>,
}

impl Evaluation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(SizeCheck::ok)
    }

    /// Fails on the first violated size bound.
    fn enforce(self) -> Result<Evaluation> {
        match self.checks.iter().find(|c| !c.ok()) {
            Some(c) => Err(Error::Assertion(format!("{}: {} > {}", c.label, c.value, c.bound))),
            None => Ok(self),
        }
    }
}

fn bound_mul(a: u64, f: f64) -> u64 {
    let v = a as f64 * f;
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        (v + 1e-9).floor() as u64
    }
}

fn max_len(rels: &[RelArray]) -> u64 {
    rels.iter().map(|r| r.len() as u64).max().unwrap_or(0)
}

const HASH: Variant = Variant::DictionaryHash;

/// Bottom-up then top-down semijoin passes along `tree`.
fn reduce(m: &mut Machine, tree: &JoinTree, mut s: Vec<RelArray>, epsilon: f64) -> Result<Vec<RelArray>> {
    m.phase("full_reduction", |m| {
        for v in tree.bottom_up() {
            for &w in &tree.children[v] {
                s[v] = dbops::semijoin(m, &s[v], &s[w], HASH, Values::Keys, epsilon)?;
            }
        }
        for v in tree.top_down() {
            for &w in &tree.children[v] {
                s[w] = dbops::semijoin(m, &s[w], &s[v], HASH, Values::Keys, epsilon)?;
            }
        }
        Ok(s)
    })
}

/// Full reduction of the query's relations along a join tree; one array
/// per body atom, attributes named by the atom's variables.
pub fn full_reduction(
    m: &mut Machine,
    src: &Source,
    q: &ConjunctiveQuery,
    tree: &JoinTree,
    epsilon: f64,
) -> Result<Vec<RelArray>> {
    let sets: Vec<Vec<String>> = q.body.iter().map(|a| a.vars.clone()).collect();
    if tree.len() != q.body.len() || !tree.is_connected_for(&sets) {
        return Err(Error::Precondition("not a join tree of the query".into()));
    }
    let rels = src.load_atoms(m, q)?;
    reduce(m, tree, rels, epsilon)
}

/// `{()}` if every array has a tuple, else `∅` (arity 0).
fn boolean(m: &mut Machine, s: &[RelArray]) -> Result<RelArray> {
    let mut acc: Option<RelArray> = None;
    for r in s {
        let p = dbops::projection(m, r, &[], HASH, Values::Keys, 0.5)?;
        acc = Some(match acc {
            None => p,
            Some(a) => {
                let (x, y) = (a.arr, p.arr);
                m.step(1, |_, mem, o| {
                    if !mem.get(y, 0).live {
                        o.put(x, 0, mem.get(x, 0).dead());
                    }
                })?;
                a
            }
        });
    }
    acc.ok_or_else(|| Error::Param("empty query".into()))
}

struct Run {
    checks: Vec<(String, u64)>,
    notes: Vec<String>,
}

fn yannakakis(
    m: &mut Machine,
    head: &[String],
    rels: Vec<RelArray>,
    tree: &JoinTree,
    lambda: f64,
    epsilon: f64,
    run: &mut Run,
) -> Result<RelArray> {
    let mut s = reduce(m, tree, rels, epsilon)?;
    if head.is_empty() {
        return boolean(m, &s);
    }
    m.phase("bottom_up_joins", |m| {
        for v in tree.bottom_up() {
            for &w in &tree.children[v] {
                let mut keep = s[v].attrs.clone();
                keep.extend(head.iter().filter(|x| !s[v].attrs.contains(x)).cloned());
                let sw_attrs: Vec<String> = s[w].attrs.iter().filter(|x| keep.contains(x)).cloned().collect();
                let sw = if sw_attrs.len() < s[w].arity() {
                    dbops::projection(m, &s[w], &sw_attrs, HASH, Values::Keys, epsilon)?
                } else {
                    s[w].clone()
                };
                s[v] = dbops::join(m, &s[v], &sw, HASH, Values::Keys, lambda, epsilon)?;
                run.checks.push((format!("|S_{v}| after joining child {w}"), s[v].count(m) as u64));
            }
        }
        Ok(())
    })?;
    let root = &s[tree.root];
    let p = dbops::projection(m, root, head, HASH, Values::Keys, epsilon)?;
    m.phase("final_compaction", |m| compact_rel(m, &p, lambda, epsilon))
}

fn finish(m: &Machine, result: RelArray, input: u64, lambda: f64, inner: Vec<SizeCheck>, run: Run, per_out: impl Fn(u64) -> u64) -> Result<Evaluation> {
    let out = result.count(m) as u64;
    let mut checks = inner;
    for (label, value) in run.checks {
        checks.push(SizeCheck { label, value, bound: per_out(out) });
    }
    checks.push(SizeCheck { label: "result array".into(), value: result.len() as u64, bound: bound_mul(out, 1.0 + lambda).max(1) });
    Evaluation { result, out, input, checks, notes: run.notes }.enforce()
}

/// Acyclic conjunctive query: full reduction, bottom-up joins with
/// projection to the free variables plus the node's attributes, final
/// projection and compaction. Every `|S_v|` is checked against `IN·OUT`.
pub fn eval_acyclic(m: &mut Machine, src: &Source, q: &ConjunctiveQuery, lambda: f64, epsilon: f64) -> Result<Evaluation> {
    crate::primitives::check_params(lambda, epsilon)?;
    let tree = gyo_join_tree(q).ok_or_else(|| Error::Precondition("query is cyclic".into()))?;
    let rels = src.load_atoms(m, q)?;
    let input = max_len(&rels);
    let mut run = Run { checks: Vec::new(), notes: Vec::new() };
    let result = m.phase("eval_acyclic", |m| yannakakis(m, &q.head, rels, &tree, lambda, epsilon, &mut run))?;
    finish(m, result, input, lambda, Vec::new(), run, |out| input.saturating_mul(out))
}

/// Free-connex evaluation after full reduction: join, left to right, the
/// projections to the free variables of the atoms adjacent to the head atom
/// in a join tree of the query extended by the head. Every intermediate is
/// a projection of the result and is checked against `OUT`.
fn free_connex_core(
    m: &mut Machine,
    q: &ConjunctiveQuery,
    rels: Vec<RelArray>,
    tree: &JoinTree,
    lambda: f64,
    epsilon: f64,
    run: &mut Run,
) -> Result<RelArray> {
    let ext = head_tree(q).ok_or_else(|| Error::Precondition("query is not free-connex".into()))?;
    let s = reduce(m, tree, rels, epsilon)?;
    if q.head.is_empty() {
        return boolean(m, &s);
    }
    let h = q.body.len();
    let nbrs = ext.neighbours(h);
    run.notes.push(format!(
        "join order: {}",
        nbrs.iter().map(|&v| q.body[v].alias.as_str()).collect::<Vec<_>>().join(", ")
    ));
    m.phase("free_connex_joins", |m| {
        let mut acc: Option<RelArray> = None;
        let mut joined = false;
        for &v in &nbrs {
            let x: Vec<String> = s[v].attrs.iter().filter(|a| q.head.contains(a)).cloned().collect();
            if x.is_empty() {
                continue;
            }
            let p = dbops::projection(m, &s[v], &x, HASH, Values::Keys, epsilon)?;
            run.checks.push((format!("|π({})|", q.body[v].alias), p.count(m) as u64));
            acc = Some(match acc {
                None => p,
                Some(a) => {
                    let j = dbops::join(m, &a, &p, HASH, Values::Keys, lambda, epsilon)?;
                    run.checks.push((format!("join with {}", q.body[v].alias), j.count(m) as u64));
                    joined = true;
                    j
                }
            });
        }
        let acc = acc.ok_or_else(|| Error::Assertion("no atom adjacent to the head holds a free variable".into()))?;
        let acc = if joined { acc } else { compact_rel(m, &acc, lambda, epsilon)? };
        dbops::reorder(m, &acc, &q.head)
    })
}

pub fn eval_free_connex(
    m: &mut Machine,
    src: &Source,
    q: &ConjunctiveQuery,
    lambda: f64,
    epsilon: f64,
) -> Result<Evaluation> {
    crate::primitives::check_params(lambda, epsilon)?;
    let tree = gyo_join_tree(q).ok_or_else(|| Error::Precondition("query is cyclic".into()))?;
    let rels = src.load_atoms(m, q)?;
    let input = max_len(&rels);
    let mut run = Run { checks: Vec::new(), notes: Vec::new() };
    let result = m.phase("eval_free_connex", |m| free_connex_core(m, q, rels, &tree, lambda, epsilon, &mut run))?;
    finish(m, result, input, lambda, Vec::new(), run, |out| out)
}

/// Evaluation along a generalised hypertree decomposition: every bag joins
/// its atoms and projects to its variables (intermediates checked against
/// `IN^width`); the bag relations then form an acyclic query with the
/// decomposition as join tree, evaluated free-connex when the decomposition
/// is free-connex.
pub fn eval_ghd(
    m: &mut Machine,
    src: &Source,
    q: &ConjunctiveQuery,
    ghd: &Ghd,
    lambda: f64,
    epsilon: f64,
) -> Result<Evaluation> {
    crate::primitives::check_params(lambda, epsilon)?;
    ghd.verify(q)?;
    let g = ghd.complete(q);
    let width = g.width() as u32;
    let rels = src.load_atoms(m, q)?;
    let input = max_len(&rels);
    let cap = input.saturating_pow(width);
    let mut inner = Vec::new();
    let mut run = Run { checks: Vec::new(), notes: vec![format!("width {width}")] };
    let result = m.phase("eval_ghd", |m| {
        let mut bags = Vec::new();
        for node in &g.nodes {
            let bag = m.phase("bag", |m| {
                let mut acc: Option<RelArray> = None;
                for a in &node.mu {
                    let r = &rels[q.atom(a).unwrap()];
                    acc = Some(match acc {
                        None => r.clone(),
                        Some(x) => {
                            let j = dbops::join(m, &x, r, HASH, Values::Keys, lambda, epsilon)?;
                            inner.push(SizeCheck { label: format!("bag {} join", node.id), value: j.count(m) as u64, bound: cap });
                            j
                        }
                    });
                }
                let acc = acc.unwrap();
                let bag = dbops::projection(m, &acc, &node.chi, HASH, Values::Keys, epsilon)?;
                inner.push(SizeCheck { label: format!("bag {}", node.id), value: bag.count(m) as u64, bound: cap });
                Ok(bag)
            })?;
            bags.push(bag);
        }
        let body: Vec<Atom> = g
            .nodes
            .iter()
            .map(|n| Atom { rel: format!("bag {}", n.id), alias: format!("bag {}", n.id), vars: n.chi.clone() })
            .collect();
        let q2 = ConjunctiveQuery { name: q.name.clone(), head: q.head.clone(), body };
        if g.is_free_connex(q) && head_tree(&q2).is_some() {
            run.notes.push("free-connex decomposition".into());
            free_connex_core(m, &q2, bags, &g.tree, lambda, epsilon, &mut run)
        } else {
            yannakakis(m, &q.head, bags, &g.tree, lambda, epsilon, &mut run)
        }
    })?;
    let fc = run.notes.iter().any(|n| n == "free-connex decomposition");
    let bag_in = input.saturating_pow(width);
    finish(m, result, input, lambda, inner, run, |out| if fc { out } else { bag_in.saturating_mul(out) })
}

/// Which operator algorithms a plan uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanMode {
    /// Hashing over keys.
    Dictionary,
    /// Order-based searches over token arrays; inputs must carry the
    /// orders the operators need.
    Ordered,
    /// Pairwise comparisons over token arrays.
    Naive,
}

impl std::str::FromStr for PlanMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dictionary" => Ok(PlanMode::Dictionary),
            "ordered" => Ok(PlanMode::Ordered),
            "naive" => Ok(PlanMode::Naive),
            _ => Err(Error::Param(format!("unknown plan mode {s:?}"))),
        }
    }
}

/// Semijoin-algebra plan. In dictionary mode `src` must produce keys; in
/// the other modes, tokens (see [`Source::tokens`]).
pub fn eval_semijoin_plan(m: &mut Machine, src: &Source, plan: &Plan, mode: PlanMode, epsilon: f64) -> Result<Evaluation> {
    crate::primitives::check_params(1.0, epsilon)?;
    if (mode == PlanMode::Dictionary) == src.tokens {
        return Err(Error::Setting(format!("{mode:?} plans need {} arrays", if src.tokens { "key" } else { "token" })));
    }
    let mut input = 0u64;
    let result = m.phase("eval_plan", |m| plan_rec(m, src, plan, mode, epsilon, &mut input))?;
    let out = result.count(m) as u64;
    let notes = vec![format!("result array {} cells for IN = {input}", result.len())];
    Ok(Evaluation { result, out, input, checks: Vec::new(), notes })
}

fn ordered(a: &RelArray, x: &[String]) -> bool {
    a.ordered_prefix(x).is_some()
}

fn linked(m: &mut Machine, a: &RelArray, epsilon: f64) -> Result<RelArray> {
    let mut b = a.clone();
    if !b.linked {
        link_rel(m, &mut b, epsilon)?;
    }
    Ok(b)
}

fn plan_rec(m: &mut Machine, src: &Source, plan: &Plan, mode: PlanMode, epsilon: f64, input: &mut u64) -> Result<RelArray> {
    let vals = src.values();
    Ok(match plan {
        Plan::Rel(r) => {
            let a = src.load(m, r, None)?;
            *input = (*input).max(a.len() as u64);
            a
        }
        Plan::Select(p, sub) => {
            let a = plan_rec(m, src, sub, mode, epsilon, input)?;
            let p = match p {
                Pred::ConstEq(x, c) => Pred::ConstEq(x.clone(), src.constant(m, c)?),
                p => p.clone(),
            };
            dbops::selection(m, &a, &p, vals)?
        }
        Plan::Project(x, sub) => {
            let a = plan_rec(m, src, sub, mode, epsilon, input)?;
            let v = match mode {
                PlanMode::Dictionary => HASH,
                PlanMode::Ordered => Variant::OrderedIntoOther,
                PlanMode::Naive => Variant::Naive,
            };
            dbops::projection(m, &a, x, v, vals, epsilon)?
        }
        Plan::Rename(x, sub) => {
            let a = plan_rec(m, src, sub, mode, epsilon, input)?;
            if x.len() != a.arity() {
                return Err(Error::Schema(format!("rename to {x:?} of a relation over {:?}", a.attrs)));
            }
            a.rename(x.clone())
        }
        Plan::Union(l, r) | Plan::Diff(l, r) | Plan::Semijoin(l, r) => {
            let a = plan_rec(m, src, l, mode, epsilon, input)?;
            let b = plan_rec(m, src, r, mode, epsilon, input)?;
            let x: Vec<String> = match plan {
                Plan::Semijoin(..) => a.attrs.iter().filter(|t| b.attrs.contains(t)).cloned().collect(),
                _ => a.attrs.clone(),
            };
            let (v, b) = match mode {
                PlanMode::Dictionary => (HASH, b),
                PlanMode::Naive => (Variant::Naive, b),
                PlanMode::Ordered => {
                    if ordered(&b, &x) && b.fully_ordered() {
                        (Variant::OrderedIntoOther, linked(m, &b, epsilon)?)
                    } else if ordered(&a, &x) && (matches!(plan, Plan::Semijoin(..)) || a.fully_ordered()) {
                        (Variant::OrderedIntoSelf, b)
                    } else {
                        return Err(Error::Precondition(format!(
                            "missing order metadata: neither {:?} (order {:?}) nor {:?} (order {:?}) is ordered by {x:?}",
                            a.attrs, a.order, b.attrs, b.order
                        )));
                    }
                }
            };
            match plan {
                Plan::Union(..) => dbops::union(m, &a, &b, v, vals, epsilon)?,
                Plan::Diff(..) => dbops::difference(m, &a, &b, v, vals, epsilon)?,
                _ => dbops::semijoin(m, &a, &b, v, vals, epsilon)?,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::MachineConfig;
    use crate::query::{parse_plan, parse_query, Query};
    use std::collections::BTreeSet;

    fn cq(s: &str) -> ConjunctiveQuery {
        match parse_query(s).unwrap() {
            Query::Cq(q) => q,
            _ => unreachable!(),
        }
    }

    fn set(src: &Source, m: &Machine, e: &Evaluation) -> BTreeSet<Vec<String>> {
        src.decode(m, &e.result).unwrap().into_iter().collect()
    }

    fn strs(rows: &[&[&str]]) -> BTreeSet<Vec<String>> {
        rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect()
    }

    fn path_db() -> Database {
        Database::from_keys(vec![
            ("E", vec!["a", "b"], vec![vec![1, 2], vec![2, 3], vec![3, 4], vec![4, 4]]),
            ("F", vec!["b", "c"], vec![vec![2, 5], vec![3, 6], vec![9, 9]]),
        ])
        .unwrap()
    }

    #[test]
    fn acyclic_and_free_connex_agree() {
        let db = path_db();
        let mut m = Machine::new(MachineConfig::default());
        let src = Source::new(&mut m, &db, 0.5).unwrap();
        let q = cq("Q(x,y) :- E(x,y), F(y,z).");
        let a = eval_acyclic(&mut m, &src, &q, 0.5, 0.5).unwrap();
        let f = eval_free_connex(&mut m, &src, &q, 0.5, 0.5).unwrap();
        assert_eq!(set(&src, &m, &a), strs(&[&["1", "2"], &["2", "3"]]));
        assert_eq!(set(&src, &m, &a), set(&src, &m, &f));
        assert!(a.passed() && f.passed());
        let q = cq("Q(x,z) :- E(x,y), F(y,z).");
        assert!(matches!(eval_free_connex(&mut m, &src, &q, 0.5, 0.5), Err(Error::Precondition(_))));
        let a = eval_acyclic(&mut m, &src, &q, 0.5, 0.5).unwrap();
        assert_eq!(set(&src, &m, &a), strs(&[&["1", "5"], &["2", "6"]]));
        let b = eval_acyclic(&mut m, &src, &cq("Q() :- E(x,y), F(y,z)."), 0.5, 0.5).unwrap();
        assert_eq!(b.out, 1);
        let f = eval_free_connex(&mut m, &src, &cq("Q() :- E(x,y), F(y,z)."), 0.5, 0.5).unwrap();
        assert_eq!(f.out, 1);
    }

    #[test]
    fn full_reduction_removes_dangling() {
        let db = path_db();
        let mut m = Machine::new(MachineConfig::default());
        let src = Source::new(&mut m, &db, 0.5).unwrap();
        let q = cq("Q(x,y,z) :- E(x,y), F(y,z).");
        let t = gyo_join_tree(&q).unwrap();
        let s = full_reduction(&mut m, &src, &q, &t, 0.5).unwrap();
        let e: BTreeSet<Vec<u64>> = s[0].rows(&m).into_iter().collect();
        let f: BTreeSet<Vec<u64>> = s[1].rows(&m).into_iter().collect();
        assert_eq!(e, [vec![1, 2], vec![2, 3]].into_iter().collect());
        assert_eq!(f, [vec![2, 5], vec![3, 6]].into_iter().collect());
    }

    #[test]
    fn plan_on_text_values() {
        let rel = |name: &str, rows: &[&[&str]]| crate::relstore::Relation {
            name: name.into(),
            attrs: vec!["A".into(), "B".into()],
            rows: rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect(),
            ordered_by: None,
        };
        let db = Database::new(
            Setting::General,
            vec![
                rel("R", &[&["a", "x"], &["b", "y"], &["c", "z"]]),
                rel("S", &[&["a", "x"], &["c", "z"]]),
                rel("T", &[&["c", "z"]]),
                rel("U", &[&["q", "q"]]),
            ],
        )
        .unwrap();
        let plan = parse_plan("(union (diff (sjoin R S) T) U)").unwrap();
        let expect = strs(&[&["a", "x"], &["q", "q"]]);
        let mut m = Machine::new(MachineConfig::default());
        let src = Source::new(&mut m, &db, 0.5).unwrap();
        let e = eval_semijoin_plan(&mut m, &src, &plan, PlanMode::Dictionary, 0.5).unwrap();
        assert_eq!(set(&src, &m, &e), expect);
        let tok = Source::tokens(&db);
        let e = eval_semijoin_plan(&mut m, &tok, &plan, PlanMode::Naive, 0.5).unwrap();
        assert_eq!(set(&tok, &m, &e), expect);
        assert!(eval_semijoin_plan(&mut m, &tok, &plan, PlanMode::Ordered, 0.5).is_err());
        let sel = parse_plan("(project (A) (select (= B \"y\") R))").unwrap();
        let e = eval_semijoin_plan(&mut m, &src, &sel, PlanMode::Dictionary, 0.5).unwrap();
        assert_eq!(set(&src, &m, &e), strs(&[&["b"]]));
    }
}
