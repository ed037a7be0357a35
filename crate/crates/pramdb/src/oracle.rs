//! Sequential ground truth: set-based relational algebra, nested-loop
//! evaluation of conjunctive queries, exact scans and sorting, and the
//! semijoin fixpoint. Never touches the machine.

use std::collections::{BTreeMap, BTreeSet};

use crate::dbops::{Const, Pred};
use crate::error::{Error, Result};
use crate::query::{ConjunctiveQuery, Plan, Query};
use crate::relstore::Database;

/// Limits on instances the oracle will enumerate.
#[derive(Clone, Copy, Debug)]
pub struct OracleLimits {
    pub max_tuples: usize,
    pub max_arity: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_tuples: 200, max_arity: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainRelation {
    pub schema: Vec<String>,
    pub tuples: BTreeSet<Vec<String>>,
}

impl PlainRelation {
    pub fn new(schema: Vec<String>) -> PlainRelation {
        PlainRelation { schema, tuples: BTreeSet::new() }
    }

    pub fn from_rows(schema: Vec<String>, rows: impl IntoIterator<Item = Vec<String>>) -> PlainRelation {
        PlainRelation { schema, tuples: rows.into_iter().collect() }
    }

    /// A database relation, with attributes renamed if `attrs` is given.
    pub fn of(db: &Database, name: &str, attrs: Option<&[String]>) -> Result<PlainRelation> {
        let r = db.relation(name)?;
        let schema = match attrs {
            Some(a) if a.len() != r.attrs.len() => {
                return Err(Error::Schema(format!("{name} has arity {}, got {} attributes", r.attrs.len(), a.len())))
            }
            Some(a) => a.to_vec(),
            None => r.attrs.clone(),
        };
        Ok(PlainRelation::from_rows(schema, r.rows.iter().cloned()))
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    fn pos(&self, xs: &[String]) -> Result<Vec<usize>> {
        xs.iter()
            .map(|x| {
                self.schema
                    .iter()
                    .position(|a| a == x)
                    .ok_or_else(|| Error::Schema(format!("no attribute {x} in {:?}", self.schema)))
            })
            .collect()
    }

    fn shared(&self, other: &PlainRelation) -> Vec<String> {
        self.schema.iter().filter(|a| other.schema.contains(a)).cloned().collect()
    }

    pub fn project(&self, xs: &[String]) -> Result<PlainRelation> {
        let p = self.pos(xs)?;
        Ok(PlainRelation::from_rows(xs.to_vec(), self.tuples.iter().map(|t| p.iter().map(|&i| t[i].clone()).collect())))
    }

    pub fn select(&self, pred: &Pred) -> Result<PlainRelation> {
        let keep: Box<dyn Fn(&Vec<String>) -> bool> = match pred {
            Pred::AttrEq(a, b) => {
                let p = self.pos(&[a.clone(), b.clone()])?;
                Box::new(move |t| t[p[0]] == t[p[1]])
            }
            Pred::ConstEq(a, c) => {
                let i = self.pos(std::slice::from_ref(a))?[0];
                let c = c.clone();
                Box::new(move |t| match &c {
                    Const::Text(s) => &t[i] == s,
                    Const::Key(k) => t[i].parse::<u64>().ok() == Some(*k),
                })
            }
        };
        Ok(PlainRelation::from_rows(self.schema.clone(), self.tuples.iter().filter(|t| keep(t)).cloned()))
    }

    pub fn rename(&self, schema: Vec<String>) -> Result<PlainRelation> {
        if schema.len() != self.schema.len() {
            return Err(Error::Schema(format!("rename to {schema:?} of {:?}", self.schema)));
        }
        Ok(PlainRelation { schema, tuples: self.tuples.clone() })
    }

    fn aligned(&self, other: &PlainRelation) -> Result<BTreeSet<Vec<String>>> {
        if self.schema.len() != other.schema.len() || !self.schema.iter().all(|a| other.schema.contains(a)) {
            return Err(Error::Schema(format!("schemas {:?} and {:?} differ", self.schema, other.schema)));
        }
        Ok(other.project(&self.schema)?.tuples)
    }

    pub fn union(&self, other: &PlainRelation) -> Result<PlainRelation> {
        let o = self.aligned(other)?;
        Ok(PlainRelation::from_rows(self.schema.clone(), self.tuples.union(&o).cloned()))
    }

    pub fn difference(&self, other: &PlainRelation) -> Result<PlainRelation> {
        let o = self.aligned(other)?;
        Ok(PlainRelation::from_rows(self.schema.clone(), self.tuples.difference(&o).cloned()))
    }

    pub fn semijoin(&self, other: &PlainRelation) -> Result<PlainRelation> {
        let x = self.shared(other);
        let keys = other.project(&x)?.tuples;
        let p = self.pos(&x)?;
        Ok(PlainRelation::from_rows(
            self.schema.clone(),
            self.tuples.iter().filter(|t| keys.contains(&p.iter().map(|&i| t[i].clone()).collect::<Vec<_>>())).cloned(),
        ))
    }

    /// Natural join; attributes of `self` first, then the others of `other`.
    pub fn join(&self, other: &PlainRelation) -> Result<PlainRelation> {
        let x = self.shared(other);
        let (pa, pb) = (self.pos(&x)?, other.pos(&x)?);
        let rest: Vec<usize> = (0..other.schema.len()).filter(|i| !pb.contains(i)).collect();
        let mut schema = self.schema.clone();
        schema.extend(rest.iter().map(|&i| other.schema[i].clone()));
        let mut out = PlainRelation::new(schema);
        for a in &self.tuples {
            for b in &other.tuples {
                if pa.iter().zip(&pb).all(|(&i, &j)| a[i] == b[j]) {
                    let mut t = a.clone();
                    t.extend(rest.iter().map(|&i| b[i].clone()));
                    out.tuples.insert(t);
                }
            }
        }
        Ok(out)
    }
}

fn check_limits(db: &Database, names: &[String], lim: OracleLimits) -> Result<()> {
    for n in names {
        let r = db.relation(n)?;
        if r.rows.len() > lim.max_tuples || r.attrs.len() > lim.max_arity {
            return Err(Error::TooLarge(format!(
                "oracle limit: {n} has {} tuples of arity {} (caps {} and {})",
                r.rows.len(),
                r.attrs.len(),
                lim.max_tuples,
                lim.max_arity
            )));
        }
    }
    Ok(())
}

/// Every valuation of the body variables matching a tuple per atom,
/// projected to the head.
fn eval_cq(q: &ConjunctiveQuery, db: &Database) -> Result<PlainRelation> {
    let rels: Vec<PlainRelation> =
        q.body.iter().map(|a| PlainRelation::of(db, &a.rel, Some(&a.vars))).collect::<Result<_>>()?;
    let mut out = PlainRelation::new(q.head.clone());
    let mut val: BTreeMap<String, String> = BTreeMap::new();
    fn go(
        i: usize,
        q: &ConjunctiveQuery,
        rels: &[PlainRelation],
        val: &mut BTreeMap<String, String>,
        out: &mut PlainRelation,
    ) {
        if i == rels.len() {
            out.tuples.insert(q.head.iter().map(|v| val[v].clone()).collect());
            return;
        }
        let vars = &q.body[i].vars;
        for t in &rels[i].tuples {
            if vars.iter().zip(t).all(|(v, x)| val.get(v).is_none_or(|y| y == x)) {
                let fresh: Vec<&String> = vars.iter().filter(|v| !val.contains_key(*v)).collect();
                for (v, x) in vars.iter().zip(t) {
                    val.insert(v.clone(), x.clone());
                }
                go(i + 1, q, rels, val, out);
                for v in fresh {
                    val.remove(v);
                }
            }
        }
    }
    go(0, q, &rels, &mut val, &mut out);
    Ok(out)
}

fn eval_plan(p: &Plan, db: &Database) -> Result<PlainRelation> {
    Ok(match p {
        Plan::Rel(r) => PlainRelation::of(db, r, None)?,
        Plan::Select(pr, s) => eval_plan(s, db)?.select(pr)?,
        Plan::Project(x, s) => eval_plan(s, db)?.project(x)?,
        Plan::Rename(x, s) => eval_plan(s, db)?.rename(x.clone())?,
        Plan::Union(a, b) => eval_plan(a, db)?.union(&eval_plan(b, db)?)?,
        Plan::Diff(a, b) => eval_plan(a, db)?.difference(&eval_plan(b, db)?)?,
        Plan::Semijoin(a, b) => eval_plan(a, db)?.semijoin(&eval_plan(b, db)?)?,
    })
}

pub fn oracle_eval(q: &Query, db: &Database, lim: OracleLimits) -> Result<PlainRelation> {
    match q {
        Query::Cq(q) => {
            let names: Vec<String> = q.body.iter().map(|a| a.rel.clone()).collect();
            check_limits(db, &names, lim)?;
            eval_cq(q, db)
        }
        Query::Plan(p) => {
            check_limits(db, &p.relations(), lim)?;
            eval_plan(p, db)
        }
    }
}

/// Inclusive prefix sums.
pub fn oracle_exact_scan(a: &[u64]) -> Vec<u64> {
    a.iter()
        .scan(0u64, |s, &x| {
            *s += x;
            Some(*s)
        })
        .collect()
}

pub fn oracle_sort(a: &[u64]) -> Vec<u64> {
    let mut v = a.to_vec();
    v.sort_unstable();
    v
}

/// Atom relations (attributes named by variables) after semijoining every
/// pair of atoms until nothing changes.
pub fn oracle_reduce(q: &ConjunctiveQuery, db: &Database, lim: OracleLimits) -> Result<Vec<PlainRelation>> {
    let names: Vec<String> = q.body.iter().map(|a| a.rel.clone()).collect();
    check_limits(db, &names, lim)?;
    let mut rels: Vec<PlainRelation> =
        q.body.iter().map(|a| PlainRelation::of(db, &a.rel, Some(&a.vars))).collect::<Result<_>>()?;
    loop {
        let mut changed = false;
        for i in 0..rels.len() {
            for j in 0..rels.len() {
                if i != j {
                    let r = rels[i].semijoin(&rels[j])?;
                    if r.len() != rels[i].len() {
                        rels[i] = r;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return Ok(rels);
        }
    }
}
