//! Queries: conjunctive queries, semijoin-algebra plans, join trees,
//! decompositions, and their evaluation.

mod cover;
mod eval;
mod parse;
mod tree;
mod wcoj;

pub use cover::{agm_bound, fractional_cover, FractionalCover};
pub use eval::{
    eval_acyclic, eval_free_connex, eval_ghd, eval_semijoin_plan, full_reduction, Evaluation, PlanMode, SizeCheck,
    Source,
};
pub use parse::{parse_plan, parse_query};
pub use tree::{check_free_connex, gyo_join_tree, Ghd, GhdNode, JoinTree};
pub use wcoj::{wcoj, WcojOptions};

use crate::dbops::Pred;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    /// Relation symbol in the database.
    pub rel: String,
    /// Name of this occurrence; differs from `rel` when the symbol is used
    /// more than once.
    pub alias: String,
    pub vars: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    pub name: String,
    pub head: Vec<String>,
    pub body: Vec<Atom>,
}

impl ConjunctiveQuery {
    /// Variables in order of first occurrence in the body.
    pub fn vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in &self.body {
            for v in &a.vars {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// All variables free.
    pub fn is_join_query(&self) -> bool {
        self.vars().iter().all(|v| self.head.contains(v))
    }

    pub fn atom(&self, alias: &str) -> Option<usize> {
        self.body.iter().position(|a| a.alias == alias)
    }
}

/// Expression over selection, projection, rename, union, difference and
/// semijoin; there is no join node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Plan {
    Rel(String),
    Select(Pred, Box<Plan>),
    Project(Vec<String>, Box<Plan>),
    Rename(Vec<String>, Box<Plan>),
    Union(Box<Plan>, Box<Plan>),
    Diff(Box<Plan>, Box<Plan>),
    Semijoin(Box<Plan>, Box<Plan>),
}

impl Plan {
    /// Relation symbols at the leaves.
    pub fn relations(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<String>) {
        match self {
            Plan::Rel(r) => {
                if !out.contains(r) {
                    out.push(r.clone())
                }
            }
            Plan::Select(_, p) | Plan::Project(_, p) | Plan::Rename(_, p) => p.collect(out),
            Plan::Union(a, b) | Plan::Diff(a, b) | Plan::Semijoin(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    Cq(ConjunctiveQuery),
    Plan(Plan),
}
