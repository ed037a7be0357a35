//! One query against one database: pick an evaluator, run it, decode the
//! result.

use crate::error::{Error, Result};
use crate::kernel::Machine;
use crate::query::{
    check_free_connex, eval_acyclic, eval_free_connex, eval_ghd, eval_semijoin_plan, gyo_join_tree, wcoj, Evaluation,
    FractionalCover, Ghd, PlanMode, Query, Source, WcojOptions,
};
use crate::relstore::{Database, Setting};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Evaluator {
    /// Plans: semijoin plan. Conjunctive queries: GHD if one is given,
    /// else free-connex, acyclic, or the attribute-elimination join.
    #[default]
    Auto,
    Plan,
    Acyclic,
    FreeConnex,
    Ghd,
    Wcoj,
}

impl Evaluator {
    pub fn name(self) -> &'static str {
        match self {
            Evaluator::Auto => "auto",
            Evaluator::Plan => "plan",
            Evaluator::Acyclic => "acyclic",
            Evaluator::FreeConnex => "free-connex",
            Evaluator::Ghd => "ghd",
            Evaluator::Wcoj => "wcoj",
        }
    }
}

impl std::str::FromStr for Evaluator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Evaluator::Auto,
            "plan" => Evaluator::Plan,
            "acyclic" => Evaluator::Acyclic,
            "free-connex" => Evaluator::FreeConnex,
            "ghd" => Evaluator::Ghd,
            "wcoj" => Evaluator::Wcoj,
            _ => return Err(Error::Param(format!("unknown evaluator {s:?}"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub evaluator: Evaluator,
    pub lambda: f64,
    pub epsilon: f64,
    /// Plans only; defaults by setting (dictionary, ordered, naive for the
    /// general setting).
    pub plan_mode: Option<PlanMode>,
    pub ghd: Option<Ghd>,
    pub attr_order: Option<Vec<String>>,
    pub cover: Option<FractionalCover>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            evaluator: Evaluator::Auto,
            lambda: 0.5,
            epsilon: 0.5,
            plan_mode: None,
            ghd: None,
            attr_order: None,
            cover: None,
        }
    }
}

pub struct Outcome {
    pub evaluation: Evaluation,
    /// Evaluator actually used.
    pub evaluator: Evaluator,
    pub attrs: Vec<String>,
    /// Decoded tuples in array order.
    pub rows: Vec<Vec<String>>,
}

pub fn default_plan_mode(setting: Setting) -> PlanMode {
    match setting {
        Setting::Dictionary => PlanMode::Dictionary,
        Setting::Ordered => PlanMode::Ordered,
        Setting::General => PlanMode::Naive,
    }
}

pub fn evaluate(m: &mut Machine, db: &Database, query: &Query, opts: &RunOptions) -> Result<Outcome> {
    let (lambda, epsilon) = (opts.lambda, opts.epsilon);
    match query {
        Query::Plan(plan) => {
            if !matches!(opts.evaluator, Evaluator::Auto | Evaluator::Plan) {
                return Err(Error::Param(format!("{} evaluates conjunctive queries, not plans", opts.evaluator.name())));
            }
            let mode = opts.plan_mode.unwrap_or(default_plan_mode(db.setting));
            let src = match mode {
                PlanMode::Dictionary => Source::new(m, db, epsilon)?,
                _ => Source::tokens(db),
            };
            let e = eval_semijoin_plan(m, &src, plan, mode, epsilon)?;
            let rows = src.decode(m, &e.result)?;
            Ok(Outcome { attrs: e.result.attrs.clone(), evaluation: e, evaluator: Evaluator::Plan, rows })
        }
        Query::Cq(q) => {
            let ev = match opts.evaluator {
                Evaluator::Plan => return Err(Error::Param("plan evaluator needs a plan".into())),
                Evaluator::Auto if opts.ghd.is_some() => Evaluator::Ghd,
                Evaluator::Auto if check_free_connex(q) => Evaluator::FreeConnex,
                Evaluator::Auto if gyo_join_tree(q).is_some() => Evaluator::Acyclic,
                Evaluator::Auto if q.is_join_query() => Evaluator::Wcoj,
                Evaluator::Auto => {
                    return Err(Error::Precondition(
                        "cyclic query with quantified variables: supply a decomposition".into(),
                    ))
                }
                e => e,
            };
            let src = Source::new(m, db, epsilon)?;
            let e = match ev {
                Evaluator::Acyclic => eval_acyclic(m, &src, q, lambda, epsilon)?,
                Evaluator::FreeConnex => eval_free_connex(m, &src, q, lambda, epsilon)?,
                Evaluator::Ghd => {
                    let g = opts.ghd.as_ref().ok_or_else(|| Error::Param("ghd evaluator needs a decomposition".into()))?;
                    eval_ghd(m, &src, q, g, lambda, epsilon)?
                }
                Evaluator::Wcoj => {
                    let o = WcojOptions { attr_order: opts.attr_order.clone(), cover: opts.cover.clone() };
                    wcoj(m, &src, q, &o, lambda, epsilon)?
                }
                Evaluator::Auto | Evaluator::Plan => unreachable!(),
            };
            let rows = src.decode(m, &e.result)?;
            Ok(Outcome { attrs: q.head.clone(), evaluation: e, evaluator: ev, rows })
        }
    }
}
