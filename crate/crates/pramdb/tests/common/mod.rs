#![allow(dead_code)]

use std::collections::BTreeSet;

use pramdb::array_ops::{link_rel, sort_rel};
use pramdb::dbops::{self, Const, Pred, Variant};
use pramdb::oracle::PlainRelation;
use pramdb::query::{parse_query, ConjunctiveQuery, Query};
use pramdb::relstore::{Database, RelArray, Relation, Setting, Values};
use pramdb::workloads::{random_rows, rng};
use pramdb::{Machine, MachineConfig};
use rand::Rng;

pub type Rows = BTreeSet<Vec<String>>;

pub fn cq(s: &str) -> ConjunctiveQuery {
    match parse_query(s).unwrap() {
        Query::Cq(q) => q,
        Query::Plan(_) => panic!("not a rule: {s}"),
    }
}

pub fn mach() -> Machine {
    Machine::new(MachineConfig::default())
}

/// R(A,B), R2(A,B), S(B,C), T(A,C), U(C): 20..=200 tuples each over a
/// domain of at most 400 values.
pub fn random_db(seed: u64) -> Database {
    let mut g = rng(seed);
    let dom = [6u64, 15, 40, 120, 400][g.random_range(0..5)];
    let mut rel = |arity: usize| {
        let n = g.random_range(20..=200);
        random_rows(&mut g, n, arity, dom)
    };
    let (r, r2, s, t, u) = (rel(2), rel(2), rel(2), rel(2), rel(1));
    Database::from_keys(vec![
        ("R", vec!["A", "B"], r),
        ("R2", vec!["A", "B"], r2),
        ("S", vec!["B", "C"], s),
        ("T", vec!["A", "C"], t),
        ("U", vec!["C"], u),
    ])
    .unwrap()
}

/// The same relations in the ordered setting, each sorted by its
/// attributes in schema order (values compare as text there).
pub fn ordered_copy(db: &Database) -> Database {
    let rels = db
        .relations
        .iter()
        .map(|r| {
            let mut rows = r.rows.clone();
            rows.sort();
            Relation { name: r.name.clone(), attrs: r.attrs.clone(), rows, ordered_by: Some(r.attrs.clone()) }
        })
        .collect();
    Database::new(Setting::Ordered, rels).unwrap()
}

/// Inhabited tuples as strings; fails if a tuple occurs twice.
pub fn keys_set(m: &Machine, a: &RelArray) -> Result<Rows, String> {
    let rows = a.rows(m);
    let s: Rows = rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect();
    if s.len() != rows.len() {
        return Err(format!("array over {:?} is not concise", a.attrs));
    }
    Ok(s)
}

pub fn set_of(rows: &[Vec<String>]) -> Result<Rows, String> {
    let s: Rows = rows.iter().cloned().collect();
    if s.len() != rows.len() {
        return Err("result is not concise".into());
    }
    Ok(s)
}

fn same(what: &str, got: Rows, want: &PlainRelation) -> Result<(), String> {
    if got != want.tuples {
        let extra = got.difference(&want.tuples).next();
        let missing = want.tuples.difference(&got).next();
        return Err(format!("{what}: {} tuples vs oracle {}; extra {extra:?}, missing {missing:?}", got.len(), want.len()));
    }
    Ok(())
}

fn sorted(m: &mut Machine, a: &RelArray, x: &[&str], lambda: f64, epsilon: f64) -> RelArray {
    let x: Vec<String> = x.iter().map(|s| s.to_string()).collect();
    let mut b = sort_rel(m, a, &x, lambda, epsilon).unwrap();
    link_rel(m, &mut b, epsilon).unwrap();
    b
}

pub const VARIANTS: [Variant; 4] =
    [Variant::DictionaryHash, Variant::OrderedIntoOther, Variant::OrderedIntoSelf, Variant::Naive];

/// Every operator in every variant against the oracle. Returns the number
/// of comparisons and the largest ratio of join array length to join size
/// (`None` if every join was empty).
pub fn check_operators(db: &Database, lambda: f64, epsilon: f64) -> Result<(usize, Vec<(usize, usize)>), String> {
    let mut m = mach();
    let e = |x: pramdb::Error| x.to_string();
    let plain = |n: &str| PlainRelation::of(db, n, None).unwrap();
    let (pr, pr2, ps) = (plain("R"), plain("R2"), plain("S"));
    let r = db.load_keys(&mut m, "R", None).map_err(e)?;
    let r2 = db.load_keys(&mut m, "R2", None).map_err(e)?;
    let s = db.load_keys(&mut m, "S", None).map_err(e)?;
    let r_b = sorted(&mut m, &r, &["B"], lambda, epsilon);
    let s_b = sorted(&mut m, &s, &["B"], lambda, epsilon);
    let r_ab = sorted(&mut m, &r, &["A", "B"], lambda, epsilon);
    let r2_ab = sorted(&mut m, &r2, &["A", "B"], lambda, epsilon);
    let k = Values::Keys;
    let b = vec!["B".to_string()];
    let mut n = 0;
    let mut joins = Vec::new();

    let want = pr.project(&b).unwrap();
    for (v, a) in [(VARIANTS[0], &r), (VARIANTS[1], &r_b), (VARIANTS[2], &r_b), (VARIANTS[3], &r)] {
        let p = dbops::projection(&mut m, a, &b, v, k, epsilon).map_err(e)?;
        same(&format!("projection {v:?}"), keys_set(&m, &p)?, &want)?;
        n += 1;
    }
    let want = pr.semijoin(&ps).unwrap();
    for (v, x, y) in [(VARIANTS[0], &r, &s), (VARIANTS[1], &r, &s_b), (VARIANTS[2], &r_b, &s), (VARIANTS[3], &r, &s)] {
        let o = dbops::semijoin(&mut m, x, y, v, k, epsilon).map_err(e)?;
        same(&format!("semijoin {v:?}"), keys_set(&m, &o)?, &want)?;
        n += 1;
    }
    let (wd, wu) = (pr.difference(&pr2).unwrap(), pr.union(&pr2).unwrap());
    for (v, x, y) in [(VARIANTS[0], &r, &r2), (VARIANTS[1], &r, &r2_ab), (VARIANTS[2], &r_ab, &r2), (VARIANTS[3], &r, &r2)] {
        let d = dbops::difference(&mut m, x, y, v, k, epsilon).map_err(e)?;
        same(&format!("difference {v:?}"), keys_set(&m, &d)?, &wd)?;
        let u = dbops::union(&mut m, x, y, v, k, epsilon).map_err(e)?;
        same(&format!("union {v:?}"), keys_set(&m, &u)?, &wu)?;
        n += 2;
    }
    let want = pr.join(&ps).unwrap();
    for (v, x, y) in [(VARIANTS[0], &r, &s), (VARIANTS[1], &r, &s_b), (VARIANTS[2], &r_b, &s), (VARIANTS[3], &r, &s)] {
        let j = dbops::join(&mut m, x, y, v, k, lambda, epsilon).map_err(e)?;
        same(&format!("join {v:?}"), keys_set(&m, &j)?, &want)?;
        joins.push((j.len(), want.len()));
        n += 1;
    }
    let pred = Pred::AttrEq("A".into(), "B".into());
    let o = dbops::selection(&mut m, &r, &pred, k).map_err(e)?;
    same("selection A=B", keys_set(&m, &o)?, &pr.select(&pred).unwrap())?;
    let c = pr.tuples.iter().next().map(|t| t[0].parse::<u64>().unwrap()).unwrap_or(1);
    let pred = Pred::ConstEq("A".into(), Const::Key(c));
    let o = dbops::selection(&mut m, &r, &pred, k).map_err(e)?;
    same("selection A=c", keys_set(&m, &o)?, &pr.select(&pred).unwrap())?;
    n += 2;
    Ok((n, joins))
}

pub fn check_same(what: &str, got: &[Vec<String>], want: &PlainRelation) -> Result<(), String> {
    same(what, set_of(got)?, want)
}
