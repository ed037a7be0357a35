//! Datalog rules `Q(x,y) :- R(x,z), S(z,y).` and s-expression plans
//! `(union (diff (sjoin R S) T) U)`.

use std::collections::HashMap;

use super::{Atom, ConjunctiveQuery, Plan, Query};
use crate::dbops::{Const, Pred};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    Open,
    Close,
    Comma,
    Turnstile,
    Dot,
    Eq,
}

struct Lexed {
    toks: Vec<(Tok, (usize, usize))>,
}

fn lex(text: &str) -> Result<Lexed> {
    let mut toks = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let loc = (ln + 1, i + 1);
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '%' || c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
                break;
            }
            let tok = match c {
                '(' => Tok::Open,
                ')' => Tok::Close,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '=' => Tok::Eq,
                ':' if chars.get(i + 1) == Some(&'-') => {
                    i += 1;
                    Tok::Turnstile
                }
                '"' | '\'' => {
                    let mut j = i + 1;
                    while j < chars.len() && chars[j] != c {
                        j += 1;
                    }
                    if j == chars.len() {
                        return Err(fault(loc, "unterminated string"));
                    }
                    let s: String = chars[i + 1..j].iter().collect();
                    i = j;
                    Tok::Str(s)
                }
                c if c.is_ascii_digit() || c == '-' => {
                    let mut j = i + 1;
                    while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '.' && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit())) {
                        j += 1;
                    }
                    let s: String = chars[i..j].iter().collect();
                    i = j - 1;
                    Tok::Num(s)
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut j = i + 1;
                    while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                        j += 1;
                    }
                    let s: String = chars[i..j].iter().collect();
                    i = j - 1;
                    Tok::Ident(s)
                }
                _ => return Err(fault(loc, &format!("unexpected character {c:?}"))),
            };
            toks.push((tok, loc));
            i += 1;
        }
    }
    Ok(Lexed { toks })
}

fn fault(loc: (usize, usize), msg: &str) -> Error {
    Error::Parse { loc: format!("{}:{}", loc.0, loc.1), msg: msg.to_string() }
}

struct Cursor {
    toks: Vec<(Tok, (usize, usize))>,
    i: usize,
    end: (usize, usize),
}

impl Cursor {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.0)
    }

    fn loc(&self) -> (usize, usize) {
        self.toks.get(self.i).map(|t| t.1).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|t| t.0.clone());
        self.i += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let loc = self.loc();
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(fault(loc, &format!("expected {what}, found {t:?}"))),
            None => Err(fault(loc, &format!("expected {what}, found end of input"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        let loc = self.loc();
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            Some(Tok::Str(_) | Tok::Num(_)) => Err(fault(loc, "constants are not supported in conjunctive queries")),
            Some(t) => Err(fault(loc, &format!("expected {what}, found {t:?}"))),
            None => Err(fault(loc, &format!("expected {what}, found end of input"))),
        }
    }
}

fn cursor(text: &str) -> Result<Cursor> {
    let lx = lex(text)?;
    let lines = text.lines().count().max(1);
    Ok(Cursor { toks: lx.toks, i: 0, end: (lines, text.lines().last().map_or(1, |l| l.len() + 1)) })
}

/// A datalog rule or, if the text starts with `(` or is a single name, a
/// semijoin-algebra plan.
pub fn parse_query(text: &str) -> Result<Query> {
    let c = cursor(text)?;
    match (c.toks.first().map(|t| &t.0), c.toks.len()) {
        (Some(Tok::Open), _) | (Some(Tok::Ident(_)), 1) => parse_plan(text).map(Query::Plan),
        (Some(Tok::Ident(_)), 2) if c.toks[1].0 == Tok::Dot => parse_plan(text).map(Query::Plan),
        _ => parse_rule(c).map(Query::Cq),
    }
}

fn var_list(c: &mut Cursor) -> Result<Vec<(String, (usize, usize))>> {
    c.expect(Tok::Open, "'('")?;
    let mut out = Vec::new();
    if c.peek() == Some(&Tok::Close) {
        c.next();
        return Ok(out);
    }
    loop {
        let loc = c.loc();
        out.push((c.ident("variable")?, loc));
        match c.next() {
            Some(Tok::Comma) => continue,
            Some(Tok::Close) => return Ok(out),
            _ => return Err(fault(loc, "expected ',' or ')' after variable")),
        }
    }
}

fn parse_rule(mut c: Cursor) -> Result<ConjunctiveQuery> {
    let name = c.ident("head relation")?;
    let head = var_list(&mut c)?;
    for (k, (v, loc)) in head.iter().enumerate() {
        if head[..k].iter().any(|(w, _)| w == v) {
            return Err(fault(*loc, &format!("variable {v} repeated in the head")));
        }
    }
    c.expect(Tok::Turnstile, "':-'")?;
    let mut raw: Vec<(String, Vec<String>)> = Vec::new();
    loop {
        let rel = c.ident("relation symbol")?;
        let vars = var_list(&mut c)?;
        for (k, (v, loc)) in vars.iter().enumerate() {
            if vars[..k].iter().any(|(w, _)| w == v) {
                return Err(fault(*loc, &format!("variable {v} repeated in atom {rel}")));
            }
        }
        raw.push((rel, vars.into_iter().map(|v| v.0).collect()));
        match c.peek() {
            Some(Tok::Comma) => {
                c.next();
            }
            Some(Tok::Dot) => {
                c.next();
                break;
            }
            None => break,
            Some(t) => return Err(fault(c.loc(), &format!("expected ',' or '.', found {t:?}"))),
        }
    }
    if let Some(t) = c.peek() {
        return Err(fault(c.loc(), &format!("unexpected {t:?} after the rule")));
    }
    let body = alias(raw);
    let q = ConjunctiveQuery { name, head: head.into_iter().map(|v| v.0).collect(), body };
    let vars = q.vars();
    if let Some(v) = q.head.iter().find(|v| !vars.contains(v)) {
        return Err(Error::Unsafe(format!("head variable {v} does not occur in the body")));
    }
    Ok(q)
}

/// Repeated relation symbols become `E_1, E_2, ...`, in body order.
fn alias(raw: Vec<(String, Vec<String>)>) -> Vec<Atom> {
    let mut count: HashMap<&str, usize> = HashMap::new();
    for (r, _) in &raw {
        *count.entry(r.as_str()).or_default() += 1;
    }
    let mut taken: Vec<String> = count.iter().filter(|(_, &n)| n == 1).map(|(r, _)| r.to_string()).collect();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    for (rel, vars) in &raw {
        let alias = if count[rel.as_str()] == 1 {
            rel.clone()
        } else {
            let k = seen.entry(rel.clone()).or_default();
            *k += 1;
            let mut a = format!("{rel}_{k}");
            while taken.contains(&a) {
                a.push('_');
            }
            a
        };
        taken.push(alias.clone());
        out.push(Atom { rel: rel.clone(), alias, vars: vars.clone() });
    }
    out
}

/// A semijoin-algebra plan. Forms: `R`, `(sjoin P Q)`, `(diff P Q)`,
/// `(union P Q)`, `(project (A B) P)`, `(rename (A B) P)`,
/// `(select (= A B) P)`, `(select (= A "c") P)`.
pub fn parse_plan(text: &str) -> Result<Plan> {
    let mut c = cursor(text)?;
    let p = plan(&mut c)?;
    if c.peek() == Some(&Tok::Dot) {
        c.next();
    }
    if let Some(t) = c.peek() {
        return Err(fault(c.loc(), &format!("unexpected {t:?} after the plan")));
    }
    Ok(p)
}

fn plan(c: &mut Cursor) -> Result<Plan> {
    let loc = c.loc();
    match c.next() {
        Some(Tok::Ident(r)) => Ok(Plan::Rel(r)),
        Some(Tok::Open) => {
            let op = c.ident("operator")?;
            let p = match op.as_str() {
                "sjoin" | "semijoin" => Plan::Semijoin(Box::new(plan(c)?), Box::new(plan(c)?)),
                "diff" | "minus" => Plan::Diff(Box::new(plan(c)?), Box::new(plan(c)?)),
                "union" => Plan::Union(Box::new(plan(c)?), Box::new(plan(c)?)),
                "project" => {
                    let xs = names(c)?;
                    Plan::Project(xs, Box::new(plan(c)?))
                }
                "rename" => {
                    let xs = names(c)?;
                    Plan::Rename(xs, Box::new(plan(c)?))
                }
                "select" => {
                    let pred = predicate(c)?;
                    Plan::Select(pred, Box::new(plan(c)?))
                }
                "join" | "product" => {
                    return Err(fault(loc, &format!("{op} is not an operator of the semijoin algebra")))
                }
                _ => return Err(fault(loc, &format!("unknown operator {op}"))),
            };
            c.expect(Tok::Close, "')'")?;
            Ok(p)
        }
        Some(t) => Err(fault(loc, &format!("expected a plan, found {t:?}"))),
        None => Err(fault(loc, "expected a plan, found end of input")),
    }
}

fn names(c: &mut Cursor) -> Result<Vec<String>> {
    c.expect(Tok::Open, "'(' before attribute list")?;
    let mut out = Vec::new();
    loop {
        let loc = c.loc();
        match c.next() {
            Some(Tok::Close) => break,
            Some(Tok::Comma) => continue,
            Some(Tok::Ident(a)) => {
                if out.contains(&a) {
                    return Err(fault(loc, &format!("attribute {a} repeated")));
                }
                out.push(a)
            }
            _ => return Err(fault(loc, "expected an attribute name")),
        }
    }
    Ok(out)
}

fn predicate(c: &mut Cursor) -> Result<Pred> {
    c.expect(Tok::Open, "'(' before predicate")?;
    c.expect(Tok::Eq, "'='")?;
    let a = c.ident("attribute")?;
    let loc = c.loc();
    let p = match c.next() {
        Some(Tok::Ident(b)) => Pred::AttrEq(a, b),
        Some(Tok::Str(s) | Tok::Num(s)) => Pred::ConstEq(a, Const::Text(s)),
        _ => return Err(fault(loc, "expected an attribute or a constant")),
    };
    c.expect(Tok::Close, "')'")?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cq(s: &str) -> ConjunctiveQuery {
        match parse_query(s).unwrap() {
            Query::Cq(q) => q,
            p => panic!("not a rule: {p:?}"),
        }
    }

    #[test]
    fn single_atom() {
        let q = cq("Q(x) :- R(x).");
        assert_eq!(q.body.len(), 1);
        assert_eq!(q.head, ["x"]);
    }

    #[test]
    fn intro_query_is_aliased() {
        let q = cq("q(x,y,z) :- E(x,x1), E(x1,x2), E(y,y1), E(y1,y2), E(z,z1), E(z1,z2), R(x2,y2,z2).");
        let aliases: Vec<&str> = q.body.iter().map(|a| a.alias.as_str()).collect();
        assert_eq!(aliases, ["E_1", "E_2", "E_3", "E_4", "E_5", "E_6", "R"]);
        assert!(q.body[..6].iter().all(|a| a.rel == "E"));
    }

    #[test]
    fn faults() {
        assert!(matches!(parse_query("Q(x) :- R(y)."), Err(Error::Unsafe(_))));
        assert!(matches!(parse_query("Q(x) :- R(x, x)."), Err(Error::Parse { .. })));
        assert!(matches!(parse_query("Q(x) :- R(x, 3)."), Err(Error::Parse { .. })));
        assert!(matches!(parse_query("Q(x) R(x)."), Err(Error::Parse { .. })));
        let e = parse_query("Q(x) :-\n  R(x) S(x).").unwrap_err();
        assert_eq!(e, Error::Parse { loc: "2:8".into(), msg: "expected ',' or '.', found Ident(\"S\")".into() });
    }

    #[test]
    fn plans() {
        let p = parse_plan("(union (diff (sjoin R S) T) U)").unwrap();
        assert_eq!(p.relations(), ["R", "S", "T", "U"]);
        let p = parse_plan("(project (A) (select (= B \"x\") (rename (A B) R)))").unwrap();
        assert!(matches!(p, Plan::Project(..)));
        assert_eq!(parse_query("R").unwrap(), Query::Plan(Plan::Rel("R".into())));
        assert!(parse_plan("(join R S)").is_err());
        assert!(parse_plan("(sjoin R S").is_err());
    }
}
