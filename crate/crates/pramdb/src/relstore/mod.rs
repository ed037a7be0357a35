//! Relations, settings, tokens and the array representation of relations.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

mod dictionary;
pub use dictionary::{build_dictionary_aordered, build_dictionary_general, Dictionary};
use crate::kernel::{Arr, Machine};

pub const MAX_ARITY: usize = 12;

/// A tuple of small numbers (keys or packed tokens).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Tup {
    n: u8,
    v: [u64; MAX_ARITY],
}

impl Tup {
    pub fn new(vals: &[u64]) -> Tup {
        assert!(vals.len() <= MAX_ARITY, "arity above {MAX_ARITY}");
        let mut v = [0; MAX_ARITY];
        v[..vals.len()].copy_from_slice(vals);
        Tup { n: vals.len() as u8, v }
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.v[..self.n as usize]
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize) -> u64 {
        self.v[i]
    }

    pub fn project(&self, pos: &[usize]) -> Tup {
        let mut t = Tup { n: pos.len() as u8, v: [0; MAX_ARITY] };
        for (k, &p) in pos.iter().enumerate() {
            t.v[k] = self.v[p];
        }
        t
    }

    pub fn concat(&self, other: &Tup, pos: &[usize]) -> Tup {
        let mut t = *self;
        for &p in pos {
            t.v[t.n as usize] = other.v[p];
            t.n += 1;
        }
        t
    }
}

impl PartialOrd for Tup {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Tup {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.as_slice().cmp(other.as_slice())
    }
}

impl std::fmt::Debug for Tup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.as_slice())
    }
}

/// Named link slots of a relation cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Partner = 0,
    Rep = 1,
    Proj = 2,
    GroupLo = 3,
    GroupHi = 4,
    Pred = 5,
    Succ = 6,
}

#[derive(Clone, Copy, PartialEq, Eq, Default, Debug)]
pub struct Cell {
    pub live: bool,
    pub t: Tup,
    pub links: [Option<u32>; 7],
}

impl Cell {
    pub fn new(t: Tup) -> Cell {
        Cell { live: true, t, links: [None; 7] }
    }

    pub fn link(&self, s: Slot) -> Option<u32> {
        self.links[s as usize]
    }

    pub fn with(mut self, s: Slot, v: Option<u32>) -> Cell {
        self.links[s as usize] = v;
        self
    }

    pub fn dead(mut self) -> Cell {
        self.live = false;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    General,
    Ordered,
    Dictionary,
}

impl std::str::FromStr for Setting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Setting::General),
            "ordered" => Ok(Setting::Ordered),
            "dictionary" => Ok(Setting::Dictionary),
            _ => Err(Error::Param(format!("unknown setting {s:?}"))),
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setting::General => "general",
            Setting::Ordered => "ordered",
            Setting::Dictionary => "dictionary",
        })
    }
}

/// What the numbers in a cell's tuple mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// Dictionary keys in `[1, vmax]`.
    Keys { vmax: u64 },
    /// Packed tokens; values only reachable through elemental operations.
    Tokens,
}

/// A value reference `(relation, tuple, attribute)`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub rel: u16,
    pub i: u32,
    pub j: u16,
}

impl Token {
    pub fn pack(self) -> u64 {
        ((self.rel as u64) << 48) | ((self.i as u64) << 16) | self.j as u64
    }

    pub fn unpack(x: u64) -> Token {
        Token { rel: (x >> 48) as u16, i: (x >> 16) as u32, j: x as u16 }
    }
}

/// A relation laid out in a shared array of cells.
#[derive(Clone, Debug)]
pub struct RelArray {
    pub attrs: Vec<String>,
    pub arr: Arr<Cell>,
    /// The array is ordered by these attributes (lexicographically).
    pub order: Vec<String>,
    pub linked: bool,
    pub concise: bool,
    pub domain: Domain,
}

impl RelArray {
    pub fn len(&self) -> usize {
        self.arr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arr.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }

    pub fn pos(&self, a: &str) -> Result<usize> {
        self.attrs
            .iter()
            .position(|x| x == a)
            .ok_or_else(|| Error::Schema(format!("unknown attribute {a:?} in {:?}", self.attrs)))
    }

    pub fn positions(&self, xs: &[String]) -> Result<Vec<usize>> {
        xs.iter().map(|a| self.pos(a)).collect()
    }

    pub fn fully_ordered(&self) -> bool {
        self.attrs.iter().all(|a| self.order.contains(a))
    }

    /// If the order starts with exactly the attribute set `x`, that prefix.
    pub fn ordered_prefix(&self, x: &[String]) -> Option<Vec<String>> {
        if self.order.len() < x.len() {
            return None;
        }
        let p = &self.order[..x.len()];
        x.iter().all(|a| p.contains(a)).then(|| p.to_vec())
    }

    pub fn vmax(&self) -> Result<u64> {
        match self.domain {
            Domain::Keys { vmax } => Ok(vmax),
            Domain::Tokens => Err(Error::Setting("operation needs the dictionary setting".into())),
        }
    }

    pub fn rename(&self, attrs: Vec<String>) -> RelArray {
        let order = self
            .order
            .iter()
            .map(|a| attrs[self.attrs.iter().position(|x| x == a).unwrap()].clone())
            .collect();
        RelArray { attrs, order, ..self.clone() }
    }

    /// Host inspection: tuples of inhabited cells, in array order.
    pub fn rows(&self, m: &Machine) -> Vec<Vec<u64>> {
        m.data(self.arr).iter().filter(|c| c.live).map(|c| c.t.as_slice().to_vec()).collect()
    }

    pub fn count(&self, m: &Machine) -> usize {
        m.data(self.arr).iter().filter(|c| c.live).count()
    }

    /// Places rows of keys in fresh memory (input placement, no work).
    pub fn from_rows(m: &mut Machine, attrs: Vec<String>, rows: &[Vec<u64>], vmax: u64) -> RelArray {
        let cells = rows.iter().map(|r| Cell::new(Tup::new(r))).collect();
        RelArray {
            attrs,
            arr: m.load(cells),
            order: Vec::new(),
            linked: false,
            concise: true,
            domain: Domain::Keys { vmax },
        }
    }
}

/// How cell numbers compare: directly as keys, or as tokens through the
/// database's elemental operations.
#[derive(Clone, Copy, Debug)]
pub enum Values<'a> {
    Keys,
    Tokens(&'a Database),
}

impl<'a> Values<'a> {
    pub fn of(rel: &RelArray, db: Option<&'a Database>) -> Result<Values<'a>> {
        match (rel.domain, db) {
            (Domain::Keys { .. }, _) => Ok(Values::Keys),
            (Domain::Tokens, Some(db)) => Ok(Values::Tokens(db)),
            (Domain::Tokens, None) => Err(Error::Setting("token arrays need their database".into())),
        }
    }

    /// Fails unless values carry a linear order.
    pub fn require_order(&self) -> Result<()> {
        match self {
            Values::Tokens(db) if db.setting == Setting::General => {
                Err(Error::Setting("ordered algorithms are unavailable in the general setting".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eq(&self, a: u64, b: u64) -> bool {
        match self {
            Values::Keys => a == b,
            Values::Tokens(db) => a == b || db.equal(Token::unpack(a), Token::unpack(b)).unwrap_or(false),
        }
    }

    pub fn cmp(&self, a: u64, b: u64) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match self {
            Values::Keys => a.cmp(&b),
            Values::Tokens(_) if self.eq(a, b) => Equal,
            Values::Tokens(db) => {
                if db.less_than(Token::unpack(a), Token::unpack(b)).unwrap_or(false) {
                    Less
                } else {
                    Greater
                }
            }
        }
    }

    pub fn eq_tup(&self, a: &[u64], b: &[u64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(&x, &y)| self.eq(x, y))
    }

    pub fn cmp_tup(&self, a: &[u64], b: &[u64]) -> std::cmp::Ordering {
        for (&x, &y) in a.iter().zip(b) {
            let o = self.cmp(x, y);
            if o.is_ne() {
                return o;
            }
        }
        a.len().cmp(&b.len())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub attrs: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub ordered_by: Option<Vec<String>>,
}

/// Elemental operations on a database.
#[derive(Clone, Debug)]
pub enum Elemental<'a> {
    Equal(Token, Token),
    EqualConst(Token, &'a str),
    LessThan(Token, Token),
    Output(Token),
    NumTuples(&'a str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElemValue {
    Bool(bool),
    Value(String),
    Nat(u64),
}

#[derive(Clone, Debug)]
pub struct Database {
    pub setting: Setting,
    pub relations: Vec<Relation>,
    nums: Vec<Vec<Vec<u64>>>,
    index: BTreeMap<String, usize>,
}

#[derive(Deserialize)]
struct Manifest {
    setting: Setting,
    relations: Vec<ManifestRel>,
}

#[derive(Deserialize)]
struct ManifestRel {
    name: String,
    file: String,
    #[serde(default)]
    ordered_by: Option<Vec<String>>,
}

impl Database {
    pub fn new(setting: Setting, relations: Vec<Relation>) -> Result<Database> {
        let mut index = BTreeMap::new();
        for (k, r) in relations.iter().enumerate() {
            if index.insert(r.name.clone(), k).is_some() {
                return Err(Error::Load(format!("relation {} declared twice", r.name)));
            }
            let mut seen = HashSet::new();
            if r.attrs.is_empty() || r.attrs.len() > MAX_ARITY {
                return Err(Error::Load(format!("relation {}: arity must be in 1..={MAX_ARITY}", r.name)));
            }
            if !r.attrs.iter().all(|a| seen.insert(a)) {
                return Err(Error::Load(format!("relation {}: duplicate attribute name", r.name)));
            }
            let mut rows = HashSet::new();
            for (i, row) in r.rows.iter().enumerate() {
                if row.len() != r.attrs.len() {
                    return Err(Error::Load(format!("relation {} row {}: arity mismatch", r.name, i + 1)));
                }
                if !rows.insert(row) {
                    return Err(Error::Load(format!("relation {} row {}: duplicate tuple", r.name, i + 1)));
                }
            }
            if let Some(ob) = &r.ordered_by {
                if let Some(a) = ob.iter().find(|a| !r.attrs.contains(a)) {
                    return Err(Error::Load(format!("relation {}: ordered_by names unknown attribute {a}", r.name)));
                }
            }
        }
        let mut db = Database { setting, relations, nums: Vec::new(), index };
        if setting == Setting::Dictionary {
            let vmax = db.vmax();
            let mut nums = Vec::new();
            for r in &db.relations {
                let mut rel = Vec::new();
                for (i, row) in r.rows.iter().enumerate() {
                    let mut t = Vec::new();
                    for v in row {
                        let x: u64 = v.trim().parse().map_err(|_| {
                            Error::Load(format!("relation {} row {}: {v:?} is not a natural", r.name, i + 1))
                        })?;
                        if x == 0 || x > vmax {
                            return Err(Error::Load(format!(
                                "relation {} row {}: value {x} outside [1, {vmax}]",
                                r.name,
                                i + 1
                            )));
                        }
                        t.push(x);
                    }
                    rel.push(t);
                }
                let distinct: HashSet<&Vec<u64>> = rel.iter().collect();
                if distinct.len() != rel.len() {
                    return Err(Error::Load(format!("relation {}: duplicate tuple", r.name)));
                }
                nums.push(rel);
            }
            db.nums = nums;
        }
        if setting != Setting::General {
            for (k, r) in db.relations.iter().enumerate() {
                if let Some(ob) = &r.ordered_by {
                    let pos: Vec<usize> = ob.iter().map(|a| r.attrs.iter().position(|x| x == a).unwrap()).collect();
                    let cmp = |i: usize, j: usize| db.cmp_rows(k, i, j, &pos);
                    if (1..r.rows.len()).any(|i| cmp(i - 1, i).is_gt()) {
                        return Err(Error::Load(format!("relation {}: rows are not ordered by {ob:?}", r.name)));
                    }
                }
            }
        }
        Ok(db)
    }

    /// Dictionary-setting database from numeric rows.
    pub fn from_keys(rels: Vec<(&str, Vec<&str>, Vec<Vec<u64>>)>) -> Result<Database> {
        let relations = rels
            .into_iter()
            .map(|(n, a, rows)| Relation {
                name: n.to_string(),
                attrs: a.into_iter().map(String::from).collect(),
                rows: rows.into_iter().map(|r| r.into_iter().map(|x| x.to_string()).collect()).collect(),
                ordered_by: None,
            })
            .collect();
        Database::new(Setting::Dictionary, relations)
    }

    pub fn from_manifest(path: &Path) -> Result<Database> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        let man: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut relations = Vec::new();
        for r in man.relations {
            let (attrs, rows) = read_csv(&dir.join(&r.file))?;
            relations.push(Relation { name: r.name, attrs, rows, ordered_by: r.ordered_by });
        }
        Database::new(man.setting, relations)
    }

    pub fn relation(&self, name: &str) -> Result<&Relation> {
        self.index
            .get(name)
            .map(|&k| &self.relations[k])
            .ok_or_else(|| Error::Schema(format!("unknown relation {name:?}")))
    }

    pub fn rel_index(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::Schema(format!("unknown relation {name:?}")))
    }

    /// Σ arity over the schema.
    pub fn c_val(&self) -> u64 {
        self.relations.iter().map(|r| r.attrs.len() as u64).sum()
    }

    /// Number of tuples.
    pub fn size(&self) -> u64 {
        self.relations.iter().map(|r| r.rows.len() as u64).sum()
    }

    /// Upper bound of dictionary values, `c_val · |D|`.
    pub fn vmax(&self) -> u64 {
        (self.c_val() * self.size()).max(1)
    }

    fn check(&self, t: Token) -> Result<&Relation> {
        let r = self
            .relations
            .get(t.rel as usize)
            .ok_or(Error::Bounds { index: t.rel as usize, len: self.relations.len() })?;
        if t.i == 0 || t.i as usize > r.rows.len() {
            return Err(Error::Bounds { index: t.i as usize, len: r.rows.len() });
        }
        if t.j == 0 || t.j as usize > r.attrs.len() {
            return Err(Error::Bounds { index: t.j as usize, len: r.attrs.len() });
        }
        Ok(r)
    }

    pub fn value(&self, t: Token) -> Result<&str> {
        let r = self.check(t)?;
        Ok(&r.rows[t.i as usize - 1][t.j as usize - 1])
    }

    /// Dictionary-setting value of a token.
    pub fn num(&self, t: Token) -> Result<u64> {
        self.check(t)?;
        if self.setting != Setting::Dictionary {
            return Err(Error::Setting("numeric values need the dictionary setting".into()));
        }
        Ok(self.nums[t.rel as usize][t.i as usize - 1][t.j as usize - 1])
    }

    pub fn equal(&self, a: Token, b: Token) -> Result<bool> {
        if self.setting == Setting::Dictionary {
            return Ok(self.num(a)? == self.num(b)?);
        }
        Ok(self.value(a)? == self.value(b)?)
    }

    pub fn equal_const(&self, a: Token, c: &str) -> Result<bool> {
        if self.setting == Setting::Dictionary {
            return Ok(c.trim().parse::<u64>().ok() == Some(self.num(a)?));
        }
        Ok(self.value(a)? == c)
    }

    pub fn less_than(&self, a: Token, b: Token) -> Result<bool> {
        match self.setting {
            Setting::General => Err(Error::Setting("LessThan is unavailable in the general setting".into())),
            Setting::Ordered => Ok(self.value(a)?.as_bytes() < self.value(b)?.as_bytes()),
            Setting::Dictionary => Ok(self.num(a)? < self.num(b)?),
        }
    }

    /// Host comparison of rows `i`, `j` (0-based) of relation `k` on the
    /// given attribute positions. Ordered or dictionary setting only.
    pub fn cmp_rows(&self, k: usize, i: usize, j: usize, pos: &[usize]) -> std::cmp::Ordering {
        for &p in pos {
            let o = if self.setting == Setting::Dictionary {
                self.nums[k][i][p].cmp(&self.nums[k][j][p])
            } else {
                let r = &self.relations[k].rows;
                r[i][p].as_bytes().cmp(r[j][p].as_bytes())
            };
            if o.is_ne() {
                return o;
            }
        }
        std::cmp::Ordering::Equal
    }

    /// For every relation and attribute, the row order (0-based) with that
    /// attribute first and the remaining attributes after it. These are the
    /// index arrays the attribute-wise ordered setting provides.
    pub fn attribute_orders(&self) -> Result<Vec<Vec<Vec<u32>>>> {
        if self.setting == Setting::General {
            return Err(Error::Setting("attribute orders need a linear order on values".into()));
        }
        Ok(self
            .relations
            .iter()
            .enumerate()
            .map(|(k, r)| {
                (0..r.attrs.len())
                    .map(|j| {
                        let pos: Vec<usize> = std::iter::once(j).chain((0..r.attrs.len()).filter(|&x| x != j)).collect();
                        let mut idx: Vec<u32> = (0..r.rows.len() as u32).collect();
                        idx.sort_by(|&a, &b| self.cmp_rows(k, a as usize, b as usize, &pos));
                        idx
                    })
                    .collect()
            })
            .collect())
    }

    pub fn num_tuples(&self, name: &str) -> Result<u64> {
        Ok(self.relation(name)?.rows.len() as u64)
    }

    pub fn elemental(&self, op: Elemental) -> Result<ElemValue> {
        Ok(match op {
            Elemental::Equal(a, b) => ElemValue::Bool(self.equal(a, b)?),
            Elemental::EqualConst(a, c) => ElemValue::Bool(self.equal_const(a, c)?),
            Elemental::LessThan(a, b) => ElemValue::Bool(self.less_than(a, b)?),
            Elemental::Output(a) => ElemValue::Value(self.value(a)?.to_string()),
            Elemental::NumTuples(r) => ElemValue::Nat(self.num_tuples(r)?),
        })
    }

    /// Token-equality closure usable inside rounds (packed tokens).
    pub fn token_eq(&self) -> impl Fn(u64, u64) -> bool + '_ {
        move |a, b| self.equal(Token::unpack(a), Token::unpack(b)).unwrap_or(false)
    }

    /// Relation as a concise array of keys (dictionary setting), with the
    /// given attribute names.
    pub fn load_keys(&self, m: &mut Machine, name: &str, attrs: Option<&[String]>) -> Result<RelArray> {
        if self.setting != Setting::Dictionary {
            return Err(Error::Setting(format!("{name}: keys need the dictionary setting")));
        }
        let k = self.rel_index(name)?;
        let r = &self.relations[k];
        let attrs = rename_attrs(r, attrs)?;
        let mut a = RelArray::from_rows(m, attrs, &self.nums[k], self.vmax());
        a.order = declared_order(r, &a.attrs);
        Ok(a)
    }

    /// Relation as a concise array of tokens.
    pub fn load_tokens(&self, m: &mut Machine, name: &str, attrs: Option<&[String]>) -> Result<RelArray> {
        let k = self.rel_index(name)?;
        let r = &self.relations[k];
        let attrs = rename_attrs(r, attrs)?;
        let cells = (0..r.rows.len())
            .map(|i| {
                let toks: Vec<u64> =
                    (0..r.attrs.len()).map(|j| Token { rel: k as u16, i: i as u32 + 1, j: j as u16 + 1 }.pack()).collect();
                Cell::new(Tup::new(&toks))
            })
            .collect();
        let order = if self.setting == Setting::General { Vec::new() } else { declared_order(r, &attrs) };
        Ok(RelArray { attrs, arr: m.load(cells), order, linked: false, concise: true, domain: Domain::Tokens })
    }
}

fn declared_order(r: &Relation, attrs: &[String]) -> Vec<String> {
    let ob = r.ordered_by.as_deref().unwrap_or(&[]);
    ob.iter().map(|a| attrs[r.attrs.iter().position(|x| x == a).unwrap()].clone()).collect()
}

fn rename_attrs(r: &Relation, attrs: Option<&[String]>) -> Result<Vec<String>> {
    match attrs {
        None => Ok(r.attrs.clone()),
        Some(a) if a.len() == r.attrs.len() => Ok(a.to_vec()),
        Some(a) => Err(Error::Schema(format!("{} has arity {}, used with {}", r.name, r.attrs.len(), a.len()))),
    }
}

/// Reads a relation file: header row of attribute names, no quoting.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
    let mut rd = csv::ReaderBuilder::new().has_headers(false).quoting(false).flexible(true).from_reader(file);
    let mut attrs: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Load(format!("{}:{}: {e}", path.display(), line + 1)))?;
        let fields: Vec<String> = rec.iter().map(|s| s.trim_end_matches('\r').to_string()).collect();
        if fields.iter().any(|f| f.contains('"')) {
            return Err(Error::Load(format!("{}:{}: quoted fields are not supported", path.display(), line + 1)));
        }
        match &attrs {
            None => attrs = Some(fields.iter().map(|s| s.trim().to_string()).collect()),
            Some(a) => {
                if fields.len() != a.len() {
                    return Err(Error::Load(format!(
                        "{}:{}: expected {} fields, found {}",
                        path.display(),
                        line + 1,
                        a.len(),
                        fields.len()
                    )));
                }
                rows.push(fields);
            }
        }
    }
    let attrs = attrs.ok_or_else(|| Error::Load(format!("{}: missing header row", path.display())))?;
    Ok((attrs, rows))
}

pub fn write_csv(path: &Path, attrs: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Never).from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(attrs).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn example_db() -> Database {
        // The running example: a ternary relation with assorted values.
        let rows = vec![
            vec!["Hello", "6000", "3.14"],
            vec!["World", "blob-a", "6000"],
            vec!["Hello", "blob-b", "7"],
        ];
        Database::new(
            Setting::General,
            vec![Relation {
                name: "R".into(),
                attrs: vec!["A".into(), "B".into(), "C".into()],
                rows: rows.into_iter().map(|r| r.into_iter().map(String::from).collect()).collect(),
                ordered_by: None,
            }],
        )
        .unwrap()
    }

    #[test]
    fn token_roundtrip() {
        let t = Token { rel: 3, i: 123456, j: 7 };
        assert_eq!(Token::unpack(t.pack()), t);
    }

    #[test]
    fn elemental_ops() {
        let db = example_db();
        let t = |i, j| Token { rel: 0, i, j };
        assert!(db.equal(t(1, 1), t(3, 1)).unwrap());
        assert!(db.equal(t(2, 2), t(2, 2)).unwrap());
        assert!(!db.equal(t(1, 1), t(2, 1)).unwrap());
        assert!(db.equal(t(1, 2), t(2, 3)).unwrap());
        assert!(matches!(db.less_than(t(1, 1), t(2, 1)), Err(Error::Setting(_))));
        assert!(matches!(db.value(t(4, 1)), Err(Error::Bounds { .. })));
        assert_eq!(db.elemental(Elemental::NumTuples("R")).unwrap(), ElemValue::Nat(3));
        assert_eq!(db.elemental(Elemental::EqualConst(t(2, 1), "World")).unwrap(), ElemValue::Bool(true));
    }

    #[test]
    fn dictionary_values_checked() {
        assert!(Database::from_keys(vec![("R", vec!["A"], vec![vec![1], vec![2]])]).is_ok());
        assert!(Database::from_keys(vec![("R", vec!["A"], vec![vec![1], vec![3]])]).is_err());
        assert!(Database::from_keys(vec![("R", vec!["A"], vec![vec![1], vec![1]])]).is_err());
        let db = Database::from_keys(vec![("R", vec!["A", "B"], vec![vec![1, 4], vec![2, 3]])]).unwrap();
        let t = |i, j| Token { rel: 0, i, j };
        assert!(db.less_than(t(1, 1), t(2, 1)).unwrap());
        assert!(!db.less_than(t(1, 2), t(2, 2)).unwrap());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = std::env::temp_dir().join(format!("pramdb-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("r.csv");
        let attrs = vec!["A".to_string(), "B".to_string()];
        let rows = vec![vec!["1".to_string(), "x".to_string()], vec!["2".to_string(), "y".to_string()]];
        write_csv(&p, &attrs, &rows).unwrap();
        let (a, r) = read_csv(&p).unwrap();
        assert_eq!((a, r), (attrs.clone(), rows));
        write_csv(&p, &attrs, &[]).unwrap();
        assert!(read_csv(&p).unwrap().1.is_empty());
        std::fs::write(&p, "A,B\n1,\"x,y\"\n").unwrap();
        assert!(read_csv(&p).is_err());
    }
}
