//! Dictionaries: injective keys in `[1, c_val·|D|]` for the values of a
//! database that is only reachable through elemental operations.

use crate::array_ops::monotone_search;
use crate::error::{Error, Result};
use crate::kernel::{Arr, Machine, Mem};
use crate::primitives::predecessor_links;

use super::{Cell, Database, Domain, RelArray, Setting, Token, Tup, Values};

/// Positions of the flattened database: relation `k` occupies
/// `offsets[k] ..` with `arity` consecutive positions per tuple.
#[derive(Clone, Debug)]
struct Layout {
    offsets: Vec<usize>,
    arities: Vec<usize>,
    sizes: Vec<usize>,
    total: usize,
}

impl Layout {
    fn of(db: &Database) -> Layout {
        let mut offsets = Vec::new();
        let mut arities = Vec::new();
        let mut sizes = Vec::new();
        let mut total = 0;
        for r in &db.relations {
            offsets.push(total);
            arities.push(r.attrs.len());
            sizes.push(r.rows.len() * r.attrs.len());
            total += r.rows.len() * r.attrs.len();
        }
        Layout { offsets, arities, sizes, total }
    }

    fn pos(&self, t: Token) -> usize {
        let k = t.rel as usize;
        self.offsets[k] + (t.i as usize - 1) * self.arities[k] + t.j as usize - 1
    }

    /// Token at a position; a constant-size scan over the schema.
    fn token(&self, p: usize) -> Token {
        let k = (0..self.offsets.len()).find(|&k| p < self.offsets[k] + self.sizes[k]).unwrap_or(0);
        let d = p - self.offsets[k];
        let a = self.arities[k];
        Token { rel: k as u16, i: (d / a) as u32 + 1, j: (d % a) as u16 + 1 }
    }
}

#[derive(Clone, Debug)]
pub struct Dictionary {
    /// Backing array of tokens; key `κ` stands for the value of `backing[κ-1]`.
    pub backing: Arr<u64>,
    /// Per database position, the backing index of its representative.
    pub key_pos: Arr<u32>,
    layout: Layout,
    vmax: u64,
}

impl Dictionary {
    pub fn vmax(&self) -> u64 {
        self.vmax
    }

    /// Number of database positions (tokens).
    pub fn tokens(&self) -> usize {
        self.layout.total
    }

    /// Key of a token, as a processor would read it.
    pub fn key_in(&self, r: &Mem, t: Token) -> u64 {
        r.get(self.key_pos, self.layout.pos(t)) as u64 + 1
    }

    pub fn key_of(&self, m: &Machine, t: Token) -> u64 {
        m.peek(self.key_pos, self.layout.pos(t)) as u64 + 1
    }

    pub fn key_output(&self, m: &Machine, db: &Database, key: u64) -> Result<String> {
        if key == 0 || key as usize > self.backing.len() {
            return Err(Error::Bounds { index: key as usize, len: self.backing.len() });
        }
        Ok(db.value(Token::unpack(m.peek(self.backing, key as usize - 1)))?.to_string())
    }

    /// Distinct keys in use.
    pub fn key_count(&self, m: &Machine) -> usize {
        let mut k = m.read(self.key_pos);
        k.sort_unstable();
        k.dedup();
        k.len()
    }

    /// A relation as a concise array of keys; one processor per tuple.
    pub fn load_relation(&self, m: &mut Machine, db: &Database, name: &str, attrs: Option<&[String]>) -> Result<RelArray> {
        let k = db.rel_index(name)?;
        let r = &db.relations[k];
        let attrs = super::rename_attrs(r, attrs)?;
        let (n, ar) = (r.rows.len(), r.attrs.len());
        let arr = m.alloc::<Cell>(n);
        m.step(n, |i, mem, o| {
            let keys: Vec<u64> =
                (0..ar).map(|j| self.key_in(mem, Token { rel: k as u16, i: i as u32 + 1, j: j as u16 + 1 })).collect();
            o.put(arr, i, Cell::new(Tup::new(&keys)));
        })?;
        Ok(RelArray { attrs, arr, order: Vec::new(), linked: false, concise: true, domain: Domain::Keys { vmax: self.vmax } })
    }

    /// Key of a literal, by comparing it with every token.
    pub fn lookup_const(&self, m: &mut Machine, db: &Database, c: &str) -> Result<Option<u64>> {
        let hit = m.alloc::<Option<u64>>(1);
        let lay = &self.layout;
        m.step(lay.total, |p, r, o| {
            let t = lay.token(p);
            if db.equal_const(t, c).unwrap_or(false) {
                o.put(hit, 0, Some(self.key_in(r, t)));
            }
        })?;
        Ok(m.peek(hit, 0))
    }

    /// Values of a key array, row by row (host output).
    pub fn decode(&self, m: &Machine, db: &Database, rows: &[Vec<u64>]) -> Result<Vec<Vec<String>>> {
        rows.iter().map(|r| r.iter().map(|&k| self.key_output(m, db, k)).collect()).collect()
    }
}

fn tokens_array(m: &mut Machine, lay: &Layout) -> Result<Arr<u64>> {
    let d = m.alloc::<u64>(lay.total);
    m.step(lay.total, |p, _, o| o.put(d, p, lay.token(p).pack()))?;
    Ok(d)
}

/// Dictionary from Equal alone: every pair of positions is compared, the
/// first occurrence of every value becomes its representative.
pub fn build_dictionary_general(m: &mut Machine, db: &Database) -> Result<Dictionary> {
    let lay = Layout::of(db);
    let vals = Values::Tokens(db);
    let n = lay.total;
    m.phase("dictionary_general", |m| {
        let d = tokens_array(m, &lay)?;
        let dup = m.alloc::<bool>(n);
        m.step(n * n, |x, r, o| {
            let (a, b) = (x / n, x % n);
            if a < b && vals.eq(r.get(d, a), r.get(d, b)) {
                o.put(dup, b, true);
            }
        })?;
        let key_pos = m.alloc::<u32>(n);
        m.step(n * n, |x, r, o| {
            let (a, b) = (x / n, x % n);
            if r.get(dup, a) {
                return;
            }
            if a == b || (a < b && vals.eq(r.get(d, a), r.get(d, b))) {
                o.put(key_pos, b, a as u32);
            }
        })?;
        Ok(Dictionary { backing: d, key_pos, layout: lay.clone(), vmax: db.vmax() })
    })
}

/// Dictionary in the attribute-wise ordered setting. `orders[k][j]` lists
/// the rows of relation `k` (0-based) in an order that sorts attribute `j`
/// first. The pieces are laid out side by side, each deduplicated by
/// predecessor links; every position then searches each piece for its
/// value and takes the representative in the first piece that has it.
pub fn build_dictionary_aordered(
    m: &mut Machine,
    db: &Database,
    orders: &[Vec<Vec<u32>>],
    epsilon: f64,
) -> Result<Dictionary> {
    if db.setting == Setting::General {
        return Err(Error::Setting("attribute-wise ordered dictionaries need ordered values".into()));
    }
    let lay = Layout::of(db);
    let vals = Values::Tokens(db);
    if orders.len() != db.relations.len() {
        return Err(Error::Precondition("missing index arrays".into()));
    }
    // Pieces (relation, attribute) with their offsets in the flat array.
    let mut pieces: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut flat: Vec<u32> = Vec::with_capacity(lay.total);
    for (k, r) in db.relations.iter().enumerate() {
        if orders[k].len() != r.attrs.len() {
            return Err(Error::Precondition(format!("missing index array for relation {}", r.name)));
        }
        for (j, ord) in orders[k].iter().enumerate() {
            let mut seen = vec![false; r.rows.len()];
            let perm = ord.len() == r.rows.len()
                && ord.iter().all(|&i| (i as usize) < seen.len() && !std::mem::replace(&mut seen[i as usize], true));
            if !perm || ord.windows(2).any(|w| db.cmp_rows(k, w[0] as usize, w[1] as usize, &[j]).is_gt()) {
                return Err(Error::Precondition(format!("index array {}.{} is not an ordering", r.name, r.attrs[j])));
            }
            pieces.push((k, j, flat.len(), ord.len()));
            flat.extend_from_slice(ord);
        }
    }
    let n = flat.len();
    let np = pieces.len();
    let maxlen = pieces.iter().map(|p| p.3).max().unwrap_or(0);
    m.phase("dictionary_aordered", |m| {
        let idx = m.load(flat);
        let piece_of = |c: usize| pieces.iter().rposition(|p| p.2 <= c && c < p.2 + p.3).unwrap_or(0);
        let cc = m.alloc::<u64>(n);
        m.step(n, |c, r, o| {
            let (k, j, _, _) = pieces[piece_of(c)];
            let t = Token { rel: k as u16, i: r.get(idx, c) + 1, j: j as u16 + 1 };
            o.put(cc, c, t.pack());
        })?;
        let rep = m.alloc::<bool>(n);
        m.step(n, |c, r, o| {
            let start = pieces[piece_of(c)].2;
            if c == start || !vals.eq(r.get(cc, c - 1), r.get(cc, c)) {
                o.put(rep, c, true);
            }
        })?;
        let prep = predecessor_links(m, rep, epsilon)?;
        let own = move |r: &Mem, c: usize| if r.get(rep, c) { c } else { r.get(prep, c).unwrap_or(0) as usize };

        let nq = lay.total * np;
        let ge = monotone_search(
            m,
            nq,
            maxlen,
            epsilon,
            |_, q| {
                let p = pieces[q % np];
                Some((p.2, p.3))
            },
            |r, q, c| {
                let key = lay.token(q / np).pack();
                vals.cmp(r.get(cc, own(r, c)), key).is_lt()
            },
        )?;
        let key_pos = m.alloc::<u32>(lay.total);
        m.step(lay.total, |p, r, o| {
            let key = lay.token(p).pack();
            for (pi, &(_, _, start, len)) in pieces.iter().enumerate() {
                let l = r.get(ge, p * np + pi) as usize;
                if l < len && vals.eq(r.get(cc, start + l), key) {
                    o.put(key_pos, p, (start + l) as u32);
                    return;
                }
            }
            o.fail(Error::Assertion(format!("value of position {p} missing from its own piece")));
        })?;
        Ok(Dictionary { backing: cc, key_pos, layout: lay.clone(), vmax: db.vmax() })
    })
}
