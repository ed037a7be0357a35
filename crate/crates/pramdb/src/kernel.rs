//! Simulated CRCW PRAM.
//!
//! A round is one call to [`Machine::step`]: every processor reads from the
//! pre-round snapshot and buffers its writes; the buffers are applied after
//! all processors ran, with conflicts resolved per [`WriteMode`].

use std::any::Any;
use std::cell::Cell as StdCell;
use std::collections::HashMap;
use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WriteMode {
    Common,
    #[default]
    Arbitrary,
    Priority,
}

impl std::str::FromStr for WriteMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "common" => Ok(WriteMode::Common),
            "arbitrary" => Ok(WriteMode::Arbitrary),
            "priority" => Ok(WriteMode::Priority),
            _ => Err(Error::Param(format!("unknown write mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for WriteMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            WriteMode::Common => "common",
            WriteMode::Arbitrary => "arbitrary",
            WriteMode::Priority => "priority",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineConfig {
    pub write_mode: WriteMode,
    pub arbitrary_seed: u64,
    pub accounting_enabled: bool,
    /// Largest operand count accepted by the exact small-sum macro.
    pub macro_width: usize,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            write_mode: WriteMode::Arbitrary,
            arbitrary_seed: 0,
            accounting_enabled: true,
            macro_width: 64,
        }
    }
}

impl MachineConfig {
    pub fn with_mode(mode: WriteMode) -> Self {
        MachineConfig { write_mode: mode, ..Default::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub label: String,
    pub calls: u64,
    pub work: u64,
    pub depth: u64,
    pub space: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub work: u64,
    pub depth: u64,
    pub space: u64,
    pub phases: Vec<Phase>,
}

/// Anything storable in a shared cell. A value occupies
/// `ceil(size_of::<T>() / 8)` machine words.
pub trait Word: Clone + PartialEq + Default + 'static {}
impl<T: Clone + PartialEq + Default + 'static> Word for T {}

fn words_of<T>() -> usize {
    std::mem::size_of::<T>().div_ceil(8).max(1)
}

/// Handle to a shared array. The length is the "hidden" length cell and is
/// free to read.
pub struct Arr<T> {
    id: u32,
    len: usize,
    _t: PhantomData<fn() -> T>,
}

impl<T> Clone for Arr<T> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<T> Copy for Arr<T> {}

impl<T> std::fmt::Debug for Arr<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Arr#{}[{}]", self.id, self.len)
    }
}

impl<T> PartialEq for Arr<T> {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl<T> Arr<T> {
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn id(&self) -> u32 {
        self.id
    }
}

struct Region {
    base: usize,
    live: bool,
    data: Box<dyn Any>,
}

/// Read-only view of memory during a round.
pub struct Mem<'a> {
    regions: &'a [Region],
    fault: StdCell<Option<(usize, usize)>>,
}

impl Mem<'_> {
    fn slice<T: Word>(&self, a: Arr<T>) -> &[T] {
        let r = &self.regions[a.id as usize];
        match r.data.downcast_ref::<Vec<T>>() {
            Some(v) if r.live => v,
            _ => {
                self.fault.set(Some((0, 0)));
                &[]
            }
        }
    }

    pub fn get<T: Word>(&self, a: Arr<T>, i: usize) -> T {
        match self.slice(a).get(i) {
            Some(v) => v.clone(),
            None => {
                if self.fault.get().is_none() {
                    self.fault.set(Some((i, a.len)));
                }
                T::default()
            }
        }
    }

    /// Borrowing read; out-of-bounds records a fault and yields `None`.
    pub fn at<T: Word>(&self, a: Arr<T>, i: usize) -> Option<&T> {
        let r = self.slice(a).get(i);
        if r.is_none() && self.fault.get().is_none() {
            self.fault.set(Some((i, a.len)));
        }
        r
    }
}

trait Pending {
    fn as_any_mut(&mut self) -> &mut dyn Any;
    fn apply(self: Box<Self>, region: &mut Region, mode: WriteMode, seed: u64, round: u64) -> Result<()>;
}

struct Buf<T> {
    writes: Vec<(usize, u32, T)>,
}

impl<T: Word> Pending for Buf<T> {
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }

    fn apply(self: Box<Self>, region: &mut Region, mode: WriteMode, seed: u64, round: u64) -> Result<()> {
        let mut w = self.writes;
        let base = region.base;
        let data = region
            .data
            .downcast_mut::<Vec<T>>()
            .expect("region type matches handle type");
        w.sort_by_key(|&(i, p, _)| (i, p));
        let mut s = 0;
        while s < w.len() {
            let idx = w[s].0;
            let mut e = s + 1;
            while e < w.len() && w[e].0 == idx {
                e += 1;
            }
            let v = if e - s == 1 {
                std::mem::take(&mut w[s].2)
            } else {
                let addr = base + idx;
                let k = pick(&w[s..e], mode, seed, round, addr)?;
                std::mem::take(&mut w[s + k].2)
            };
            data[idx] = v;
            s = e;
        }
        Ok(())
    }
}

fn pick<T: PartialEq>(group: &[(usize, u32, T)], mode: WriteMode, seed: u64, round: u64, addr: usize) -> Result<usize> {
    match mode {
        WriteMode::Priority => Ok(0),
        WriteMode::Common => {
            if group.iter().all(|g| g.2 == group[0].2) {
                Ok(0)
            } else {
                Err(Error::Conflict { round, addr })
            }
        }
        WriteMode::Arbitrary => Ok((arbitrary_hash(seed, round, addr) % group.len() as u64) as usize),
    }
}

fn arbitrary_hash(seed: u64, round: u64, addr: usize) -> u64 {
    let mut x = seed ^ round.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (addr as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    // splitmix64 finaliser
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Resolves the pending writes to one cell. `pending` holds
/// `(processor id, value)` pairs in any order.
pub fn resolve_writes<T: Clone + PartialEq>(
    pending: &[(u32, T)],
    mode: WriteMode,
    seed: u64,
    round: u64,
    addr: usize,
) -> Result<T> {
    if pending.is_empty() {
        return Err(Error::Precondition("no pending writes".into()));
    }
    let mut g: Vec<(usize, u32, T)> = pending.iter().map(|(p, v)| (addr, *p, v.clone())).collect();
    g.sort_by_key(|x| x.1);
    let k = if g.len() == 1 { 0 } else { pick(&g, mode, seed, round, addr)? };
    Ok(g.swap_remove(k).2)
}

/// Per-processor write buffer and cost sink for one round.
pub struct Out {
    pid: u32,
    bufs: Vec<(u32, Box<dyn Pending>)>,
    charge: u64,
    macro_width: usize,
    fault: Option<Error>,
}

impl Out {
    pub fn put<T: Word>(&mut self, a: Arr<T>, i: usize, v: T) {
        if i >= a.len {
            if self.fault.is_none() {
                self.fault = Some(Error::Bounds { index: i, len: a.len });
            }
            return;
        }
        let pos = match self.bufs.iter().position(|(id, _)| *id == a.id) {
            Some(p) => p,
            None => {
                self.bufs.push((a.id, Box::new(Buf::<T> { writes: Vec::new() })));
                self.bufs.len() - 1
            }
        };
        let buf = self.bufs[pos]
            .1
            .as_any_mut()
            .downcast_mut::<Buf<T>>()
            .expect("buffer type matches handle type");
        buf.writes.push((i, self.pid, v));
    }

    /// Extra work performed by this processor in this round.
    pub fn charge(&mut self, w: u64) {
        self.charge += w;
    }

    /// Exact sum of at most `macro_width` words inside a round; costs k².
    pub fn sum(&mut self, vals: &[u64]) -> u64 {
        let k = vals.len();
        if k > self.macro_width {
            self.fail(Error::Param(format!("macro sum over {k} operands exceeds width {}", self.macro_width)));
            return 0;
        }
        self.charge += (k * k) as u64;
        let mut s: u64 = 0;
        for &v in vals {
            match s.checked_add(v) {
                Some(x) => s = x,
                None => {
                    self.fail(Error::Overflow("small sum exceeds word bound".into()));
                    return 0;
                }
            }
        }
        s
    }

    pub fn fail(&mut self, e: Error) {
        if self.fault.is_none() {
            self.fault = Some(e);
        }
    }
}

pub struct Machine {
    cfg: MachineConfig,
    regions: Vec<Region>,
    stack: Vec<u32>,
    cursor: usize,
    hwm: usize,
    round: u64,
    work: u64,
    depth: u64,
    phases: Vec<Phase>,
    phase_ix: HashMap<String, usize>,
    open: Vec<(String, u64, u64)>,
}

impl Machine {
    pub fn new(cfg: MachineConfig) -> Self {
        Machine {
            cfg,
            regions: Vec::new(),
            stack: Vec::new(),
            cursor: 0,
            hwm: 0,
            round: 0,
            work: 0,
            depth: 0,
            phases: Vec::new(),
            phase_ix: HashMap::new(),
            open: Vec::new(),
        }
    }

    pub fn config(&self) -> &MachineConfig {
        &self.cfg
    }

    pub fn mode(&self) -> WriteMode {
        self.cfg.write_mode
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn space(&self) -> u64 {
        self.hwm as u64
    }

    pub fn rounds(&self) -> u64 {
        self.round
    }

    pub fn metrics(&self) -> Metrics {
        Metrics { work: self.work, depth: self.depth, space: self.hwm as u64, phases: self.phases.clone() }
    }

    pub fn alloc<T: Word>(&mut self, len: usize) -> Arr<T> {
        self.install(vec![T::default(); len])
    }

    /// Places input data in fresh shared memory. Inputs are given, so no
    /// work is charged; the region counts towards space.
    pub fn load<T: Word>(&mut self, data: Vec<T>) -> Arr<T> {
        self.install(data)
    }

    fn install<T: Word>(&mut self, data: Vec<T>) -> Arr<T> {
        let len = data.len();
        let words = len * words_of::<T>();
        let id = self.regions.len() as u32;
        self.regions.push(Region { base: self.cursor, live: true, data: Box::new(data) });
        self.stack.push(id);
        self.cursor += words;
        self.hwm = self.hwm.max(self.cursor);
        Arr { id, len, _t: PhantomData }
    }

    /// Retires a region. Space is reclaimed once everything above it is gone.
    pub fn free<T: Word>(&mut self, a: Arr<T>) {
        let r = &mut self.regions[a.id as usize];
        if !r.live {
            return;
        }
        r.live = false;
        r.data = Box::new(Vec::<T>::new());
        while let Some(&top) = self.stack.last() {
            let t = &self.regions[top as usize];
            if t.live {
                break;
            }
            self.cursor = t.base;
            self.stack.pop();
        }
    }

    /// Host-side inspection; not part of any modeled computation.
    pub fn read<T: Word>(&self, a: Arr<T>) -> Vec<T> {
        self.data(a).to_vec()
    }

    pub fn peek<T: Word>(&self, a: Arr<T>, i: usize) -> T {
        self.data(a)[i].clone()
    }

    pub fn data<T: Word>(&self, a: Arr<T>) -> &[T] {
        let r = &self.regions[a.id as usize];
        assert!(r.live, "access to retired region");
        r.data.downcast_ref::<Vec<T>>().expect("region type")
    }

    /// Host-side initialisation of an input cell (test and loader setup).
    pub fn poke<T: Word>(&mut self, a: Arr<T>, i: usize, v: T) {
        let r = &mut self.regions[a.id as usize];
        r.data.downcast_mut::<Vec<T>>().expect("region type")[i] = v;
    }

    /// Runs one synchronous round with `procs` processors.
    pub fn step<F>(&mut self, procs: usize, f: F) -> Result<()>
    where
        F: Fn(usize, &Mem, &mut Out),
    {
        let mem = Mem { regions: &self.regions, fault: StdCell::new(None) };
        let mut out = Out {
            pid: 0,
            bufs: Vec::new(),
            charge: 0,
            macro_width: self.cfg.macro_width,
            fault: None,
        };
        for p in 0..procs {
            out.pid = p as u32;
            f(p, &mem, &mut out);
        }
        if let Some((index, len)) = mem.fault.get() {
            return Err(Error::Bounds { index, len });
        }
        if let Some(e) = out.fault.take() {
            return Err(e);
        }
        let round = self.round;
        self.round += 1;
        if self.cfg.accounting_enabled {
            self.work += procs as u64 + out.charge;
            self.depth += 1;
        }
        for (id, buf) in out.bufs {
            let region = &mut self.regions[id as usize];
            if !region.live {
                return Err(Error::Bounds { index: 0, len: 0 });
            }
            buf.apply(region, self.cfg.write_mode, self.cfg.arbitrary_seed, round)?;
        }
        Ok(())
    }

    /// Exact sum of few words as a single macro round (k² work, depth 1).
    pub fn exact_sum_small(&mut self, values: &[u64]) -> Result<u64> {
        let k = values.len();
        if k > self.cfg.macro_width {
            return Err(Error::Param(format!("macro sum over {k} operands exceeds width {}", self.cfg.macro_width)));
        }
        let mut s: u64 = 0;
        for &v in values {
            s = s.checked_add(v).ok_or_else(|| Error::Overflow("small sum exceeds word bound".into()))?;
        }
        self.round += 1;
        if self.cfg.accounting_enabled {
            self.work += (k * k) as u64;
            self.depth += 1;
        }
        Ok(s)
    }

    pub fn enter(&mut self, label: &str) {
        let path = match self.open.last() {
            Some((p, _, _)) => format!("{p}/{label}"),
            None => label.to_string(),
        };
        self.open.push((path, self.work, self.depth));
    }

    pub fn exit(&mut self) {
        let Some((path, w0, d0)) = self.open.pop() else { return };
        let ix = match self.phase_ix.get(&path) {
            Some(&i) => i,
            None => {
                self.phases.push(Phase { label: path.clone(), ..Default::default() });
                self.phase_ix.insert(path, self.phases.len() - 1);
                self.phases.len() - 1
            }
        };
        let ph = &mut self.phases[ix];
        ph.calls += 1;
        ph.work += self.work - w0;
        ph.depth += self.depth - d0;
        ph.space = ph.space.max(self.hwm as u64);
    }

    /// Runs `f` inside a labelled phase.
    pub fn phase<R>(&mut self, label: &str, f: impl FnOnce(&mut Self) -> Result<R>) -> Result<R> {
        self.enter(label);
        let r = f(self);
        self.exit();
        r
    }
}
