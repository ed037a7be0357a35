//! Task scheduling: hand every task a block of consecutive processors.

use crate::error::Result;
use crate::kernel::{Arr, Machine};

use super::links::predecessor_links;
use super::prefix::approx_prefix_sums;

#[derive(Clone, Copy, Debug)]
pub struct Schedule {
    /// `(task index, lead cell)` for every assigned cell.
    pub cells: Arr<Option<(u32, u32)>>,
    /// Lead cell per task with non-zero demand.
    pub leads: Arr<Option<u32>>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.cells.len()
    }
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Task `i` asks for `demand[i]` processors; the task's payload is its
/// index. Returns at most `(1+λ) Σ demand` cells.
pub fn schedule_tasks(m: &mut Machine, demand: Arr<u64>, lambda: f64, epsilon: f64) -> Result<Schedule> {
    m.phase("schedule", |m| {
        let n = demand.len();
        let s = approx_prefix_sums(m, demand, lambda, epsilon)?;
        let size = if n == 0 { 0 } else { m.peek(s, n - 1) as usize };
        let owner = m.alloc::<Option<u32>>(size);
        let lead_flag = m.alloc::<bool>(size);
        let leads = m.alloc::<Option<u32>>(n);
        m.step(n, |i, r, o| {
            if r.get(demand, i) > 0 {
                let lead = if i == 0 { 0 } else { r.get(s, i - 1) as usize };
                o.put(owner, lead, Some(i as u32));
                o.put(lead_flag, lead, true);
                o.put(leads, i, Some(lead as u32));
            }
        })?;
        let pred = predecessor_links(m, lead_flag, epsilon)?;
        let cells = m.alloc::<Option<(u32, u32)>>(size);
        m.step(size, |j, r, o| {
            let k = if r.get(lead_flag, j) { Some(j as u32) } else { r.get(pred, j) };
            let Some(k) = k else { return };
            let Some(t) = r.get(owner, k as usize) else { return };
            if ((j - k as usize) as u64) < r.get(demand, t as usize) {
                o.put(cells, j, Some((t, k)));
            }
        })?;
        Ok(Schedule { cells, leads })
    })
}
