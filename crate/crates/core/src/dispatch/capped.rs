//! Cost-optimal dispatch under a feed-in power cap, and the search for the
//! smallest cap that keeps the cost optimum.
//!
//! Charging is decided lazily. Surplus above the cap must be stored when it
//! occurs. Any other charging is only committed when a later deficit needs
//! the energy, and then at the latest earlier surplus interval that still has
//! charging power left and whose state-of-charge path stays below capacity.
//! Deficits are always served as early and as fully as possible.

use super::{settle, DispatchParams, DispatchResult};

/// Range add, range max over interval end states of charge.
struct MaxTree {
    size: usize,
    max: Vec<f64>,
    add: Vec<f64>,
}

impl MaxTree {
    fn new(n: usize) -> Self {
        let size = n.max(1).next_power_of_two();
        MaxTree {
            size,
            max: vec![0.0; 2 * size],
            add: vec![0.0; 2 * size],
        }
    }

    fn set(&mut self, i: usize, value: f64) {
        // Pending adds on the path are applied to the leaf value on query, so
        // store the value net of them.
        let mut node = 1;
        let (mut lo, mut hi) = (0, self.size);
        let mut pending = 0.0;
        while hi - lo > 1 {
            pending += self.add[node];
            let mid = (lo + hi) / 2;
            if i < mid {
                node *= 2;
                hi = mid;
            } else {
                node = 2 * node + 1;
                lo = mid;
            }
        }
        self.add[node] = 0.0;
        self.max[node] = value - pending;
        node /= 2;
        while node >= 1 {
            self.max[node] = self.max[2 * node].max(self.max[2 * node + 1]) + self.add[node];
            node /= 2;
        }
    }

    /// Adds `delta` on `[l, r]` (inclusive).
    fn add_range(&mut self, l: usize, r: usize, delta: f64) {
        self.add_rec(1, 0, self.size, l, r + 1, delta);
    }

    fn add_rec(&mut self, node: usize, lo: usize, hi: usize, l: usize, r: usize, delta: f64) {
        if r <= lo || hi <= l {
            return;
        }
        if l <= lo && hi <= r {
            self.max[node] += delta;
            self.add[node] += delta;
            return;
        }
        let mid = (lo + hi) / 2;
        self.add_rec(2 * node, lo, mid, l, r, delta);
        self.add_rec(2 * node + 1, mid, hi, l, r, delta);
        self.max[node] = self.max[2 * node].max(self.max[2 * node + 1]) + self.add[node];
    }

    /// Maximum on `[l, r]` (inclusive).
    fn max_range(&self, l: usize, r: usize) -> f64 {
        self.max_rec(1, 0, self.size, l, r + 1)
    }

    fn max_rec(&self, node: usize, lo: usize, hi: usize, l: usize, r: usize) -> f64 {
        if r <= lo || hi <= l {
            return f64::NEG_INFINITY;
        }
        if l <= lo && hi <= r {
            return self.max[node];
        }
        let mid = (lo + hi) / 2;
        self.max_rec(2 * node, lo, mid, l, r).max(self.max_rec(2 * node + 1, mid, hi, l, r)) + self.add[node]
    }
}

/// Cost-optimal schedule with every feed-in at most `cap_kw`, or `None` when
/// surplus above the cap cannot be stored. Requires an empty battery at the
/// start and net-surplus-only charging.
pub(super) fn dispatch_with_cap(load: &[f64], pv: &[f64], params: &DispatchParams, dt: f64, cap_kw: f64) -> Option<DispatchResult> {
    let n = load.len();
    let cap = params.capacity_kwh;
    let (eta_ch, eta_dch) = (params.eta_ch, params.eta_dch);
    let ch_max = params.max_charge_kwh(dt);
    let dch_max = params.max_discharge_kwh(dt);
    let feed_cap = cap_kw * dt;
    let slack = 1e-12 * (1.0 + cap);
    let mut charge = vec![0.0; n];
    let mut discharge = vec![0.0; n];
    let mut tree = MaxTree::new(n);
    // Surplus intervals with charging power left: (interval, kWh of charge).
    let mut spare: Vec<(usize, f64)> = Vec::new();
    let mut level = 0.0_f64;
    for t in 0..n {
        let surplus = pv[t] - load[t];
        if surplus > 0.0 {
            let forced = (surplus - feed_cap).max(0.0);
            if forced > ch_max + slack || level + eta_ch * forced > cap + slack {
                return None;
            }
            let forced = forced.min(ch_max);
            charge[t] = forced;
            level = (level + eta_ch * forced).min(cap);
            let room = surplus.min(ch_max) - forced;
            if room > 0.0 {
                spare.push((t, room));
            }
        } else if surplus < 0.0 {
            let want = (-surplus).min(dch_max);
            let mut need = want / eta_dch - level;
            while need > slack {
                let Some(&mut (u, ref mut room)) = spare.last_mut() else {
                    break;
                };
                let headroom = cap - tree.max_range(u, t - 1);
                let stored = need.min(eta_ch * *room).min(headroom.max(0.0));
                if stored > 0.0 {
                    tree.add_range(u, t - 1, stored);
                    charge[u] += stored / eta_ch;
                    *room -= stored / eta_ch;
                    level += stored;
                    need -= stored;
                }
                if headroom - stored <= slack {
                    // The binding interval lies inside every earlier range too.
                    spare.clear();
                } else if *room <= slack {
                    spare.pop();
                }
            }
            let dch = want.min(level * eta_dch);
            discharge[t] = dch;
            level = (level - dch / eta_dch).max(0.0);
        }
        tree.set(t, level);
    }
    Some(settle(load, pv, params, dt, 0.0, charge, discharge))
}

/// Smallest feed-in cap whose capped optimum costs no more than
/// `cost_target + cost_tol`, found by bisection between zero and `upper_kw`
/// (a cap known to be feasible). Returns the schedule at the cap found.
pub(super) fn min_cap_dispatch(
    load: &[f64],
    pv: &[f64],
    params: &DispatchParams,
    dt: f64,
    upper_kw: f64,
    cost_target: f64,
    cost_tol: f64,
) -> Option<DispatchResult> {
    let accept = |cap_kw: f64| {
        dispatch_with_cap(load, pv, params, dt, cap_kw).filter(|d| d.cost_eur <= cost_target + cost_tol)
    };
    if let Some(d) = accept(0.0) {
        return Some(d);
    }
    let mut best = accept(upper_kw)?;
    let (mut lo, mut hi) = (0.0, upper_kw);
    for _ in 0..200 {
        if hi - lo <= 1e-11 * upper_kw.max(1e-9) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match accept(mid) {
            Some(d) => {
                hi = mid;
                best = d;
            }
            None => lo = mid,
        }
    }
    Some(best)
}
