//! Fast evaluation of single-coordinate objective changes.
//!
//! Changing `r_i` by `delta` shifts `S_j` for every factor `j >= i` and `w_jk`
//! for the features of row `i`. In factor `j` the absent-feature terms are
//! `sum_k ln(S_j - w_jk)`, a sum over almost all `L_j` features. Writing
//! `S_j - w_jk = a_k + d` with `a_k = X_j - w_jk` for a fixed center `X_j`, the
//! sum is split into a near set (small `a_k`, kept explicitly) and a far set
//! summarized by `sum ln a_k` and the power sums `sum a_k^-m`, from which
//! `sum ln(a_k + d)` follows by the series of `ln(1 + d / a_k)`. Only the few
//! features of row `i` need individual treatment. Centers are moved when `S_j`
//! drifts too far from them.

use super::{check_fitness, first_row_term, LikelihoodError, LikelihoodState, LogLik, Structure};
use crate::model::{AttributeMatrix, ModelParams};

/// Number of power sums kept per factor.
const TERMS: usize = 16;

/// Far features satisfy `a_k >= FAR_RATIO * radius`, which bounds the series
/// ratio by `1 / FAR_RATIO` and the truncation error per feature by
/// `FAR_RATIO^-(TERMS + 1)`.
const FAR_RATIO: f64 = 8.0;

#[derive(Debug, Clone)]
struct Factor {
    center: f64,
    radius: f64,
    /// Sum of `ln a_k` over far features.
    base: f64,
    /// `power[m] = sum a_k^-(m + 1)` over far features.
    power: [f64; TERMS],
    far_count: usize,
    /// Near features `(k, a_k)`, sorted by `k`.
    near: Vec<(u32, f64)>,
    /// Features with `P_j(k) < 1`.
    active: usize,
}

impl Factor {
    fn empty() -> Self {
        Self {
            center: 0.0,
            radius: 0.0,
            base: 0.0,
            power: [0.0; TERMS],
            far_count: 0,
            near: Vec::new(),
            active: 0,
        }
    }

    fn add_far(&mut self, a: f64, sign: f64) {
        self.base += sign * a.ln();
        let inv = 1.0 / a;
        let mut p = inv;
        for slot in &mut self.power {
            *slot += sign * p;
            p *= inv;
        }
        if sign > 0.0 {
            self.far_count += 1;
        } else {
            self.far_count -= 1;
        }
    }

    /// `sum_far [ln(a + e) - ln(a + d)]` from the power sums.
    fn far_shift(&self, d: f64, e: f64) -> f64 {
        let mut acc = 0.0;
        let (mut pd, mut pe) = (1.0, 1.0);
        for (m, q) in self.power.iter().enumerate() {
            pd *= d;
            pe *= e;
            let term = q * (pe - pd) / (m + 1) as f64;
            acc += if m % 2 == 0 { term } else { -term };
        }
        acc
    }
}

/// Maintains the objective (log likelihood without the first-row term) and
/// evaluates the gain of changing one coordinate in far less than a full
/// recomputation.
#[derive(Debug, Clone)]
pub struct FastEvaluator<'a> {
    matrix: &'a AttributeMatrix,
    params: ModelParams,
    structure: Structure,
    /// Rows holding each feature, ascending.
    columns: Vec<Vec<u32>>,
    r: Vec<f64>,
    /// `T_j`.
    totals: Vec<f64>,
    factors: Vec<Factor>,
    min_radius: f64,
    objective: f64,
    /// Scratch buffers reused across calls.
    walk_w: Vec<f64>,
    walk_pos: Vec<usize>,
    recenters: usize,
}

impl<'a> FastEvaluator<'a> {
    /// `step_scale` is the typical size of proposed coordinate changes; it sets
    /// the smallest expansion radius.
    pub fn new(
        matrix: &'a AttributeMatrix,
        params: &ModelParams,
        r: &[f64],
        step_scale: f64,
    ) -> Result<Self, LikelihoodError> {
        check_fitness(matrix, r)?;
        let structure = Structure::new(matrix, params);
        if let Some((row, feature)) = structure.impossible(matrix.n()) {
            return Err(LikelihoodError::Impossible { row, feature });
        }
        let mut columns = vec![Vec::new(); matrix.num_features()];
        for (i, row) in matrix.rows().iter().enumerate() {
            for &k in row {
                columns[k as usize].push(i as u32);
            }
        }
        let n = matrix.n();
        let mut eval = Self {
            matrix,
            params: *params,
            structure,
            columns,
            r: r.to_vec(),
            totals: vec![0.0; n],
            factors: vec![Factor::empty(); n.saturating_sub(1)],
            min_radius: 8.0 * step_scale.abs().max(f64::MIN_POSITIVE),
            objective: 0.0,
            walk_w: Vec::new(),
            walk_pos: Vec::new(),
            recenters: 0,
        };
        eval.recompute_totals(0);
        let all: Vec<bool> = vec![true; eval.factors.len()];
        eval.rebuild(&all);
        eval.objective = eval.exact_objective();
        Ok(eval)
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    /// The tracked objective: its exact value at construction plus the sum of
    /// accepted gains.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Number of factor re-expansions performed so far.
    pub fn recenters(&self) -> usize {
        self.recenters
    }

    /// The objective recomputed from scratch at the current `r`.
    pub fn exact_objective(&self) -> f64 {
        match LikelihoodState::new(self.matrix, &self.r, &self.params)
            .expect("validated fitness")
            .objective()
        {
            LogLik::Finite(v) => v,
            LogLik::Impossible { .. } => f64::NEG_INFINITY,
        }
    }

    /// The full log likelihood at the current `r`, including the first-row term.
    pub fn log_likelihood(&self) -> f64 {
        self.objective + first_row_term(self.matrix, &self.params, &self.structure.ln_fact)
    }

    fn recompute_totals(&mut self, from: usize) {
        let mut acc = if from == 0 { 0.0 } else { self.totals[from - 1] };
        for j in from..self.r.len() {
            acc += self.r[j];
            self.totals[j] = acc;
        }
    }

    fn s(&self, j: usize) -> f64 {
        self.params.c() + self.totals[j]
    }

    /// Re-expands the flagged factors around their current `S_j`.
    fn rebuild(&mut self, flagged: &[bool]) {
        let Some(last) = flagged.iter().rposition(|&f| f) else {
            return;
        };
        let mut w = vec![0.0; self.matrix.num_features()];
        for j in 0..=last {
            for &k in self.matrix.row(j) {
                w[k as usize] += self.r[j];
            }
            if !flagged[j] {
                continue;
            }
            self.recenters += 1;
            let s = self.s(j);
            let radius = (s / 16.0).max(self.min_radius);
            let limit = FAR_RATIO * radius;
            let mut f = Factor::empty();
            f.center = s;
            f.radius = radius;
            let next = self.matrix.row(j + 1);
            let mut pos = 0;
            for (k, &wk) in w.iter().enumerate().take(self.matrix.prefix_totals()[j]) {
                let present = pos < next.len() && next[pos] as usize == k;
                if present {
                    pos += 1;
                }
                if self.structure.saturated(j, k) {
                    continue;
                }
                f.active += 1;
                if present {
                    continue;
                }
                let a = s - wk;
                if a < limit {
                    f.near.push((k as u32, a));
                } else {
                    f.add_far(a, 1.0);
                }
            }
            self.factors[j] = f;
        }
    }

    /// `sum_{k in zero set} [ln(S_j + delta - w_jk) - ln(S_j - w_jk)]` without
    /// the expansion, for proposals outside the radius. Features in `skip`
    /// (sorted) are left out.
    fn zero_shift_exact(&self, j: usize, delta: f64, skip: &[u32]) -> f64 {
        let mut w = vec![0.0; self.matrix.num_features()];
        for m in 0..=j {
            for &k in self.matrix.row(m) {
                w[k as usize] += self.r[m];
            }
        }
        let s = self.s(j);
        let next = self.matrix.row(j + 1);
        let mut pos = 0;
        let mut acc = 0.0;
        for (k, &wk) in w.iter().enumerate().take(self.matrix.prefix_totals()[j]) {
            let present = pos < next.len() && next[pos] as usize == k;
            if present {
                pos += 1;
                continue;
            }
            if self.structure.saturated(j, k) || skip.binary_search(&(k as u32)).is_ok() {
                continue;
            }
            acc += (delta / (s - wk)).ln_1p();
        }
        acc
    }

    /// Prepares the per-feature walk over rows `>= i` for the features of row `i`.
    fn start_walk(&mut self, i: usize) {
        let row = self.matrix.row(i);
        self.walk_w.clear();
        self.walk_pos.clear();
        for &k in row {
            let col = &self.columns[k as usize];
            let upto = col.partition_point(|&m| (m as usize) <= i);
            self.walk_w.push(col[..upto].iter().map(|&m| self.r[m as usize]).sum());
            self.walk_pos.push(upto);
        }
    }

    /// Objective gains of setting `r_i` to each value in `values`. A gain of
    /// zero is returned for a value equal to `r_i`.
    pub fn gains(&mut self, i: usize, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        self.gains_into(i, values, &mut out);
        out
    }

    pub fn gains_into(&mut self, i: usize, values: &[f64], out: &mut [f64]) {
        assert!(i < self.n() && values.len() == out.len());
        out.iter_mut().for_each(|g| *g = 0.0);
        let n = self.n();
        if n < 2 || i >= n - 1 {
            return;
        }
        let deltas: Vec<f64> = values.iter().map(|&v| v - self.r[i]).collect();
        self.start_walk(i);
        let beta_m1 = self.params.beta() - 1.0;
        let ln_alpha = self.params.alpha().ln();
        let row_i = self.matrix.row(i);
        for j in i..n - 1 {
            if j > i {
                for (slot, &k) in row_i.iter().enumerate() {
                    let col = &self.columns[k as usize];
                    let p = self.walk_pos[slot];
                    if p < col.len() && col[p] as usize == j {
                        self.walk_w[slot] += self.r[j];
                        self.walk_pos[slot] += 1;
                    }
                }
            }
            let f = &self.factors[j];
            let s = self.s(j);
            let t = self.totals[j];
            let d = s - f.center;
            let count = self.matrix.new_counts()[j + 1] as f64;
            let lambda = (ln_alpha + beta_m1 * t.ln()).exp();
            for (c, &delta) in deltas.iter().enumerate() {
                if delta == 0.0 {
                    continue;
                }
                let e = d + delta;
                let exact = f.far_count > 0 && e.abs() > f.radius;
                // Absent features of row i keep S_j - w_jk fixed, so they are
                // skipped in the near set and the exact path, and their share
                // of the far series is taken back below.
                let mut g = if exact {
                    self.zero_shift_exact(j, delta, row_i)
                } else {
                    let mut z = f.far_shift(d, e);
                    let mut q = 0;
                    for &(k, a) in &f.near {
                        while q < row_i.len() && row_i[q] < k {
                            q += 1;
                        }
                        if q < row_i.len() && row_i[q] == k {
                            continue;
                        }
                        z += (delta / (a + d)).ln_1p();
                    }
                    z
                };
                for (slot, &k) in row_i.iter().enumerate() {
                    if self.structure.saturated(j, k as usize) {
                        continue;
                    }
                    let col = &self.columns[k as usize];
                    let p = self.walk_pos[slot];
                    let present = p < col.len() && col[p] as usize == j + 1;
                    let w = self.walk_w[slot];
                    if present {
                        g += (delta / w).ln_1p();
                    } else if !exact && f.near.binary_search_by_key(&k, |&(kk, _)| kk).is_err() {
                        g -= (delta / (s - w)).ln_1p();
                    }
                }
                g -= f.active as f64 * (delta / s).ln_1p();
                let lt = (delta / t).ln_1p();
                g += count * beta_m1 * lt - lambda * (beta_m1 * lt).exp_m1();
                out[c] += g;
            }
        }
    }

    /// Sets `r_i = value` and adds `gain` (as returned by [`gains`](Self::gains))
    /// to the tracked objective.
    pub fn accept(&mut self, i: usize, value: f64, gain: f64) {
        let n = self.n();
        let delta = value - self.r[i];
        if delta == 0.0 {
            return;
        }
        self.objective += gain;
        if n < 2 || i >= n - 1 {
            self.r[i] = value;
            self.recompute_totals(i);
            return;
        }
        // Walk with the old r_i so the old a_k can be located.
        self.start_walk(i);
        let row_i = self.matrix.row(i);
        let mut flagged = vec![false; self.factors.len()];
        let mut any = false;
        for j in i..n - 1 {
            if j > i {
                for (slot, &k) in row_i.iter().enumerate() {
                    let col = &self.columns[k as usize];
                    let p = self.walk_pos[slot];
                    if p < col.len() && col[p] as usize == j {
                        self.walk_w[slot] += self.r[j];
                        self.walk_pos[slot] += 1;
                    }
                }
            }
            let f = &mut self.factors[j];
            let limit = FAR_RATIO * f.radius;
            for (slot, &k) in row_i.iter().enumerate() {
                if self.structure.saturated(j, k as usize) {
                    continue;
                }
                let col = &self.columns[k as usize];
                let p = self.walk_pos[slot];
                if p < col.len() && col[p] as usize == j + 1 {
                    continue;
                }
                let old = f.center - self.walk_w[slot];
                let new = old - delta;
                match f.near.binary_search_by_key(&k, |&(kk, _)| kk) {
                    Ok(idx) => {
                        if new < limit {
                            f.near[idx].1 = new;
                        } else {
                            f.near.remove(idx);
                            f.add_far(new, 1.0);
                        }
                    }
                    Err(idx) => {
                        f.add_far(old, -1.0);
                        if new < limit {
                            f.near.insert(idx, (k, new));
                        } else {
                            f.add_far(new, 1.0);
                        }
                    }
                }
            }
        }
        self.r[i] = value;
        self.recompute_totals(i);
        for j in i..n - 1 {
            let f = &self.factors[j];
            if (self.s(j) - f.center).abs() > 0.5 * f.radius {
                flagged[j] = true;
                any = true;
            }
        }
        if any {
            self.rebuild(&flagged);
        }
    }

    /// Re-expands every factor and resets the tracked objective to its exact
    /// value. Returns the discrepancy that was removed.
    pub fn resync(&mut self) -> f64 {
        let all = vec![true; self.factors.len()];
        self.rebuild(&all);
        let exact = self.exact_objective();
        let drift = self.objective - exact;
        self.objective = exact;
        drift
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate, FitnessSpec};

    #[test]
    fn gains_match_scratch_differences() {
        let p = ModelParams::new(3.0, 0.8).unwrap();
        let g = generate(&p, &FitnessSpec::uniform(0.5, 1.5).unwrap(), 150, 21).unwrap();
        let r0 = vec![1.0; 150];
        let mut fast = FastEvaluator::new(&g.matrix, &p, &r0, 1.0).unwrap();
        let base = fast.exact_objective();
        assert!((fast.objective() - base).abs() < 1e-9 * base.abs());
        for &(i, v) in &[(0usize, 1.7), (3, 0.2), (40, 2.5), (100, 0.9), (148, 1.3), (149, 4.0)] {
            let gain = fast.gains(i, &[v])[0];
            let mut r = fast.r().to_vec();
            r[i] = v;
            let exact = objective_at(&g.matrix, &r, &p) - base;
            assert!((gain - exact).abs() < 1e-9 * base.abs(), "i={i}: {gain} vs {exact}");
        }
    }

    fn objective_at(m: &AttributeMatrix, r: &[f64], p: &ModelParams) -> f64 {
        LikelihoodState::new(m, r, p).unwrap().objective().value()
    }
}
