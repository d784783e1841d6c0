//! Minimum-runtime synthesis of Ising couplings from flipped multi-mode
//! drive blocks.
//!
//! Every LP column is `s * vec(S_p Jhat^(k) S_p)` for a flip pattern `p`, a
//! mode `k` and a sign `s`.  Columns are ordered sign-major (all `+` columns,
//! then all `-` columns), then pattern, then mode.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coupling::{apply_flip, couplings_from_weights, pairs, CouplingMatrix, FlipPattern};
use crate::error::{Error, Result};
use crate::simplex::{self, Columns, SimplexOptions};
use crate::trap::{ModeData, CONVENTION};

/// Largest chain for which the arbitrary flip family (`2^(n-1)` patterns)
/// is built.
pub const ARBITRARY_FLIP_LIMIT: usize = 14;

/// Required agreement between realized and target couplings.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Couplings smaller than this count as absent when counting gates.
pub const STRUCTURAL_ZERO: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipFamily {
    /// No flip plus every single-qubit flip: the `n + 1` template blocks.
    #[default]
    TemplateSingle,
    /// No flip, every single flip and every pair of flips.
    Paired,
    /// Every sign pattern modulo the global sign.
    Arbitrary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeFamily {
    #[default]
    Multi,
    ComOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnFamily {
    pub flips: FlipFamily,
    pub modes: ModeFamily,
}

impl ColumnFamily {
    pub const fn new(flips: FlipFamily, modes: ModeFamily) -> Self {
        Self { flips, modes }
    }

    pub fn patterns(&self, n: usize) -> Result<Vec<FlipPattern>> {
        let mut out = vec![FlipPattern::none()];
        match self.flips {
            FlipFamily::TemplateSingle => out.extend((0..n).map(FlipPattern::single)),
            FlipFamily::Paired => {
                out.extend((0..n).map(FlipPattern::single));
                out.extend(pairs(n).map(|(i, j)| FlipPattern::new(vec![i, j])));
            }
            FlipFamily::Arbitrary => {
                if n > ARBITRARY_FLIP_LIMIT {
                    return Err(Error::FamilyTooLarge {
                        n,
                        limit: ARBITRARY_FLIP_LIMIT,
                    });
                }
                // subsets of the first n-1 qubits; the last qubit is never
                // flipped, which fixes the global sign
                let free = n.saturating_sub(1);
                out.extend((1u64..(1u64 << free)).map(|mask| {
                    FlipPattern::new((0..free).filter(|&q| mask >> q & 1 == 1).collect())
                }));
            }
        }
        Ok(out)
    }

    pub fn mode_indices(&self, n: usize) -> Vec<usize> {
        match self.modes {
            ModeFamily::Multi => (0..n).collect(),
            ModeFamily::ComOnly => vec![0],
        }
    }
}

/// Lazily evaluated LP columns restricted to a subset of coupling rows.
pub struct FlipColumns<'a> {
    n: usize,
    rows: Vec<(usize, usize)>,
    patterns: Vec<FlipPattern>,
    modes: Vec<usize>,
    u: &'a DMatrix<f64>,
}

impl<'a> FlipColumns<'a> {
    pub fn new(modes: &'a ModeData, family: ColumnFamily, rows: Vec<(usize, usize)>) -> Result<Self> {
        let n = modes.n();
        Ok(Self {
            n,
            rows,
            patterns: family.patterns(n)?,
            modes: family.mode_indices(n),
            u: &modes.scaled_vectors,
        })
    }

    pub fn patterns(&self) -> &[FlipPattern] {
        &self.patterns
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    fn half(&self) -> usize {
        self.patterns.len() * self.modes.len()
    }

    /// `(sign, pattern index, mode index)` of column `j`.
    pub fn decode(&self, j: usize) -> (f64, usize, usize) {
        let half = self.half();
        let sign = if j < half { 1.0 } else { -1.0 };
        let r = j % half;
        (sign, r / self.modes.len(), r % self.modes.len())
    }
}

impl Columns for FlipColumns<'_> {
    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn cols(&self) -> usize {
        2 * self.half()
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        let (sign, p, m) = self.decode(j);
        let k = self.modes[m];
        let pat = &self.patterns[p];
        for (o, &(a, b)) in out.iter_mut().zip(&self.rows) {
            let flip = if pat.contains(a) != pat.contains(b) { -1.0 } else { 1.0 };
            *o = sign * flip * self.u[(a, k)] * self.u[(b, k)];
        }
    }

    // With Y the symmetric zero-diagonal matrix holding the duals and
    // G = Y U, the unflipped value is u.G/2, and a flip set F changes it by
    // -2 sum_{q in F} u_q G_q + 4 sum_{q<r in F} u_q u_r Y_qr.
    fn dot_columns(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut ymat = DMatrix::<f64>::zeros(n, n);
        for (&v, &(a, b)) in y.iter().zip(&self.rows) {
            ymat[(a, b)] = v;
            ymat[(b, a)] = v;
        }
        let kk = self.modes.len();
        let mut usel = DMatrix::<f64>::zeros(n, kk);
        for (m, &k) in self.modes.iter().enumerate() {
            usel.set_column(m, &self.u.column(k));
        }
        let g = &ymat * &usel;
        let base: Vec<f64> = (0..kk).map(|m| 0.5 * usel.column(m).dot(&g.column(m))).collect();

        let half = self.half();
        for (p, pat) in self.patterns.iter().enumerate() {
            let qs = pat.qubits();
            for m in 0..kk {
                let mut v = base[m];
                for (idx, &q) in qs.iter().enumerate() {
                    let uq = usel[(q, m)];
                    v -= 2.0 * uq * g[(q, m)];
                    for &r in &qs[idx + 1..] {
                        v += 4.0 * uq * usel[(r, m)] * ymat[(q, r)];
                    }
                }
                out[p * kk + m] = v;
                out[half + p * kk + m] = -v;
            }
        }
    }
}

/// Dense LP matrix over every coupling pair, in the documented column order.
pub fn build_columns(modes: &ModeData, family: ColumnFamily) -> Result<DMatrix<f64>> {
    let cols = FlipColumns::new(modes, family, pairs(modes.n()).collect())?;
    let mut a = DMatrix::zeros(cols.rows(), cols.cols());
    let mut buf = vec![0.0; cols.rows()];
    for j in 0..cols.cols() {
        cols.column_into(j, &mut buf);
        a.column_mut(j).copy_from_slice(&buf);
    }
    Ok(a)
}

pub use simplex::lp_solve;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveBlock {
    pub flips: FlipPattern,
    pub duration: f64,
    /// One weight per mode with `sum |w| = 1`.
    pub mode_weights: Vec<f64>,
}

impl DriveBlock {
    /// `t * c`, the duration-absorbed weights.
    pub fn absorbed_weights(&self) -> Vec<f64> {
        self.mode_weights.iter().map(|w| w * self.duration).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSchedule {
    pub n: usize,
    pub convention: String,
    pub anisotropy: f64,
    pub blocks: Vec<DriveBlock>,
    pub total_runtime: f64,
    pub residual: f64,
}

impl DriveSchedule {
    pub fn empty(modes: &ModeData) -> Self {
        Self {
            n: modes.n(),
            convention: CONVENTION.to_string(),
            anisotropy: modes.anisotropy,
            blocks: Vec::new(),
            total_runtime: 0.0,
            residual: 0.0,
        }
    }

    /// `sum_n sum_k |t_n c_k^n|`.
    pub fn absorbed_weight_norm(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.mode_weights.iter().map(move |w| (w * b.duration).abs()))
            .sum()
    }

    /// Realizes `-J` with the same runtime.
    pub fn negated(&self) -> Self {
        let mut s = self.clone();
        for b in &mut s.blocks {
            b.mode_weights.iter_mut().for_each(|w| *w = -*w);
        }
        s
    }

    /// Rebuilds a schedule from duration-absorbed weights, dropping empty
    /// blocks and renormalizing the rest.
    pub fn from_absorbed(modes: &ModeData, blocks: impl IntoIterator<Item = (FlipPattern, Vec<f64>)>) -> Self {
        let mut s = Self::empty(modes);
        for (flips, absorbed) in blocks {
            let t: f64 = absorbed.iter().map(|c| c.abs()).sum();
            if t > 0.0 {
                s.blocks.push(DriveBlock {
                    flips,
                    duration: t,
                    mode_weights: absorbed.iter().map(|c| c / t).collect(),
                });
            }
        }
        s.total_runtime = s.blocks.iter().map(|b| b.duration).sum();
        s
    }

    pub fn check(&self, modes: &ModeData) -> Result<()> {
        if self.n != modes.n() {
            return Err(Error::DimensionMismatch {
                expected: modes.n(),
                actual: self.n,
            });
        }
        for b in &self.blocks {
            b.flips.check(self.n)?;
            if b.mode_weights.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    actual: b.mode_weights.len(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `sum_n t_n S_n (sum_k c_k^n Jhat^(k)) S_n`.
pub fn realized_couplings(schedule: &DriveSchedule, modes: &ModeData) -> Result<CouplingMatrix> {
    schedule.check(modes)?;
    let mut total = CouplingMatrix::zeros(modes.n());
    for b in &schedule.blocks {
        let j = couplings_from_weights(modes, &b.absorbed_weights())?;
        total += &apply_flip(&j, &b.flips)?;
    }
    Ok(total)
}

pub fn synthesize(target: &CouplingMatrix, modes: &ModeData, family: ColumnFamily) -> Result<DriveSchedule> {
    let mask = vec![true; crate::coupling::pair_count(target.n())];
    synthesize_partial(target, &mask, modes, family)
}

/// Like [`synthesize`], but only pairs with `mask[idx]` set (in vectorized
/// order) are constrained; the rest may take any value.
pub fn synthesize_partial(
    target: &CouplingMatrix,
    mask: &[bool],
    modes: &ModeData,
    family: ColumnFamily,
) -> Result<DriveSchedule> {
    let n = modes.n();
    if target.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: target.n(),
        });
    }
    if mask.len() != crate::coupling::pair_count(n) {
        return Err(Error::DimensionMismatch {
            expected: crate::coupling::pair_count(n),
            actual: mask.len(),
        });
    }
    let rows: Vec<(usize, usize)> = pairs(n).zip(mask).filter(|(_, &m)| m).map(|(p, _)| p).collect();
    let b: Vec<f64> = rows.iter().map(|&(i, j)| target.get(i, j)).collect();
    let columns = FlipColumns::new(modes, family, rows.clone())?;
    let costs = vec![1.0; columns.cols()];
    let sol = simplex::solve(&columns, &b, &costs, &SimplexOptions::default())?;
    log::debug!(
        "n={n} rows={} cols={} pivots={} objective={}",
        columns.rows(),
        columns.cols(),
        sol.iterations,
        sol.objective
    );

    let kk = columns.modes().len();
    let half = columns.patterns().len() * kk;
    let blocks = columns.patterns().iter().enumerate().map(|(p, pat)| {
        let mut absorbed = vec![0.0; n];
        for (m, &k) in columns.modes().iter().enumerate() {
            absorbed[k] = sol.x[p * kk + m] - sol.x[half + p * kk + m];
        }
        (pat.clone(), absorbed)
    });
    let mut schedule = DriveSchedule::from_absorbed(modes, blocks);

    let realized = realized_couplings(&schedule, modes)?;
    schedule.residual = rows
        .iter()
        .map(|&(i, j)| (realized.get(i, j) - target.get(i, j)).abs())
        .fold(0.0, f64::max);
    let tolerance = RESIDUAL_TOLERANCE * target.max_abs().max(1.0);
    if schedule.residual > tolerance {
        return Err(Error::ResidualTooLarge {
            residual: schedule.residual,
            tolerance,
        });
    }
    Ok(schedule)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineModel {
    /// One unit of time per nonzero coupling.
    #[default]
    FixedTau,
    /// Time proportional to the coupling angle.
    AngleProportional,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectCost {
    pub runtime: f64,
    pub gate_count: usize,
}

/// Sequential two-qubit implementation of `target`.
pub fn direct_baseline(target: &CouplingMatrix, model: BaselineModel) -> DirectCost {
    let gate_count = target.nonzero_pairs(STRUCTURAL_ZERO);
    let runtime = match model {
        BaselineModel::FixedTau => gate_count as f64,
        BaselineModel::AngleProportional => target.total_angle(),
    };
    DirectCost { runtime, gate_count }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{make_target, TargetKind};
    use crate::trap::{transverse_modes, TrapConfig};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn modes(n: usize) -> ModeData {
        transverse_modes(&TrapConfig::new(n).unwrap()).unwrap()
    }

    const SINGLE_MULTI: ColumnFamily = ColumnFamily::new(FlipFamily::TemplateSingle, ModeFamily::Multi);

    fn rank(a: &DMatrix<f64>) -> usize {
        let sv = a.clone().svd(false, false).singular_values;
        let tol = sv.max() * 1e-10;
        sv.iter().filter(|&&s| s > tol).count()
    }

    #[test]
    fn two_ion_column_shape() {
        let a = build_columns(&modes(2), SINGLE_MULTI).unwrap();
        // 3 patterns x 2 modes x 2 signs
        assert_eq!((a.nrows(), a.ncols()), (1, 12));
        let expected = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0];
        for (c, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(a[(0, c)], e, epsilon = 1e-12);
            assert_abs_diff_eq!(a[(0, c + 6)], -e, epsilon = 1e-12);
        }
    }

    #[test]
    fn template_columns_have_full_rank() {
        for n in [2, 3, 4, 5, 8, 12] {
            let a = build_columns(&modes(n), SINGLE_MULTI).unwrap();
            assert_eq!(rank(&a), n * (n - 1) / 2, "n={n}");
        }
    }

    #[test]
    fn com_only_paired_columns_at_three_ions() {
        let a = build_columns(&modes(3), ColumnFamily::new(FlipFamily::Paired, ModeFamily::ComOnly)).unwrap();
        // none, {0}, {1}, {2}, {0,1}, {0,2}, {1,2}
        assert_eq!(a.ncols(), 14);
        let expected = [
            [1.0, 1.0, 1.0],
            [-1.0, -1.0, 1.0],
            [-1.0, 1.0, -1.0],
            [1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ];
        for (c, col) in expected.iter().enumerate() {
            for r in 0..3 {
                assert_abs_diff_eq!(a[(r, c)], col[r], epsilon = 1e-12);
                assert_abs_diff_eq!(a[(r, c + 7)], -col[r], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn arbitrary_family_is_guarded() {
        let fam = ColumnFamily::new(FlipFamily::Arbitrary, ModeFamily::ComOnly);
        assert_eq!(fam.patterns(4).unwrap().len(), 8);
        assert!(matches!(fam.patterns(15), Err(Error::FamilyTooLarge { .. })));
    }

    #[test]
    fn structured_pricing_matches_dense_product() {
        for family in [
            SINGLE_MULTI,
            ColumnFamily::new(FlipFamily::Paired, ModeFamily::Multi),
            ColumnFamily::new(FlipFamily::Arbitrary, ModeFamily::ComOnly),
        ] {
            let m = modes(6);
            let a = build_columns(&m, family).unwrap();
            let cols = FlipColumns::new(&m, family, pairs(6).collect()).unwrap();
            let y: Vec<f64> = (0..15).map(|i| (i as f64 * 0.37).sin()).collect();
            let mut fast = vec![0.0; a.ncols()];
            cols.dot_columns(&y, &mut fast);
            let dense = a.transpose() * nalgebra::DVector::from_vec(y);
            for (f, d) in fast.iter().zip(dense.iter()) {
                assert_abs_diff_eq!(f, d, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn all_to_all_needs_unit_runtime() {
        for n in [2, 3, 5, 10, 20] {
            let target = make_target(&TargetKind::AllToAll, n, None).unwrap();
            let s = synthesize(&target, &modes(n), SINGLE_MULTI).unwrap();
            assert!(s.total_runtime <= 1.0 + 1e-9, "n={n}: {}", s.total_runtime);
            assert!(s.residual <= 1e-8);
        }
    }

    #[test]
    fn zero_target_gives_empty_schedule() {
        let s = synthesize(&CouplingMatrix::zeros(5), &modes(5), SINGLE_MULTI).unwrap();
        assert!(s.blocks.is_empty());
        assert_eq!(s.total_runtime, 0.0);
    }

    #[test]
    fn empty_mask_costs_nothing_and_full_mask_is_synthesize() {
        let m = modes(5);
        let target = make_target(&TargetKind::UniformRandom, 5, Some(3)).unwrap();
        let free = synthesize_partial(&target, &[false; 10], &m, SINGLE_MULTI).unwrap();
        assert_eq!(free.total_runtime, 0.0);
        let full = synthesize_partial(&target, &[true; 10], &m, SINGLE_MULTI).unwrap();
        assert_eq!(full, synthesize(&target, &m, SINGLE_MULTI).unwrap());
    }

    #[test]
    fn single_com_block_realizes_ones() {
        let m = modes(4);
        let mut w = vec![0.0; 4];
        w[0] = 1.0;
        let s = DriveSchedule::from_absorbed(&m, [(FlipPattern::none(), w)]);
        let j = realized_couplings(&s, &m).unwrap();
        assert_eq!(j, make_target(&TargetKind::AllToAll, 4, None).unwrap());
        assert_eq!(realized_couplings(&DriveSchedule::empty(&m), &m).unwrap(), CouplingMatrix::zeros(4));
    }

    #[test]
    fn direct_baseline_counts() {
        let all = make_target(&TargetKind::AllToAll, 40, None).unwrap();
        let c = direct_baseline(&all, BaselineModel::FixedTau);
        assert_eq!((c.gate_count, c.runtime), (780, 780.0));
        let nn = make_target(&TargetKind::NearestNeighbor, 10, None).unwrap();
        assert_eq!(direct_baseline(&nn, BaselineModel::FixedTau).gate_count, 9);
        let zero = direct_baseline(&CouplingMatrix::zeros(6), BaselineModel::AngleProportional);
        assert_eq!((zero.gate_count, zero.runtime), (0, 0.0));
        let half = all.scaled(-0.5);
        assert_abs_diff_eq!(direct_baseline(&half, BaselineModel::AngleProportional).runtime, 390.0);
    }

    #[test]
    fn json_round_trip() {
        let m = modes(4);
        let target = make_target(&TargetKind::SkGlass, 4, Some(1)).unwrap();
        let s = synthesize(&target, &m, SINGLE_MULTI).unwrap();
        let back = DriveSchedule::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(v["convention"], "com-unity-v1");
        assert!(v["blocks"][0]["mode_weights"].is_array());
    }

    fn random_case() -> impl Strategy<Value = (usize, u64)> {
        (3usize..=8, any::<u64>())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn synthesized_schedules_recompose((n, seed) in random_case()) {
            let m = modes(n);
            let target = make_target(&TargetKind::UniformRandom, n, Some(seed)).unwrap();
            let s = synthesize(&target, &m, SINGLE_MULTI).unwrap();
            let back = realized_couplings(&s, &m).unwrap();
            prop_assert!(back.max_abs_diff(&target) <= 1e-8);
            prop_assert!((s.total_runtime - s.absorbed_weight_norm()).abs() <= 1e-10);
            for b in &s.blocks {
                let norm: f64 = b.mode_weights.iter().map(|w| w.abs()).sum();
                prop_assert!((norm - 1.0).abs() <= 1e-12);
                prop_assert!(b.duration > 0.0);
            }
        }

        #[test]
        fn runtime_is_homogeneous((n, seed) in random_case()) {
            let m = modes(n);
            let target = make_target(&TargetKind::SkGlass, n, Some(seed)).unwrap();
            let one = synthesize(&target, &m, SINGLE_MULTI).unwrap().total_runtime;
            let two = synthesize(&target.scaled(2.0), &m, SINGLE_MULTI).unwrap().total_runtime;
            prop_assert!((two - 2.0 * one).abs() <= 1e-10 * one.max(1.0));
        }

        #[test]
        fn larger_families_never_lose((n, seed) in (3usize..=6, any::<u64>())) {
            let m = modes(n);
            let target = make_target(&TargetKind::UniformRandom, n, Some(seed)).unwrap();
            let run = |f, k| synthesize(&target, &m, ColumnFamily::new(f, k)).unwrap().total_runtime;
            let single = run(FlipFamily::TemplateSingle, ModeFamily::Multi);
            let paired = run(FlipFamily::Paired, ModeFamily::Multi);
            let arb = run(FlipFamily::Arbitrary, ModeFamily::Multi);
            let paired_com = run(FlipFamily::Paired, ModeFamily::ComOnly);
            let arb_com = run(FlipFamily::Arbitrary, ModeFamily::ComOnly);
            prop_assert!(paired <= single + 1e-9);
            prop_assert!(arb <= paired + 1e-9);
            prop_assert!(paired <= paired_com + 1e-9);
            prop_assert!(arb <= arb_com + 1e-9);
            prop_assert!(arb_com <= paired_com + 1e-9);
        }

        #[test]
        fn relabeling_permutes_realized_couplings((n, seed) in (3usize..=7, any::<u64>())) {
            let m = modes(n);
            let target = make_target(&TargetKind::UniformRandom, n, Some(seed)).unwrap();
            let perm: Vec<usize> = (0..n).rev().collect();
            let moved = target.permuted(&perm).unwrap();
            let s = synthesize(&moved, &m, SINGLE_MULTI).unwrap();
            let back = realized_couplings(&s, &m).unwrap();
            prop_assert!(back.max_abs_diff(&moved) <= 1e-8);
            let s0 = synthesize(&target, &m, SINGLE_MULTI).unwrap();
            let back0 = realized_couplings(&s0, &m).unwrap().permuted(&perm).unwrap();
            prop_assert!(back0.max_abs_diff(&moved) <= 1e-8);
        }
    }
}
