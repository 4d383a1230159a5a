//! Search engines behind the correlation measures.
//!
//! * [`minimize_over_bases`]: coarse angle-grid scan followed by simplex
//!   refinement from the most promising cells, for discord-type objectives.
//! * [`minimize_over_separable`]: multi-start quasi-Newton descent over
//!   convex mixtures of product states, for the relative entropy of
//!   entanglement.
//! * [`brute_force_oracle`]: exhaustive grid evaluation, used as a test oracle.
//!
//! All three are deterministic for fixed settings. Parallel work is reduced
//! by `(value, index)` so the worker count never changes a result.

mod lbfgs;
mod separable;
mod simplex;

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{QcorrError, Result};
use crate::measurement::{param_count, wrap_phase, LocalBasisSet};
use crate::state::SubsystemLayout;

pub use separable::{minimize_over_separable, SeparableAnsatz, SeparableOptimum};

/// Tuning knobs shared by the optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    pub grid_points_per_angle: usize,
    pub restarts: usize,
    /// Iteration cap for each simplex refinement.
    pub refine_max_iter: usize,
    /// Precision target in bits; negative results above `-opt_tol` are clamped to zero.
    pub opt_tol: f64,
    /// Largest tolerated disagreement between restarts, in bits.
    pub opt_gap_tol: f64,
    pub seed: u64,
    /// Cap on the coarse grid size; the per-angle resolution is lowered to fit.
    pub max_grid_evals: usize,
    /// Number of product terms in the separable ansatz; `None` means `d²`.
    pub separable_terms: Option<usize>,
    /// Iteration cap for each quasi-Newton run in the separable search.
    pub separable_max_iter: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            grid_points_per_angle: 21,
            restarts: 16,
            refine_max_iter: 500,
            opt_tol: 1e-6,
            opt_gap_tol: 1e-4,
            seed: 0,
            max_grid_evals: 200_000,
            separable_terms: None,
            separable_max_iter: 2000,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points_per_angle < 2 {
            return Err(QcorrError::ParameterOutOfRange(
                "grid_points_per_angle must be at least 2".into(),
            ));
        }
        if self.restarts < 1 {
            return Err(QcorrError::ParameterOutOfRange("restarts must be at least 1".into()));
        }
        if !(self.opt_tol >= 0.0 && self.opt_gap_tol >= 0.0) {
            return Err(QcorrError::ParameterOutOfRange("tolerances must be nonnegative".into()));
        }
        if self.separable_terms == Some(0) {
            return Err(QcorrError::ParameterOutOfRange("separable_terms must be positive".into()));
        }
        Ok(())
    }
}

/// Per-run bookkeeping reported alongside optimized values.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerDiagnostics {
    pub restarts: usize,
    pub evaluations: usize,
    /// Coarse grid resolution actually used (0 when no grid was scanned).
    pub grid_points_per_angle: usize,
    pub best: f64,
    /// Best value found in a basin other than the winning one.
    pub second_best: Option<f64>,
    pub gap: Option<f64>,
    pub basins: usize,
    pub converged: bool,
}

/// Result of a basis search.
#[derive(Debug, Clone)]
pub struct BasisOptimum {
    pub value: f64,
    pub basis: LocalBasisSet,
    /// Givens parameters of `basis`, wrapped into canonical ranges.
    pub params: Vec<f64>,
    pub diagnostics: OptimizerDiagnostics,
}

/// Coordinates of the basis parameter space: Givens polar angles live on
/// `[0, π]`, phases on the circle `[0, 2π)`.
#[derive(Debug, Clone)]
struct AngleSpace {
    periodic: Vec<bool>,
}

impl AngleSpace {
    fn new(layout: &SubsystemLayout, measured: &[usize]) -> Self {
        let count: usize = measured.iter().map(|&n| param_count(layout.dims()[n])).sum();
        AngleSpace {
            periodic: (0..count).map(|i| i % 2 == 1).collect(),
        }
    }

    fn len(&self) -> usize {
        self.periodic.len()
    }

    fn spacing(&self, points: usize) -> Vec<f64> {
        self.periodic
            .iter()
            .map(|&p| if p { TAU / points as f64 } else { PI / (points - 1) as f64 })
            .collect()
    }

    /// Grid point `index` in mixed radix, first parameter most significant.
    fn point(&self, mut index: usize, points: usize, out: &mut [f64]) {
        let spacing = self.spacing(points);
        for i in (0..self.len()).rev() {
            out[i] = (index % points) as f64 * spacing[i];
            index /= points;
        }
    }

    fn cell(&self, mut index: usize, points: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for slot in out.iter_mut().rev() {
            *slot = index % points;
            index /= points;
        }
        out
    }

    /// Grid distance between two cells, wrapping periodic coordinates.
    fn cell_distance(&self, a: &[usize], b: &[usize], points: usize) -> usize {
        a.iter()
            .zip(b)
            .zip(&self.periodic)
            .map(|((&x, &y), &p)| {
                let d = x.abs_diff(y);
                if p {
                    d.min(points - d)
                } else {
                    d
                }
            })
            .max()
            .unwrap_or(0)
    }

    /// Folds parameters into `θ ∈ [0, 2π)`, `φ ∈ [0, 2π)`.
    fn wrap(&self, params: &[f64]) -> Vec<f64> {
        params.iter().map(|&x| wrap_phase(x)).collect()
    }
}

fn grid_size(points: usize, dims: usize) -> u128 {
    (points as u128).saturating_pow(dims as u32)
}

/// Largest per-angle resolution `≤ requested` whose grid fits in `budget`.
fn fitted_resolution(requested: usize, dims: usize, budget: usize) -> usize {
    let mut points = requested;
    while points > 2 && grid_size(points, dims) > budget as u128 {
        points -= 1;
    }
    points
}

/// Minimizes `objective` over local projective bases on `measured`.
///
/// The coarse grid is scanned first; simplex refinement then starts from each
/// `seeds` entry followed by the best `settings.restarts` grid cells that are
/// not direct neighbours of an already selected cell.
pub fn minimize_over_bases<F>(
    objective: F,
    layout: &SubsystemLayout,
    measured: &[usize],
    settings: &OptimizerSettings,
    seeds: &[LocalBasisSet],
) -> Result<BasisOptimum>
where
    F: Fn(&LocalBasisSet) -> f64 + Sync,
{
    settings.validate()?;
    let measured = layout.normalize_subset(measured)?;
    if measured.is_empty() {
        return Err(QcorrError::EmptyMeasuredSet);
    }
    for seed in seeds {
        seed.check(layout, &measured)?;
    }
    let space = AngleSpace::new(layout, &measured);
    let n = space.len();
    let eval = |params: &[f64]| -> f64 {
        let basis = LocalBasisSet::from_params(layout, &measured, params).expect("parameter count matches space");
        objective(&basis)
    };

    let points = fitted_resolution(settings.grid_points_per_angle, n, settings.max_grid_evals);
    let total = grid_size(points, n) as usize;
    let grid_values: Vec<f64> = (0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, idx| {
                space.point(idx, points, buf);
                eval(buf)
            },
        )
        .collect();
    let mut evaluations = total;

    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| grid_values[a].total_cmp(&grid_values[b]).then(a.cmp(&b)));
    let mut picked: Vec<Vec<usize>> = Vec::new();
    let mut starts: Vec<Vec<f64>> = seeds.iter().map(LocalBasisSet::params).collect();
    for idx in order {
        if picked.len() >= settings.restarts {
            break;
        }
        let cell = space.cell(idx, points);
        if picked.iter().any(|p| space.cell_distance(p, &cell, points) <= 1) {
            continue;
        }
        let mut x = vec![0.0; n];
        space.point(idx, points, &mut x);
        starts.push(x);
        picked.push(cell);
    }

    let step: Vec<f64> = space.spacing(points).iter().map(|s| 0.5 * s).collect();
    let runs: Vec<simplex::SimplexResult> = starts
        .par_iter()
        .map(|x0| {
            let first = simplex::nelder_mead(&eval, x0, &step, settings.refine_max_iter);
            let fine: Vec<f64> = step.iter().map(|s| 0.05 * s).collect();
            let budget = settings.refine_max_iter.saturating_sub(first.iterations).max(1);
            let second = simplex::nelder_mead(&eval, &first.x, &fine, budget);
            simplex::SimplexResult {
                evaluations: first.evaluations + second.evaluations,
                iterations: first.iterations + second.iterations,
                converged: second.converged,
                ..if second.f <= first.f { second } else { first }
            }
        })
        .collect();
    evaluations += runs.iter().map(|r| r.evaluations).sum::<usize>();

    let best_idx = (0..runs.len())
        .min_by(|&a, &b| runs[a].f.total_cmp(&runs[b].f).then(a.cmp(&b)))
        .expect("at least one restart");
    let best = &runs[best_idx];
    let params = space.wrap(&best.x);
    let basis = LocalBasisSet::from_params(layout, &measured, &params)?;

    // Group restarts into basins by the projectors they reach.
    let bases: Vec<LocalBasisSet> = runs
        .iter()
        .map(|r| LocalBasisSet::from_params(layout, &measured, &r.x).expect("parameter count"))
        .collect();
    let mut representatives: Vec<usize> = Vec::new();
    for i in 0..runs.len() {
        if !representatives
            .iter()
            .any(|&r| bases[r].projector_distance(&bases[i]) < 1e-6)
        {
            representatives.push(i);
        }
    }
    let second_best = (0..runs.len())
        .filter(|&i| bases[best_idx].projector_distance(&bases[i]) >= 1e-6)
        .map(|i| runs[i].f)
        .min_by(f64::total_cmp);
    let confirmed = runs
        .iter()
        .enumerate()
        .any(|(i, r)| i != best_idx && (r.f - best.f).abs() <= settings.opt_gap_tol);
    let converged = best.converged || confirmed;
    let diagnostics = OptimizerDiagnostics {
        restarts: runs.len(),
        evaluations,
        grid_points_per_angle: points,
        best: best.f,
        second_best,
        gap: second_best.map(|s| s - best.f),
        basins: representatives.len(),
        converged,
    };
    if !converged {
        return Err(QcorrError::OptimizerFailure(format!(
            "basis refinement did not converge and no restart confirms the best value {:.9}",
            best.f
        )));
    }
    Ok(BasisOptimum {
        value: best.f,
        basis,
        params,
        diagnostics,
    })
}

/// Refuses grids larger than this.
pub const MAX_ORACLE_EVALS: u128 = 100_000_000;

/// Exhaustive scan of the basis grid at `resolution` points per parameter.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub value: f64,
    pub params: Vec<f64>,
    pub basis: LocalBasisSet,
    pub evaluations: usize,
}

pub fn brute_force_oracle<F>(
    objective: F,
    layout: &SubsystemLayout,
    measured: &[usize],
    resolution: usize,
) -> Result<OracleResult>
where
    F: Fn(&LocalBasisSet) -> f64 + Sync,
{
    if resolution < 2 {
        return Err(QcorrError::ParameterOutOfRange("resolution must be at least 2".into()));
    }
    let measured = layout.normalize_subset(measured)?;
    if measured.is_empty() {
        return Err(QcorrError::EmptyMeasuredSet);
    }
    let space = AngleSpace::new(layout, &measured);
    let n = space.len();
    let total = grid_size(resolution, n);
    if total > MAX_ORACLE_EVALS {
        return Err(QcorrError::GridTooLarge {
            evaluations: total,
            limit: MAX_ORACLE_EVALS,
        });
    }
    let total = total as usize;
    let (value, index) = (0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, idx| {
                space.point(idx, resolution, buf);
                let basis = LocalBasisSet::from_params(layout, &measured, buf).expect("parameter count");
                (objective(&basis), idx)
            },
        )
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| match a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) {
                std::cmp::Ordering::Greater => b,
                _ => a,
            },
        );
    let mut params = vec![0.0; n];
    space.point(index, resolution, &mut params);
    let basis = LocalBasisSet::from_params(layout, &measured, &params)?;
    Ok(OracleResult {
        value,
        params,
        basis,
        evaluations: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::LocalBasis;

    fn qubits(n: usize) -> SubsystemLayout {
        SubsystemLayout::qubits(n).unwrap()
    }

    #[test]
    fn resolution_fits_budget() {
        assert_eq!(fitted_resolution(21, 4, 200_000), 21);
        assert_eq!(fitted_resolution(21, 6, 200_000), 7);
        assert_eq!(fitted_resolution(21, 40, 10), 2);
    }

    #[test]
    fn constant_objective() {
        let opt = minimize_over_bases(|_| 0.0, &qubits(2), &[0], &OptimizerSettings::default(), &[]).unwrap();
        assert_eq!(opt.value, 0.0);
        assert!(opt.diagnostics.converged);
        let oracle = brute_force_oracle(|_| 0.0, &qubits(2), &[0], 5).unwrap();
        assert_eq!(oracle.value, 0.0);
        assert_eq!(oracle.params, vec![0.0, 0.0]);
    }

    #[test]
    fn oracle_guard() {
        let err = brute_force_oracle(|_| 0.0, &qubits(3), &[0, 1, 2], 30).unwrap_err();
        assert!(matches!(err, QcorrError::GridTooLarge { .. }));
    }

    #[test]
    fn finds_smooth_minimum_off_grid() {
        // distance of the first basis vector from a fixed Bloch direction
        let target = LocalBasis::from_params(2, &[1.234, 4.321]).unwrap().vector(0);
        let objective = |b: &LocalBasisSet| 1.0 - b.bases()[0].vector(0).dotc(&target).norm_sqr();
        let opt = minimize_over_bases(objective, &qubits(1), &[0], &OptimizerSettings::default(), &[]).unwrap();
        assert!(opt.value < 1e-12, "{}", opt.value);
    }

    #[test]
    fn seeds_are_used() {
        let target = LocalBasis::from_params(2, &[0.777, 2.5]).unwrap();
        let tv = target.vector(0);
        let objective = |b: &LocalBasisSet| 1.0 - b.bases()[0].vector(0).dotc(&tv).norm_sqr();
        let settings = OptimizerSettings {
            grid_points_per_angle: 2,
            restarts: 1,
            ..Default::default()
        };
        let seed = LocalBasisSet::new(vec![target]);
        let opt = minimize_over_bases(objective, &qubits(1), &[0], &settings, &[seed]).unwrap();
        assert!(opt.value < 1e-14);
    }

    #[test]
    fn settings_validation() {
        let bad = OptimizerSettings {
            grid_points_per_angle: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerSettings {
            restarts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
