//! Transition-matrix reconstruction from intensities and two-photon visibilities.
//!
//! External input and output phases are invisible to both `|M_ik|` and
//! `V_ijkl`, so the search runs over gauge-fixed coordinates: the first row
//! and first column are real and non-negative and only the `(N−1)(M−1)`
//! interior phases are free. Each start runs a quasi-Newton descent on the
//! mean squared visibility residual with central-difference gradients and a
//! backtracking line search; starts are independent and reduced by
//! `(objective, start index)`, so results do not depend on thread count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{coincidence_pair, visibility_matrix_with_threshold, ModePair, VisibilityMatrix};
use crate::matrix::{self, TransitionMatrix};

/// Central-difference step for numerical gradients.
const GRADIENT_STEP: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
/// Starts below this objective count as exact fits when logging alternatives.
pub const ZERO_OBJECTIVE: f64 = 1e-6;
/// Gauge tolerance separating alternative solutions.
pub const ALTERNATIVE_GAUGE_TOL: f64 = 1e-3;
/// Relative uncertainty assumed for magnitudes without an uncertainty grid.
pub const DEFAULT_RELATIVE_UNCERTAINTY: f64 = 0.05;
const UNCERTAINTY_FLOOR: f64 = 1e-6;

/// Measured `|M_ik|` with optional per-entry uncertainties.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeGrid {
    n_inputs: usize,
    n_outputs: usize,
    values: Vec<f64>,
    uncertainty: Option<Vec<f64>>,
}

impl MagnitudeGrid {
    pub fn new(rows: Vec<Vec<f64>>, uncertainty: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let (n_inputs, n_outputs, values) = flatten_grid(rows, "magnitude")?;
        let uncertainty = match uncertainty {
            Some(u) => {
                let (ni, no, u) = flatten_grid(u, "uncertainty")?;
                if (ni, no) != (n_inputs, n_outputs) {
                    return Err(Error::Shape(format!(
                        "uncertainty grid is {ni}x{no}, magnitudes are {n_inputs}x{n_outputs}"
                    )));
                }
                if u.iter().any(|&v| v <= 0.0) {
                    return Err(Error::Validation("uncertainties must be positive".into()));
                }
                Some(u)
            }
            None => None,
        };
        Ok(Self {
            n_inputs,
            n_outputs,
            values,
            uncertainty,
        })
    }

    /// Magnitudes of an existing matrix, without uncertainties.
    pub fn from_matrix(m: &TransitionMatrix) -> Self {
        Self {
            n_inputs: m.n_inputs(),
            n_outputs: m.n_outputs(),
            values: m.magnitudes(),
            uncertainty: None,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_inputs, self.n_outputs)
    }

    pub fn at(&self, input: usize, output: usize) -> f64 {
        self.values[input * self.n_outputs + output]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn uncertainty(&self) -> Option<&[f64]> {
        self.uncertainty.as_deref()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n_outputs).map(<[f64]>::to_vec).collect()
    }

    pub fn uncertainty_rows(&self) -> Option<Vec<Vec<f64>>> {
        self.uncertainty
            .as_ref()
            .map(|u| u.chunks(self.n_outputs).map(<[f64]>::to_vec).collect())
    }

    /// Stated uncertainties, or 5% of each magnitude (floored at 1e-6).
    fn effective_uncertainty(&self) -> Vec<f64> {
        match &self.uncertainty {
            Some(u) => u.clone(),
            None => self
                .values
                .iter()
                .map(|v| (DEFAULT_RELATIVE_UNCERTAINTY * v).max(UNCERTAINTY_FLOOR))
                .collect(),
        }
    }
}

fn flatten_grid(rows: Vec<Vec<f64>>, what: &str) -> Result<(usize, usize, Vec<f64>)> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(Error::Shape(format!("{what} grid is empty")));
    }
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Shape(format!("{what} grid is ragged")));
    }
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Validation(format!(
            "{what} values must be finite and non-negative"
        )));
    }
    Ok((n, m, values))
}

/// Entry `(i, k) = |M_ik| e^{iφ_ik}` with `φ = 0` on the first row and
/// column; `phases` lists the interior phases row-major.
pub fn parameterize(magnitudes: &MagnitudeGrid, phases: &[f64]) -> Result<TransitionMatrix> {
    let (n, m) = magnitudes.dims();
    let free = (n - 1) * (m - 1);
    if phases.len() != free {
        return Err(Error::Shape(format!(
            "{} phases for a {n}x{m} grid, expected {free}",
            phases.len()
        )));
    }
    if phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::Validation("phases must be finite".into()));
    }
    TransitionMatrix::from_row_major(n, m, assemble(n, m, &magnitudes.values, phases))
}

fn assemble(n: usize, m: usize, mags: &[f64], phases: &[f64]) -> Vec<Complex64> {
    let mut entries = Vec::with_capacity(n * m);
    for i in 0..n {
        for k in 0..m {
            let mag = mags[i * m + k].abs();
            if i == 0 || k == 0 {
                entries.push(Complex64::new(mag, 0.0));
            } else {
                entries.push(Complex64::from_polar(mag, phases[(i - 1) * (m - 1) + (k - 1)]));
            }
        }
    }
    entries
}

/// RMS visibility distance and the number of excluded cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub rms: f64,
    pub included: usize,
    pub excluded: usize,
}

fn check_measured_dims(m: &TransitionMatrix, measured: &VisibilityMatrix) -> Result<()> {
    if measured.modes() != m.dims() {
        let (a, b) = measured.modes();
        return Err(Error::Shape(format!(
            "visibilities describe a {a}x{b} device, matrix is {}x{}",
            m.n_inputs(),
            m.n_outputs()
        )));
    }
    Ok(())
}

/// Residuals `V^r − V^m` over cells where the measurement is defined and
/// the candidate's classical probability exceeds `c_min`.
fn residual_grid(m: &TransitionMatrix, measured: &VisibilityMatrix, c_min: f64) -> Vec<Vec<Option<f64>>> {
    measured
        .input_pairs()
        .iter()
        .zip(measured.values())
        .map(|(ip, row)| {
            let (i, j) = (ip.first() - 1, ip.second() - 1);
            measured
                .output_pairs()
                .iter()
                .zip(row)
                .map(|(op, vm)| {
                    let vm = (*vm)?;
                    let (q, c) = coincidence_pair(m, i, j, op.first() - 1, op.second() - 1);
                    (c > c_min).then(|| (c - q) / c - vm)
                })
                .collect()
        })
        .collect()
}

fn rms_of(residuals: &[Vec<Option<f64>>]) -> Option<(f64, usize, usize)> {
    let (mut sum, mut included, mut excluded) = (0.0, 0usize, 0usize);
    for r in residuals.iter().flatten() {
        match r {
            Some(v) => {
                sum += v * v;
                included += 1;
            }
            None => excluded += 1,
        }
    }
    (included > 0).then(|| ((sum / included as f64).sqrt(), included, excluded))
}

/// RMS distance between the candidate's visibilities and `measured`.
pub fn objective(candidate: &TransitionMatrix, measured: &VisibilityMatrix, c_min: f64) -> Result<ObjectiveValue> {
    check_measured_dims(candidate, measured)?;
    let residuals = residual_grid(candidate, measured, c_min);
    let (rms, included, excluded) = rms_of(&residuals)
        .ok_or_else(|| Error::DegenerateData("no visibility cell is both measured and defined".into()))?;
    Ok(ObjectiveValue {
        rms,
        included,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructionMode {
    /// Only interior phases are free.
    FixedMagnitudes,
    /// Magnitudes are refined too, with a quadratic penalty toward the measurement.
    JointRefinement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOptions {
    pub mode: ReconstructionMode,
    pub magnitude_penalty_weight: f64,
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub c_min: f64,
    /// Worker threads; `None` uses the global pool. Does not affect results.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            mode: ReconstructionMode::FixedMagnitudes,
            magnitude_penalty_weight: 1.0,
            starts: 20,
            seed: 0,
            max_iterations: 10_000,
            convergence_tol: 1e-12,
            c_min: crate::interference::DEFAULT_C_MIN,
            threads: None,
        }
    }
}

impl ReconstructionOptions {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::Validation("starts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Validation("max_iterations must be at least 1".into()));
        }
        if [self.convergence_tol, self.c_min]
            .iter()
            .any(|t| t.is_nan() || *t <= 0.0)
        {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        if !self.magnitude_penalty_weight.is_finite() || self.magnitude_penalty_weight < 0.0 {
            return Err(Error::Validation(
                "penalty weight must be finite and non-negative".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::Validation("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one local descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: usize,
    /// Final RMS visibility distance, `None` when the start was abandoned.
    pub objective: Option<f64>,
    pub iterations: usize,
    /// Descent objective after each accepted step, starting with the initial
    /// point: the RMS distance, or with the magnitude penalty folded in.
    #[serde(skip)]
    pub history: Vec<f64>,
    #[serde(skip)]
    pub(crate) loss: f64,
    #[serde(skip)]
    pub(crate) matrix: Option<TransitionMatrix>,
}

/// A zero-objective solution not gauge equivalent to the reported one.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeSolution {
    pub start: usize,
    pub objective: f64,
    pub matrix: TransitionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    /// Recovered matrix in canonical gauge.
    pub matrix: TransitionMatrix,
    /// RMS of `residuals` over included cells.
    pub objective: f64,
    /// `V^r − V^m`, `None` where excluded.
    pub residuals: Vec<Vec<Option<f64>>>,
    pub input_pairs: Vec<ModePair>,
    pub output_pairs: Vec<ModePair>,
    pub per_start_objectives: Vec<Option<f64>>,
    pub starts: Vec<StartOutcome>,
    pub best_start: usize,
    pub iterations_used: usize,
    pub excluded_cells: Vec<(ModePair, ModePair)>,
    /// Fewer included cells than free parameters.
    pub underdetermined: bool,
    pub alternatives: Vec<AlternativeSolution>,
    pub options: ReconstructionOptions,
}

struct Problem<'a> {
    measured: &'a VisibilityMatrix,
    magnitudes: &'a MagnitudeGrid,
    uncertainty: Vec<f64>,
    options: &'a ReconstructionOptions,
    n: usize,
    m: usize,
}

impl Problem<'_> {
    fn n_phases(&self) -> usize {
        (self.n - 1) * (self.m - 1)
    }

    fn n_params(&self) -> usize {
        match self.options.mode {
            ReconstructionMode::FixedMagnitudes => self.n_phases(),
            ReconstructionMode::JointRefinement => self.n_phases() + self.n * self.m,
        }
    }

    fn matrix(&self, params: &[f64]) -> TransitionMatrix {
        let (phases, mags) = params.split_at(self.n_phases());
        let mags = match self.options.mode {
            ReconstructionMode::FixedMagnitudes => &self.magnitudes.values[..],
            ReconstructionMode::JointRefinement => mags,
        };
        TransitionMatrix::from_row_major(self.n, self.m, assemble(self.n, self.m, mags, phases))
            .expect("finite parameters give a finite matrix")
    }

    /// Mean squared residual plus the magnitude penalty; `None` if non-finite
    /// or no cell is included.
    fn loss(&self, params: &[f64]) -> Option<f64> {
        if params.iter().any(|p| !p.is_finite()) {
            return None;
        }
        let candidate = self.matrix(params);
        let (rms, _, _) = rms_of(&residual_grid(&candidate, self.measured, self.options.c_min))?;
        let mut loss = rms * rms;
        if self.options.mode == ReconstructionMode::JointRefinement {
            let mags = &params[self.n_phases()..];
            let penalty: f64 = mags
                .iter()
                .zip(&self.magnitudes.values)
                .zip(&self.uncertainty)
                .map(|((m, meas), u)| ((m.abs() - meas) / u).powi(2))
                .sum();
            loss += self.options.magnitude_penalty_weight * penalty;
        }
        loss.is_finite().then_some(loss)
    }

    fn gradient(&self, params: &[f64]) -> Option<Vec<f64>> {
        let mut probe = params.to_vec();
        let mut grad = Vec::with_capacity(params.len());
        for idx in 0..params.len() {
            let orig = probe[idx];
            probe[idx] = orig + GRADIENT_STEP;
            let up = self.loss(&probe)?;
            probe[idx] = orig - GRADIENT_STEP;
            let down = self.loss(&probe)?;
            probe[idx] = orig;
            grad.push((up - down) / (2.0 * GRADIENT_STEP));
        }
        Some(grad)
    }

    fn initial_params(&self, phases: Vec<f64>) -> Vec<f64> {
        let mut params = phases;
        if self.options.mode == ReconstructionMode::JointRefinement {
            params.extend_from_slice(&self.magnitudes.values);
        }
        params
    }

    fn descend(&self, start: usize, mut x: Vec<f64>) -> StartOutcome {
        let abandoned = |iterations, history| StartOutcome {
            start,
            objective: None,
            iterations,
            history,
            loss: f64::INFINITY,
            matrix: None,
        };
        let Some(mut f) = self.loss(&x) else {
            return abandoned(0, Vec::new());
        };
        let Some(mut g) = self.gradient(&x) else {
            return abandoned(0, vec![f.sqrt()]);
        };
        let dim = x.len();
        let mut h = identity(dim);
        let mut history = vec![f.sqrt()];
        let mut iterations = 0;
        while iterations < self.options.max_iterations && f > 0.0 {
            let gnorm = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if gnorm == 0.0 {
                break;
            }
            iterations += 1;
            let mut d = mat_vec(&h, &g).into_iter().map(|v| -v).collect::<Vec<_>>();
            let mut slope = dot(&g, &d);
            if slope.is_nan() || slope >= 0.0 {
                h = identity(dim);
                d = g.iter().map(|v| -v).collect();
                slope = dot(&g, &d);
            }
            let dmax = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let mut t = if dmax > 1.0 { 1.0 / dmax } else { 1.0 };
            let accepted = loop {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                if let Some(ft) = self.loss(&trial) {
                    if ft <= f + ARMIJO * t * slope && ft < f {
                        break Some((trial, ft));
                    }
                }
                t *= 0.5;
                if t < MIN_STEP {
                    break None;
                }
            };
            let Some((x_new, f_new)) = accepted else {
                break;
            };
            let Some(g_new) = self.gradient(&x_new) else {
                return abandoned(iterations, history);
            };
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            bfgs_update(&mut h, &s, &y);
            let improvement = f.sqrt() - f_new.sqrt();
            x = x_new;
            f = f_new;
            g = g_new;
            history.push(f.sqrt());
            if improvement < self.options.convergence_tol {
                break;
            }
        }
        let mut candidate = self.matrix(&x);
        matrix::resolve_conjugation(&mut candidate);
        let objective = rms_of(&residual_grid(&candidate, self.measured, self.options.c_min)).map(|r| r.0);
        StartOutcome {
            start,
            objective,
            iterations,
            history,
            loss: f,
            matrix: Some(candidate),
        }
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Inverse-Hessian BFGS update, skipped when the curvature condition fails.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64]) {
    let sy = dot(s, y);
    if sy.is_nan() || sy <= 1e-300 {
        return;
    }
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Deterministic starting phases: zeros first, then uniform in (−π, π].
fn starting_phases(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![0.0; dim]];
    for _ in 1..count {
        out.push((0..dim).map(|_| PI - 2.0 * PI * rng.random::<f64>()).collect());
    }
    out
}

/// Multi-start search for a matrix whose visibilities match `measured`.
pub fn reconstruct(
    measured: &VisibilityMatrix,
    magnitudes: &MagnitudeGrid,
    options: &ReconstructionOptions,
) -> Result<ReconstructionResult> {
    options.validate()?;
    let (n, m) = magnitudes.dims();
    if measured.modes() != (n, m) {
        let (a, b) = measured.modes();
        return Err(Error::Shape(format!(
            "visibilities describe a {a}x{b} device, magnitudes are {n}x{m}"
        )));
    }
    if measured.defined_count() == 0 {
        return Err(Error::DegenerateData("no defined visibility cells".into()));
    }
    let problem = Problem {
        measured,
        magnitudes,
        uncertainty: magnitudes.effective_uncertainty(),
        options,
        n,
        m,
    };
    // the all-zero start must see at least one included cell
    if problem
        .loss(&problem.initial_params(vec![0.0; problem.n_phases()]))
        .is_none()
    {
        return Err(Error::DegenerateData(
            "no visibility cell is both measured and defined for the starting matrix".into(),
        ));
    }
    let inits = starting_phases(options.starts, problem.n_phases(), options.seed);
    let run = || -> Vec<StartOutcome> {
        inits
            .par_iter()
            .enumerate()
            .map(|(idx, phases)| problem.descend(idx, problem.initial_params(phases.clone())))
            .collect()
    };
    let outcomes = match options.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let best = outcomes
        .iter()
        .filter(|o| o.objective.is_some())
        .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.start.cmp(&b.start)))
        .ok_or_else(|| Error::DegenerateData("every start was abandoned".into()))?;
    let best_matrix = best.matrix.clone().expect("finished starts carry a matrix");
    let residuals = residual_grid(&best_matrix, measured, options.c_min);
    let (objective, included, _) = rms_of(&residuals).expect("best start has included cells");
    let excluded_cells = measured
        .cells()
        .filter(|(r, c, ..)| residuals[*r][*c].is_none())
        .map(|(_, _, ip, op, _)| (ip, op))
        .collect();

    let mut alternatives: Vec<AlternativeSolution> = Vec::new();
    for o in &outcomes {
        let (Some(obj), Some(mat)) = (o.objective, &o.matrix) else {
            continue;
        };
        if o.start == best.start || obj >= ZERO_OBJECTIVE {
            continue;
        }
        let distinct = std::iter::once(&best_matrix)
            .chain(alternatives.iter().map(|a| &a.matrix))
            .all(|known| !matrix::representatives_close(known, mat, ALTERNATIVE_GAUGE_TOL));
        if distinct {
            alternatives.push(AlternativeSolution {
                start: o.start,
                objective: obj,
                matrix: mat.clone(),
            });
        }
    }

    Ok(ReconstructionResult {
        matrix: best_matrix,
        objective,
        residuals,
        input_pairs: measured.input_pairs().to_vec(),
        output_pairs: measured.output_pairs().to_vec(),
        per_start_objectives: outcomes.iter().map(|o| o.objective).collect(),
        best_start: best.start,
        iterations_used: best.iterations,
        excluded_cells,
        underdetermined: included < problem.n_params(),
        alternatives,
        starts: outcomes,
        options: options.clone(),
    })
}

/// One row of [`residual_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub input_pair: ModePair,
    pub output_pair: ModePair,
    pub measured: Option<f64>,
    pub reconstructed: Option<f64>,
    pub residual: Option<f64>,
    pub included: bool,
}

/// Per-cell comparison sorted by |residual| descending; excluded cells last,
/// ties in row-major order.
pub fn residual_report(result: &ReconstructionResult, measured: &VisibilityMatrix) -> Result<Vec<ResidualRow>> {
    residual_table(&result.matrix, measured, result.options.c_min)
}

/// [`residual_report`] for an arbitrary candidate matrix.
pub fn residual_table(
    candidate: &TransitionMatrix,
    measured: &VisibilityMatrix,
    c_min: f64,
) -> Result<Vec<ResidualRow>> {
    check_measured_dims(candidate, measured)?;
    let recon = visibility_matrix_with_threshold(candidate, c_min)?;
    let residuals = residual_grid(candidate, measured, c_min);
    let mut rows: Vec<ResidualRow> = measured
        .cells()
        .map(|(r, c, ip, op, vm)| ResidualRow {
            input_pair: ip,
            output_pair: op,
            measured: vm,
            reconstructed: recon.get(r, c),
            residual: residuals[r][c],
            included: residuals[r][c].is_some(),
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |row: &ResidualRow| row.residual.map_or(-1.0, f64::abs);
        key(b).total_cmp(&key(a))
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interference::visibility_matrix;
    use crate::matrix::{gauge_equivalent, ideal_4x4};

    #[test]
    fn zero_phases_give_real_matrix() {
        let mags = MagnitudeGrid::from_matrix(&ideal_4x4(0.3).unwrap());
        let m = parameterize(&mags, &[0.0; 9]).unwrap();
        assert!(m.entries().iter().all(|z| z.im == 0.0 && z.re >= 0.0));
    }

    #[test]
    fn parameterize_recovers_ideal() {
        let theta = 0.8;
        let ideal = ideal_4x4(theta).unwrap();
        let mags = MagnitudeGrid::from_matrix(&ideal);
        // canonical interior phases of the ideal family
        let canon = matrix::canonical_gauge(&ideal).unwrap().representative;
        let phases: Vec<f64> = (1..4)
            .flat_map(|i| (1..4).map(move |k| (i, k)))
            .map(|(i, k)| canon.at(i, k).arg())
            .collect();
        let m = parameterize(&mags, &phases).unwrap();
        assert!(gauge_equivalent(&m, &ideal, 1e-12).unwrap());
    }

    #[test]
    fn phase_perturbation_is_local() {
        let mags = MagnitudeGrid::from_matrix(&ideal_4x4(0.0).unwrap());
        let base = parameterize(&mags, &[0.0; 9]).unwrap();
        let mut phases = [0.0; 9];
        phases[4] = 0.5;
        let moved = parameterize(&mags, &phases).unwrap();
        let changed: Vec<usize> = (0..16).filter(|&i| base.entries()[i] != moved.entries()[i]).collect();
        assert_eq!(changed, vec![2 * 4 + 2]);
        assert!(matches!(parameterize(&mags, &[0.0; 8]), Err(Error::Shape(_))));
    }

    #[test]
    fn objective_examples() {
        let source = ideal_4x4(0.0).unwrap();
        let measured = visibility_matrix(&source).unwrap();
        assert_eq!(objective(&source, &measured, 1e-9).unwrap().rms, 0.0);
        let other = objective(&ideal_4x4(PI).unwrap(), &measured, 1e-9).unwrap();
        assert!(other.rms > 0.0);
        assert!(matches!(
            objective(&source, &measured, 1.0),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn magnitude_grid_validation() {
        assert!(MagnitudeGrid::new(vec![vec![1.0, -0.1]], None).is_err());
        assert!(MagnitudeGrid::new(vec![vec![1.0], vec![1.0, 2.0]], None).is_err());
        assert!(MagnitudeGrid::new(vec![vec![1.0, 0.5]], Some(vec![vec![0.1]])).is_err());
        let g = MagnitudeGrid::new(vec![vec![1.0, 0.0]], None).unwrap();
        assert_eq!(g.effective_uncertainty(), vec![0.05, 1e-6]);
    }

    #[test]
    fn options_validation() {
        let opts = ReconstructionOptions {
            starts: 0,
            ..Default::default()
        };
        assert!(opts.validate().is_err());
    }

    #[test]
    fn round_trip_ideal() {
        let ideal = ideal_4x4(0.7).unwrap();
        let measured = visibility_matrix(&ideal).unwrap();
        let result = reconstruct(
            &measured,
            &MagnitudeGrid::from_matrix(&ideal),
            &ReconstructionOptions::default(),
        )
        .unwrap();
        assert!(result.objective < 1e-8, "{}", result.objective);
        assert!(gauge_equivalent(&result.matrix, &ideal, 1e-4).unwrap());
    }

    #[test]
    fn history_is_monotone() {
        let u = crate::matrix::random_unitary(4, 3).unwrap();
        let measured = visibility_matrix(&u).unwrap();
        let opts = ReconstructionOptions {
            starts: 4,
            ..Default::default()
        };
        let result = reconstruct(&measured, &MagnitudeGrid::from_matrix(&u), &opts).unwrap();
        for s in &result.starts {
            assert!(s.history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn corrupted_cell_ranks_first() {
        let ideal = ideal_4x4(0.7).unwrap();
        let clean = visibility_matrix(&ideal).unwrap();
        let result = reconstruct(
            &clean,
            &MagnitudeGrid::from_matrix(&ideal),
            &ReconstructionOptions::default(),
        )
        .unwrap();
        let report = residual_report(&result, &clean).unwrap();
        assert!(report.iter().all(|r| r.residual.unwrap().abs() < 1e-8));

        let mut values = clean.values().to_vec();
        values[2][3] = values[2][3].map(|v| v + 0.3);
        let corrupted =
            VisibilityMatrix::new(clean.input_pairs().to_vec(), clean.output_pairs().to_vec(), values).unwrap();
        let report = residual_report(&result, &corrupted).unwrap();
        assert_eq!(
            (report[0].input_pair, report[0].output_pair),
            (clean.input_pairs()[2], clean.output_pairs()[3])
        );
    }
}
