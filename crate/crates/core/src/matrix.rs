//! Complex transition matrices of linear-optical devices.
//!
//! Rows index input modes and columns index output modes. Storage and the
//! accessors here are 0-based; everything facing users (file formats, the
//! CLI, [`crate::ModePair`]) uses 1-based mode labels.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Tolerance for the opt-in strict-unitary flag.
pub const UNITARY_TOL: f64 = 1e-10;

/// Entries of smaller magnitude cannot anchor a gauge phase.
pub const GAUGE_ANCHOR_MIN: f64 = 1e-12;

/// Complex amplitude grid mapping input modes to output modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n_inputs: usize,
    n_outputs: usize,
    entries: Vec<Complex64>,
    unitary: bool,
}

impl TransitionMatrix {
    /// Builds a matrix from a row-major grid, rejecting ragged or non-finite input.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let n_inputs = rows.len();
        if n_inputs == 0 {
            return Err(Error::Shape("matrix has no rows".into()));
        }
        let n_outputs = rows[0].len();
        if n_outputs == 0 {
            return Err(Error::Shape("matrix has no columns".into()));
        }
        let mut entries = Vec::with_capacity(n_inputs * n_outputs);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_outputs {
                return Err(Error::Shape(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    n_outputs
                )));
            }
            entries.extend(row);
        }
        Self::from_row_major(n_inputs, n_outputs, entries)
    }

    /// Builds a matrix from a flat row-major buffer.
    pub fn from_row_major(n_inputs: usize, n_outputs: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n_inputs == 0 || n_outputs == 0 {
            return Err(Error::Shape(format!(
                "dimensions must be positive, got {n_inputs}x{n_outputs}"
            )));
        }
        if entries.len() != n_inputs * n_outputs {
            return Err(Error::Shape(format!(
                "{} entries for a {n_inputs}x{n_outputs} matrix",
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation(format!(
                "entry ({}, {}) is not finite",
                pos / n_outputs + 1,
                pos % n_outputs + 1
            )));
        }
        Ok(Self {
            n_inputs,
            n_outputs,
            entries,
            unitary: false,
        })
    }

    /// N×N identity.
    pub fn identity(n: usize) -> Result<Self> {
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self::from_row_major(n, n, entries)?.with_unitary_flag()
    }

    /// Sets the strict-unitary flag after checking `U·U† = I` and `U†·U = I`.
    pub fn with_unitary_flag(mut self) -> Result<Self> {
        if !self.is_unitary(UNITARY_TOL) {
            return Err(Error::Validation(format!(
                "matrix is not unitary within {UNITARY_TOL:e}"
            )));
        }
        self.unitary = true;
        Ok(self)
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_inputs, self.n_outputs)
    }

    /// Whether the strict-unitary flag is set.
    pub fn is_flagged_unitary(&self) -> bool {
        self.unitary
    }

    /// Entry at 0-based `(input, output)`.
    #[inline]
    pub fn at(&self, input: usize, output: usize) -> Complex64 {
        self.entries[input * self.n_outputs + output]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn row(&self, input: usize) -> &[Complex64] {
        &self.entries[input * self.n_outputs..(input + 1) * self.n_outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.entries.chunks(self.n_outputs)
    }

    /// Entry magnitudes, row-major.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.entries.iter().map(|z| z.norm()).collect()
    }

    /// Elementwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|z| z.conj()).collect(),
            ..self.clone()
        }
    }

    /// Multiplies every entry by `factor`; the unitary flag survives unit-modulus factors.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let keeps_unitary = (factor.norm() - 1.0).abs() <= 1e-15;
        Self {
            entries: self.entries.iter().map(|z| z * factor).collect(),
            unitary: self.unitary && keeps_unitary,
            ..self.clone()
        }
    }

    /// `diag(row_phases) · M · diag(col_phases)`.
    pub fn rephased(&self, row_phases: &[Complex64], col_phases: &[Complex64]) -> Result<Self> {
        if row_phases.len() != self.n_inputs || col_phases.len() != self.n_outputs {
            return Err(Error::Shape(format!(
                "phase vectors of length {}x{} for a {}x{} matrix",
                row_phases.len(),
                col_phases.len(),
                self.n_inputs,
                self.n_outputs
            )));
        }
        let mut entries = self.entries.clone();
        for (i, row) in entries.chunks_mut(self.n_outputs).enumerate() {
            for (k, z) in row.iter_mut().enumerate() {
                *z = row_phases[i] * *z * col_phases[k];
            }
        }
        Self::from_row_major(self.n_inputs, self.n_outputs, entries)
    }

    /// Checks orthonormality of rows and of columns within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.n_inputs != self.n_outputs {
            return false;
        }
        let n = self.n_inputs;
        for a in 0..n {
            for b in 0..n {
                let target = if a == b { 1.0 } else { 0.0 };
                let rows: Complex64 = (0..n).map(|k| self.at(a, k) * self.at(b, k).conj()).sum();
                let cols: Complex64 = (0..n).map(|i| self.at(i, a).conj() * self.at(i, b)).sum();
                if (rows - target).norm() > tol || (cols - target).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Shape(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.n_inputs, self.n_outputs, other.n_inputs, other.n_outputs
            )));
        }
        Ok(())
    }
}

/// Balanced 2×2 splitter `(1/√2)·[[1, i], [i, 1]]`.
pub fn ideal_2x2() -> TransitionMatrix {
    let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let b = Complex64::new(0.0, FRAC_1_SQRT_2);
    TransitionMatrix {
        n_inputs: 2,
        n_outputs: 2,
        entries: vec![a, b, b, a],
        unitary: true,
    }
}

/// Symmetric 4×4 splitter family with free internal phase `theta`.
pub fn ideal_4x4(theta: f64) -> Result<TransitionMatrix> {
    if !theta.is_finite() {
        return Err(Error::Validation(format!("theta must be finite, got {theta}")));
    }
    let h = Complex64::new(0.5, 0.0);
    let e = Complex64::from_polar(0.5, theta);
    #[rustfmt::skip]
    let entries = vec![
        h,  h,  h,  h,
        h,  e, -h, -e,
        h, -h,  h, -h,
        h, -e, -h,  e,
    ];
    Ok(TransitionMatrix {
        n_inputs: 4,
        n_outputs: 4,
        entries,
        unitary: true,
    })
}

/// Seeded random unitary: Gram-Schmidt orthonormalization of an i.i.d.
/// complex-Gaussian grid, which is Haar distributed.
pub fn random_unitary(n: usize, seed: u64) -> Result<TransitionMatrix> {
    if n == 0 {
        return Err(Error::Validation("random_unitary needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    for i in 0..n {
        // two passes keep orthogonality at round-off level
        for _ in 0..2 {
            for j in 0..i {
                let (done, rest) = rows.split_at_mut(i);
                let proj: Complex64 = rest[0].iter().zip(&done[j]).map(|(a, b)| a * b.conj()).sum();
                for (a, b) in rest[0].iter_mut().zip(&done[j]) {
                    *a -= proj * b;
                }
            }
        }
        let norm = rows[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::Validation("degenerate Gaussian draw".into()));
        }
        for z in rows[i].iter_mut() {
            *z /= norm;
        }
    }
    TransitionMatrix::from_rows(rows)?.with_unitary_flag()
}

/// Canonical representative of a gauge class.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeClass {
    pub representative: TransitionMatrix,
    /// Whether elementwise conjugation was applied.
    pub conjugated: bool,
}

/// Removes external input/output phases so the first row and column are real
/// and non-negative, then resolves the conjugation ambiguity.
///
/// The conjugation anchor is the largest-magnitude entry outside the first
/// row and column whose phase is not 0 or π; if its phase is negative the
/// whole matrix is conjugated. Anchors tied in magnitude (relative 1e-9) are
/// broken by row-major order. A matrix with no such entry is real up to gauge.
pub fn canonical_gauge(m: &TransitionMatrix) -> Result<GaugeClass> {
    let (n, k) = m.dims();
    for c in 0..k {
        check_anchor(m, 0, c)?;
    }
    for r in 1..n {
        check_anchor(m, r, 0)?;
    }
    let col_phases: Vec<Complex64> = (0..k).map(|c| unit_conj(m.at(0, c))).collect();
    let mut row_phases = vec![Complex64::new(1.0, 0.0); n];
    for (r, phase) in row_phases.iter_mut().enumerate().skip(1) {
        *phase = unit_conj(m.at(r, 0) * col_phases[0]);
    }
    let mut rep = m.rephased(&row_phases, &col_phases)?;
    rep.unitary = m.unitary;
    for c in 0..k {
        rep.entries[c] = Complex64::new(m.at(0, c).norm(), 0.0);
    }
    for r in 1..n {
        rep.entries[r * k] = Complex64::new(m.at(r, 0).norm(), 0.0);
    }
    let conjugated = resolve_conjugation(&mut rep);
    Ok(GaugeClass {
        representative: rep,
        conjugated,
    })
}

/// Applies only the conjugation tie-break, for matrices whose first row and
/// column are already real and non-negative. Returns whether it conjugated.
pub(crate) fn resolve_conjugation(m: &mut TransitionMatrix) -> bool {
    let conjugate = conjugation_anchor(m).is_some_and(|z| z.im < 0.0);
    for z in m.entries.iter_mut() {
        if conjugate {
            *z = z.conj();
        }
        // fold -0.0 into +0.0 so real negative entries sit at phase +π
        z.re += 0.0;
        z.im += 0.0;
    }
    conjugate
}

fn conjugation_anchor(m: &TransitionMatrix) -> Option<Complex64> {
    let (n, k) = m.dims();
    let interior: Vec<Complex64> = (1..n)
        .flat_map(|r| (1..k).map(move |c| (r, c)))
        .map(|(r, c)| m.at(r, c))
        .filter(|z| {
            let mag = z.norm();
            mag > GAUGE_ANCHOR_MIN && z.im.abs() > 1e-9 * mag
        })
        .collect();
    let max = interior.iter().map(|z| z.norm()).fold(0.0, f64::max);
    interior.into_iter().find(|z| z.norm() >= max * (1.0 - 1e-9))
}

fn check_anchor(m: &TransitionMatrix, r: usize, c: usize) -> Result<()> {
    let magnitude = m.at(r, c).norm();
    if magnitude <= GAUGE_ANCHOR_MIN {
        return Err(Error::GaugeAnchor {
            row: r + 1,
            col: c + 1,
            magnitude,
        });
    }
    Ok(())
}

fn unit_conj(z: Complex64) -> Complex64 {
    z.conj() / z.norm()
}

/// True iff the canonical representatives agree within `tol` in magnitude
/// everywhere and in phase wherever the magnitude exceeds `tol`.
pub fn gauge_equivalent(a: &TransitionMatrix, b: &TransitionMatrix, tol: f64) -> Result<bool> {
    a.check_same_dims(b)?;
    let ca = canonical_gauge(a)?.representative;
    let cb = canonical_gauge(b)?.representative;
    Ok(representatives_close(&ca, &cb, tol))
}

pub(crate) fn representatives_close(a: &TransitionMatrix, b: &TransitionMatrix, tol: f64) -> bool {
    a.entries.iter().zip(&b.entries).all(|(x, y)| {
        let (mx, my) = (x.norm(), y.norm());
        if (mx - my).abs() > tol {
            return false;
        }
        if mx <= tol || my <= tol {
            return true;
        }
        wrapped_phase_diff(x.arg(), y.arg()) <= tol
    })
}

/// Absolute phase difference folded into `[0, π]`.
pub fn wrapped_phase_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}
