//! Two-photon dip and peak traces versus relative path delay.
//!
//! Spectra are Gaussian. A filter of FWHM bandwidth `Δλ` at centre `λ₀`
//! gives an angular-frequency spread `σ = 2π (c Δλ / λ₀²) / (2√(2 ln 2))`;
//! two photons with spreads `σ₁`, `σ₂` interfere over the combined width
//! `σ_c² = 2σ₁²σ₂² / (σ₁² + σ₂²)`. The interference term at delay `τ` is
//! `exp(−σ_c² τ²)`, whose FWHM is `2√(ln 2) / σ_c`.
//!
//! Delays are free-space path lengths in µm.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{coincidence_pair, ModePair};
use crate::matrix::TransitionMatrix;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

const UM: f64 = 1e-6;

/// Centre wavelength and per-photon filter bandwidths (FWHM), all in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSetup {
    pub center_wavelength_um: f64,
    pub bandwidth_a_um: f64,
    pub bandwidth_b_um: f64,
}

impl SpectralSetup {
    pub fn new(center_wavelength_um: f64, bandwidth_a_um: f64, bandwidth_b_um: f64) -> Result<Self> {
        let setup = Self {
            center_wavelength_um,
            bandwidth_a_um,
            bandwidth_b_um,
        };
        for (name, v) in [
            ("center wavelength", center_wavelength_um),
            ("bandwidth a", bandwidth_a_um),
            ("bandwidth b", bandwidth_b_um),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if bandwidth_a_um >= center_wavelength_um || bandwidth_b_um >= center_wavelength_um {
            return Err(Error::Validation(
                "bandwidths must be below the centre wavelength".into(),
            ));
        }
        Ok(setup)
    }

    /// Convenience constructor taking nanometres.
    pub fn from_nm(center_nm: f64, bandwidth_a_nm: f64, bandwidth_b_nm: f64) -> Result<Self> {
        Self::new(center_nm * 1e-3, bandwidth_a_nm * 1e-3, bandwidth_b_nm * 1e-3)
    }
}

fn sigma_for(center_um: f64, bandwidth_um: f64) -> f64 {
    let freq_fwhm = SPEED_OF_LIGHT * (bandwidth_um * UM) / (center_um * UM).powi(2);
    std::f64::consts::TAU * freq_fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// Angular-frequency spreads `(σ₁, σ₂)` in rad/s.
pub fn coherence_sigma(setup: &SpectralSetup) -> (f64, f64) {
    (
        sigma_for(setup.center_wavelength_um, setup.bandwidth_a_um),
        sigma_for(setup.center_wavelength_um, setup.bandwidth_b_um),
    )
}

/// Combined width `σ_c` in rad/s.
pub fn combined_sigma(setup: &SpectralSetup) -> f64 {
    let (s1, s2) = coherence_sigma(setup);
    let (a, b) = (s1 * s1, s2 * s2);
    (2.0 * a * b / (a + b)).sqrt()
}

/// FWHM of the interference envelope as a path length in µm.
pub fn dip_envelope_fwhm(setup: &SpectralSetup) -> f64 {
    let fwhm_s = 2.0 * std::f64::consts::LN_2.sqrt() / combined_sigma(setup);
    SPEED_OF_LIGHT * fwhm_s / UM
}

/// Visibility after a Gaussian time-of-flight jitter of standard deviation
/// `jitter_sigma_s`: `v_source · exp(−s² σ_c² / 2)`.
pub fn jitter_visibility(v_source: f64, jitter_sigma_s: f64, setup: &SpectralSetup) -> Result<f64> {
    if !(0.0..=1.0).contains(&v_source) {
        return Err(Error::Validation(format!(
            "source visibility {v_source} outside [0, 1]"
        )));
    }
    if jitter_sigma_s.is_nan() || jitter_sigma_s < 0.0 {
        return Err(Error::Validation(format!(
            "jitter must be non-negative, got {jitter_sigma_s}"
        )));
    }
    let sc = combined_sigma(setup);
    Ok(v_source * (-0.5 * (jitter_sigma_s * sc).powi(2)).exp())
}

/// Jitter (s) for which [`jitter_visibility`] returns `v_target`.
pub fn calibrate_jitter(v_source: f64, v_target: f64, setup: &SpectralSetup) -> Result<f64> {
    if !(v_target > 0.0 && v_target <= v_source && v_source <= 1.0) {
        return Err(Error::Validation(format!(
            "need 0 < target ({v_target}) <= source ({v_source}) <= 1"
        )));
    }
    Ok((2.0 * (v_source / v_target).ln()).sqrt() / combined_sigma(setup))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipSample {
    pub delay_um: f64,
    pub coincidences: f64,
    pub accidentals: Option<f64>,
}

/// Coincidence counts sampled along the delay axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipTrace {
    samples: Vec<DipSample>,
    pub input_pair: Option<ModePair>,
    pub output_pair: Option<ModePair>,
}

impl DipTrace {
    /// Requires strictly increasing finite delays and non-negative finite counts.
    pub fn new(samples: Vec<DipSample>) -> Result<Self> {
        for (idx, s) in samples.iter().enumerate() {
            if !s.delay_um.is_finite() {
                return Err(Error::Validation(format!("sample {}: delay not finite", idx + 1)));
            }
            let counts_ok = |v: f64| v.is_finite() && v >= 0.0;
            if !counts_ok(s.coincidences) || !s.accidentals.is_none_or(counts_ok) {
                return Err(Error::Validation(format!(
                    "sample {}: counts must be finite and non-negative",
                    idx + 1
                )));
            }
        }
        check_increasing(samples.iter().map(|s| s.delay_um))?;
        Ok(Self {
            samples,
            input_pair: None,
            output_pair: None,
        })
    }

    pub fn with_pairs(mut self, inputs: ModePair, outputs: ModePair) -> Self {
        self.input_pair = Some(inputs);
        self.output_pair = Some(outputs);
        self
    }

    pub fn samples(&self) -> &[DipSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn has_accidentals(&self) -> bool {
        self.samples.iter().any(|s| s.accidentals.is_some())
    }
}

fn check_increasing(delays: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for (idx, d) in delays.enumerate() {
        if d <= prev {
            return Err(Error::Validation(format!(
                "delays must be strictly increasing (sample {})",
                idx + 1
            )));
        }
        prev = d;
    }
    Ok(())
}

/// Parameters for [`synthesize_trace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSynthesis {
    pub setup: SpectralSetup,
    /// Time-of-flight jitter, seconds.
    pub jitter_sigma_s: f64,
    /// Visibility of the photon source alone, in [0, 1].
    pub source_visibility: f64,
    /// Counts per unit coincidence probability.
    pub scale: f64,
    /// Linear drift, counts per µm.
    pub slope: f64,
    /// Mean accidental coincidences per sample.
    pub accidental_rate: f64,
    /// Poisson noise when set; expected counts otherwise.
    pub noise_seed: Option<u64>,
}

impl TraceSynthesis {
    pub fn new(setup: SpectralSetup, scale: f64) -> Self {
        Self {
            setup,
            jitter_sigma_s: 0.0,
            source_visibility: 1.0,
            scale,
            slope: 0.0,
            accidental_rate: 0.0,
            noise_seed: None,
        }
    }
}

/// Expected counts at each delay are
/// `scale·[C + γ(x)(Q − C)] + slope·x + accidental_rate` with
/// `γ(x) = V_eff · exp(−x² σ_c² / c²)`, clamped at zero. The accidental
/// column records `accidental_rate` (Poisson-drawn under noise).
pub fn synthesize_trace(
    m: &TransitionMatrix,
    inputs: ModePair,
    outputs: ModePair,
    params: &TraceSynthesis,
    delays_um: &[f64],
) -> Result<DipTrace> {
    check_increasing(delays_um.iter().copied())?;
    if delays_um.iter().any(|d| !d.is_finite()) {
        return Err(Error::Validation("delays must be finite".into()));
    }
    for (name, v) in [("scale", params.scale), ("accidental rate", params.accidental_rate)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Validation(format!("{name} must be non-negative, got {v}")));
        }
    }
    if !params.slope.is_finite() {
        return Err(Error::Validation("slope must be finite".into()));
    }
    let q = crate::interference::quantum_coincidence(m, inputs, outputs)?;
    let (i, j) = (inputs.first() - 1, inputs.second() - 1);
    let (k, l) = (outputs.first() - 1, outputs.second() - 1);
    let c = coincidence_pair(m, i, j, k, l).1;
    let v_eff = jitter_visibility(params.source_visibility, params.jitter_sigma_s, &params.setup)?;
    let sc = combined_sigma(&params.setup);

    let mut rng = params.noise_seed.map(ChaCha8Rng::seed_from_u64);
    let mut draw = |mean: f64| -> Result<f64> {
        match rng.as_mut() {
            Some(rng) if mean > 0.0 => {
                let dist = Poisson::new(mean).map_err(|e| Error::Validation(format!("poisson mean {mean}: {e}")))?;
                Ok(dist.sample(rng))
            }
            Some(_) => Ok(0.0),
            None => Ok(mean),
        }
    };
    let mut samples = Vec::with_capacity(delays_um.len());
    for &x in delays_um {
        let tau = x * UM / SPEED_OF_LIGHT;
        let gamma = v_eff * (-(sc * tau).powi(2)).exp();
        let expected = (params.scale * (c + gamma * (q - c)) + params.slope * x + params.accidental_rate).max(0.0);
        let coincidences = draw(expected)?;
        let accidentals = if params.accidental_rate > 0.0 {
            Some(draw(params.accidental_rate)?)
        } else {
            None
        };
        samples.push(DipSample {
            delay_um: x,
            coincidences,
            accidentals,
        });
    }
    Ok(DipTrace::new(samples)?.with_pairs(inputs, outputs))
}

/// Subtracts accidentals from every sample, flooring at zero. The subtracted
/// samples carry zero accidentals, so applying this twice changes nothing.
pub fn correct_accidentals(trace: &DipTrace) -> Result<DipTrace> {
    let mut samples = trace.samples.clone();
    for (idx, s) in samples.iter_mut().enumerate() {
        let acc = s
            .accidentals
            .ok_or_else(|| Error::Validation(format!("sample {} has no accidental count", idx + 1)))?;
        s.coincidences = (s.coincidences - acc).max(0.0);
        s.accidentals = Some(0.0);
    }
    Ok(DipTrace {
        samples,
        input_pair: trace.input_pair,
        output_pair: trace.output_pair,
    })
}

/// Weighted least-squares fit of
/// `baseline·(1 − V·exp(−(x − center)²/(2w²))) + slope·x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipFit {
    pub visibility: f64,
    /// One standard error of `visibility` from the inverse normal matrix.
    pub visibility_stderr: f64,
    pub fwhm_um: f64,
    pub baseline: f64,
    pub slope: f64,
    pub center_um: f64,
    /// RMS of unweighted residuals, counts.
    pub residual_rms: f64,
    pub iterations: usize,
}

const FIT_MIN_SAMPLES: usize = 8;
const FIT_MAX_ITERATIONS: usize = 500;
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3; // 2√(2 ln 2)

struct DipModel<'a> {
    x: &'a [f64],
    y: &'a [f64],
    weights: Vec<f64>,
}

// parameter order: baseline, visibility, center, width, slope
impl DipModel<'_> {
    fn eval(p: &[f64; 5], x: f64) -> f64 {
        let [b, v, c, w, s] = *p;
        let g = (-(x - c).powi(2) / (2.0 * w * w)).exp();
        b * (1.0 - v * g) + s * x
    }

    fn jacobian_row(p: &[f64; 5], x: f64) -> [f64; 5] {
        let [b, v, c, w, _] = *p;
        let d = x - c;
        let g = (-d * d / (2.0 * w * w)).exp();
        [
            1.0 - v * g,
            -b * g,
            -b * v * g * d / (w * w),
            -b * v * g * d * d / (w * w * w),
            x,
        ]
    }

    fn chi2(&self, p: &[f64; 5]) -> f64 {
        self.x
            .iter()
            .zip(self.y)
            .zip(&self.weights)
            .map(|((&x, &y), &wt)| wt * (y - Self::eval(p, x)).powi(2))
            .sum()
    }

    /// `(JᵀWJ, JᵀWr)`.
    fn normal_equations(&self, p: &[f64; 5]) -> (DMatrix<f64>, DVector<f64>) {
        let mut a = DMatrix::zeros(5, 5);
        let mut g = DVector::zeros(5);
        for ((&x, &y), &wt) in self.x.iter().zip(self.y).zip(&self.weights) {
            let row = Self::jacobian_row(p, x);
            let r = y - Self::eval(p, x);
            for i in 0..5 {
                g[i] += wt * row[i] * r;
                for j in 0..5 {
                    a[(i, j)] += wt * row[i] * row[j];
                }
            }
        }
        (a, g)
    }
}

fn constrain(p: &mut [f64; 5]) {
    p[1] = p[1].clamp(-1.0, 1.0);
    p[3] = p[3].abs().max(1e-9);
}

/// Ordinary least-squares line through `(x, y)`, returning `(intercept, slope)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

fn initial_guess(x: &[f64], y: &[f64]) -> [f64; 5] {
    let n = x.len();
    let edge = (n / 4).max(2);
    let ex: Vec<f64> = x[..edge].iter().chain(&x[n - edge..]).copied().collect();
    let ey: Vec<f64> = y[..edge].iter().chain(&y[n - edge..]).copied().collect();
    let (baseline, slope) = line_fit(&ex, &ey);
    let dev: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - (baseline + slope * xi)).collect();
    let peak = (0..n)
        .max_by(|&a, &b| dev[a].abs().total_cmp(&dev[b].abs()))
        .unwrap_or(n / 2);
    let half = dev[peak].abs() / 2.0;
    let mut lo = peak;
    while lo > 0 && dev[lo - 1].abs() > half {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < n && dev[hi + 1].abs() > half {
        hi += 1;
    }
    let spacing = (x[n - 1] - x[0]) / (n - 1) as f64;
    let fwhm = (x[hi] - x[lo]).max(spacing);
    let vis = if baseline.abs() > 0.0 {
        (-dev[peak] / baseline).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    [baseline, vis, x[peak], fwhm / FWHM_PER_SIGMA, slope]
}

/// Damped Gauss-Newton iterations from `p`. Returns the iterations spent
/// and whether a minimum was reached.
fn levenberg_marquardt(model: &DipModel<'_>, p: &mut [f64; 5]) -> (usize, bool) {
    let mut chi2 = model.chi2(p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        let (a, g) = model.normal_equations(p);
        let mut damped = a.clone();
        for i in 0..5 {
            damped[(i, i)] += lambda * a[(i, i)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&g) else {
            lambda *= 10.0;
            continue;
        };
        let mut trial = *p;
        for i in 0..5 {
            trial[i] += step[i];
        }
        constrain(&mut trial);
        let trial_chi2 = model.chi2(&trial);
        if trial_chi2.is_finite() && trial_chi2 <= chi2 {
            let improvement = chi2 - trial_chi2;
            *p = trial;
            chi2 = trial_chi2;
            lambda = (lambda / 10.0).max(1e-12);
            if improvement <= 1e-12 * chi2.max(1e-300) || chi2 < 1e-24 {
                return (iterations, true);
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e14 {
                // no downhill step exists at machine precision
                return (iterations, true);
            }
        }
    }
    (iterations, false)
}

/// Levenberg-Marquardt fit with Poisson weights, variance `max(count, 1)`.
pub fn fit_dip(trace: &DipTrace) -> Result<DipFit> {
    if trace.len() < FIT_MIN_SAMPLES {
        return Err(Error::Validation(format!(
            "need at least {FIT_MIN_SAMPLES} samples to fit, got {}",
            trace.len()
        )));
    }
    let x: Vec<f64> = trace.samples.iter().map(|s| s.delay_um).collect();
    let y: Vec<f64> = trace.samples.iter().map(|s| s.coincidences).collect();
    let mut p = initial_guess(&x, &y);
    let span = x[x.len() - 1] - x[0];
    if p[3] * FWHM_PER_SIGMA > span {
        return Err(Error::Validation(format!(
            "delay span {span} um is narrower than the apparent dip width"
        )));
    }
    let model = DipModel {
        x: &x,
        y: &y,
        weights: y.iter().map(|&c| 1.0 / c.max(1.0)).collect(),
    };
    let (iterations, converged) = levenberg_marquardt(&model, &mut p);
    let residual_rms = (x
        .iter()
        .zip(&y)
        .map(|(&xi, &yi)| (yi - DipModel::eval(&p, xi)).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    if !converged || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailure {
            iterations,
            best_rms: residual_rms,
        });
    }
    let (a, _) = model.normal_equations(&p);
    let visibility_stderr = a
        .try_inverse()
        .map(|cov| cov[(1, 1)].max(0.0).sqrt())
        .unwrap_or(f64::INFINITY);
    Ok(DipFit {
        visibility: p[1],
        visibility_stderr,
        fwhm_um: FWHM_PER_SIGMA * p[3],
        baseline: p[0],
        slope: p[4],
        center_um: p[2],
        residual_rms,
        iterations,
    })
}

/// `n` evenly spaced delays covering `[-half_span, half_span]` µm.
pub fn delay_grid(half_span_um: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| -half_span_um + 2.0 * half_span_um * i as f64 / (n - 1) as f64)
        .collect()
}
