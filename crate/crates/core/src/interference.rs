//! Quantum and classical multiphoton coincidence statistics.
//!
//! Two indistinguishable photons entering inputs `i < j` leave in outputs
//! `k < l` with probability `Q = |M_ik M_jl + M_il M_jk|²`; distinguishable
//! photons give `C = |M_ik M_jl|² + |M_il M_jk|²`. The visibility
//! `V = (C - Q) / C` is positive for a dip and negative for a peak. The
//! general n-photon case goes through matrix permanents.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;

/// Largest matrix handed to Ryser's formula.
pub const PERMANENT_MAX_N: usize = 30;
/// Largest matrix handed to the permutation-sum oracle.
pub const BRUTEFORCE_MAX_N: usize = 9;
/// Exhaustive output enumeration bound on photon number.
pub const MAX_PHOTONS: usize = 6;
/// Classical coincidence probability at or below which a visibility is undefined.
pub const DEFAULT_C_MIN: f64 = 1e-9;

fn check_square(n: usize, entries: &[Complex64]) -> Result<()> {
    if entries.len() != n * n {
        return Err(Error::Shape(format!(
            "{} entries do not form a {n}x{n} square grid",
            entries.len()
        )));
    }
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Validation("permanent of a non-finite grid".into()));
    }
    Ok(())
}

/// Permanent of the row-major `n×n` grid by Ryser's formula, visiting
/// column subsets in Gray-code order so each step updates the row sums by
/// a single column. `O(2^n · n)`.
pub fn permanent(n: usize, entries: &[Complex64]) -> Result<Complex64> {
    check_square(n, entries)?;
    if n > PERMANENT_MAX_N {
        return Err(Error::SizeLimit {
            what: "permanent size",
            value: n,
            limit: PERMANENT_MAX_N,
        });
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut in_subset = vec![false; n];
    let mut total = Complex64::new(0.0, 0.0);
    for step in 1u64..(1u64 << n) {
        let col = step.trailing_zeros() as usize;
        let sign = if in_subset[col] { -1.0 } else { 1.0 };
        in_subset[col] = !in_subset[col];
        for (r, sum) in row_sums.iter_mut().enumerate() {
            *sum += sign * entries[r * n + col];
        }
        let product: Complex64 = row_sums.iter().product();
        // subset size parity follows the Gray code parity
        let gray = step ^ (step >> 1);
        if gray.count_ones() % 2 == n as u32 % 2 {
            total += product;
        } else {
            total -= product;
        }
    }
    Ok(total)
}

/// Permanent as the plain sum over all `n!` permutations. Test oracle only.
pub fn permanent_bruteforce(n: usize, entries: &[Complex64]) -> Result<Complex64> {
    check_square(n, entries)?;
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::SizeLimit {
            what: "brute-force permanent size",
            value: n,
            limit: BRUTEFORCE_MAX_N,
        });
    }
    fn recurse(n: usize, entries: &[Complex64], row: usize, used: u32, acc: Complex64) -> Complex64 {
        if row == n {
            return acc;
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for col in 0..n {
            if used & (1 << col) == 0 {
                sum += recurse(n, entries, row + 1, used | (1 << col), acc * entries[row * n + col]);
            }
        }
        sum
    }
    Ok(recurse(n, entries, 0, 0, Complex64::new(1.0, 0.0)))
}

/// Ordered pair of distinct 1-based mode labels, `first < second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct ModePair {
    first: usize,
    second: usize,
}

impl ModePair {
    pub fn new(first: usize, second: usize) -> Result<Self> {
        if first == 0 || first >= second {
            return Err(Error::Validation(format!(
                "mode pair ({first}, {second}) must satisfy 1 <= first < second"
            )));
        }
        Ok(Self { first, second })
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn second(&self) -> usize {
        self.second
    }

    /// 0-based indices.
    pub(crate) fn indices(&self) -> (usize, usize) {
        (self.first - 1, self.second - 1)
    }

    fn check_range(&self, modes: usize) -> Result<()> {
        if self.second > modes {
            return Err(Error::Index {
                label: self.second,
                max: modes,
            });
        }
        Ok(())
    }
}

impl TryFrom<[usize; 2]> for ModePair {
    type Error = Error;
    fn try_from(v: [usize; 2]) -> Result<Self> {
        ModePair::new(v[0], v[1])
    }
}

impl From<ModePair> for [usize; 2] {
    fn from(p: ModePair) -> Self {
        [p.first, p.second]
    }
}

impl fmt::Display for ModePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.first, self.second)
    }
}

/// All pairs over `modes` labels in lexicographic order:
/// (1,2), (1,3), ..., (1,n), (2,3), ...
pub fn all_pairs(modes: usize) -> Vec<ModePair> {
    (1..=modes)
        .flat_map(|a| (a + 1..=modes).map(move |b| ModePair { first: a, second: b }))
        .collect()
}

/// `(Q, C)` for 0-based inputs `(i, j)` and outputs `(k, l)`.
#[inline]
pub(crate) fn coincidence_pair(m: &TransitionMatrix, i: usize, j: usize, k: usize, l: usize) -> (f64, f64) {
    let a = m.at(i, k) * m.at(j, l);
    let b = m.at(i, l) * m.at(j, k);
    ((a + b).norm_sqr(), a.norm_sqr() + b.norm_sqr())
}

fn check_pairs(m: &TransitionMatrix, inputs: ModePair, outputs: ModePair) -> Result<()> {
    inputs.check_range(m.n_inputs())?;
    outputs.check_range(m.n_outputs())
}

/// Probability of one photon in each of `outputs` for indistinguishable
/// photons in `inputs`.
pub fn quantum_coincidence(m: &TransitionMatrix, inputs: ModePair, outputs: ModePair) -> Result<f64> {
    check_pairs(m, inputs, outputs)?;
    let ((i, j), (k, l)) = (inputs.indices(), outputs.indices());
    Ok(coincidence_pair(m, i, j, k, l).0)
}

/// Same event for distinguishable photons: no cross term.
pub fn classical_coincidence(m: &TransitionMatrix, inputs: ModePair, outputs: ModePair) -> Result<f64> {
    check_pairs(m, inputs, outputs)?;
    let ((i, j), (k, l)) = (inputs.indices(), outputs.indices());
    Ok(coincidence_pair(m, i, j, k, l).1)
}

/// `(C - Q) / C`, or `None` when `C <= DEFAULT_C_MIN`.
pub fn visibility(m: &TransitionMatrix, inputs: ModePair, outputs: ModePair) -> Result<Option<f64>> {
    visibility_with_threshold(m, inputs, outputs, DEFAULT_C_MIN)
}

pub fn visibility_with_threshold(
    m: &TransitionMatrix,
    inputs: ModePair,
    outputs: ModePair,
    c_min: f64,
) -> Result<Option<f64>> {
    check_pairs(m, inputs, outputs)?;
    let ((i, j), (k, l)) = (inputs.indices(), outputs.indices());
    let (q, c) = coincidence_pair(m, i, j, k, l);
    Ok((c > c_min).then(|| (c - q) / c))
}

/// Two-photon visibilities for every input pair (rows) and output pair
/// (columns), both in lexicographic order. `None` marks undefined cells.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMatrix {
    input_pairs: Vec<ModePair>,
    output_pairs: Vec<ModePair>,
    values: Vec<Vec<Option<f64>>>,
}

impl VisibilityMatrix {
    /// Validates a grid against its pair labels. Labels must be the full
    /// lexicographic pair lists for some mode counts.
    pub fn new(input_pairs: Vec<ModePair>, output_pairs: Vec<ModePair>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let n_in = modes_for_pairs(&input_pairs)?;
        let n_out = modes_for_pairs(&output_pairs)?;
        if values.len() != input_pairs.len() || values.iter().any(|r| r.len() != output_pairs.len()) {
            return Err(Error::Shape(format!(
                "visibility grid must be {}x{} for {n_in} inputs and {n_out} outputs",
                input_pairs.len(),
                output_pairs.len()
            )));
        }
        if values.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("visibility values must be finite".into()));
        }
        Ok(Self {
            input_pairs,
            output_pairs,
            values,
        })
    }

    pub fn input_pairs(&self) -> &[ModePair] {
        &self.input_pairs
    }

    pub fn output_pairs(&self) -> &[ModePair] {
        &self.output_pairs
    }

    pub fn values(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row][col]
    }

    /// Mode counts `(inputs, outputs)` implied by the pair lists.
    pub fn modes(&self) -> (usize, usize) {
        (
            modes_for_pairs(&self.input_pairs).unwrap_or(0),
            modes_for_pairs(&self.output_pairs).unwrap_or(0),
        )
    }

    pub fn defined_mask(&self) -> Vec<Vec<bool>> {
        self.values
            .iter()
            .map(|r| r.iter().map(Option::is_some).collect())
            .collect()
    }

    pub fn defined_count(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_some()).count()
    }

    /// Iterates `(row, col, input pair, output pair, value)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, ModePair, ModePair, Option<f64>)> + '_ {
        self.values.iter().enumerate().flat_map(move |(r, row)| {
            row.iter()
                .enumerate()
                .map(move |(c, v)| (r, c, self.input_pairs[r], self.output_pairs[c], *v))
        })
    }
}

fn modes_for_pairs(pairs: &[ModePair]) -> Result<usize> {
    let modes = pairs.iter().map(|p| p.second).max().unwrap_or(0);
    if modes < 2 || pairs != all_pairs(modes).as_slice() {
        return Err(Error::Validation(
            "pair labels must list every mode pair in lexicographic order".into(),
        ));
    }
    Ok(modes)
}

pub fn visibility_matrix(m: &TransitionMatrix) -> Result<VisibilityMatrix> {
    visibility_matrix_with_threshold(m, DEFAULT_C_MIN)
}

pub fn visibility_matrix_with_threshold(m: &TransitionMatrix, c_min: f64) -> Result<VisibilityMatrix> {
    let (n_in, n_out) = m.dims();
    if n_in < 2 || n_out < 2 {
        return Err(Error::Shape(format!(
            "visibility matrix needs at least 2 inputs and 2 outputs, got {n_in}x{n_out}"
        )));
    }
    let input_pairs = all_pairs(n_in);
    let output_pairs = all_pairs(n_out);
    let values = input_pairs
        .iter()
        .map(|ip| {
            let (i, j) = ip.indices();
            output_pairs
                .iter()
                .map(|op| {
                    let (k, l) = op.indices();
                    let (q, c) = coincidence_pair(m, i, j, k, l);
                    (c > c_min).then(|| (c - q) / c)
                })
                .collect()
        })
        .collect();
    Ok(VisibilityMatrix {
        input_pairs,
        output_pairs,
        values,
    })
}

/// Photon occupation numbers per mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PhotonConfiguration {
    occupations: Vec<usize>,
}

impl PhotonConfiguration {
    pub fn new(occupations: Vec<usize>) -> Result<Self> {
        if occupations.iter().sum::<usize>() == 0 {
            return Err(Error::Validation("configuration holds no photons".into()));
        }
        Ok(Self { occupations })
    }

    pub fn occupations(&self) -> &[usize] {
        &self.occupations
    }

    pub fn modes(&self) -> usize {
        self.occupations.len()
    }

    pub fn total_photons(&self) -> usize {
        self.occupations.iter().sum()
    }

    /// Mode index (0-based) of each photon, repeated by occupation.
    fn expanded(&self) -> Vec<usize> {
        self.occupations
            .iter()
            .enumerate()
            .flat_map(|(mode, &count)| std::iter::repeat_n(mode, count))
            .collect()
    }

    fn factorial_product(&self) -> f64 {
        self.occupations.iter().map(|&n| factorial(n)).product()
    }
}

impl TryFrom<Vec<usize>> for PhotonConfiguration {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        PhotonConfiguration::new(v)
    }
}

impl From<PhotonConfiguration> for Vec<usize> {
    fn from(c: PhotonConfiguration) -> Self {
        c.occupations
    }
}

impl fmt::Display for PhotonConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.occupations.iter().map(|n| n.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Particle statistics for [`output_distribution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    /// Indistinguishable bosons.
    Quantum,
    /// Distinguishable particles, independently transported through `|M_ik|²`.
    Classical,
}

/// Every way of placing `photons` photons into `modes` modes, in lexicographic order.
pub fn output_configurations(modes: usize, photons: usize) -> Vec<PhotonConfiguration> {
    fn fill(mode: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if mode + 1 == current.len() {
            current[mode] = left;
            out.push(current.clone());
            return;
        }
        for n in 0..=left {
            current[mode] = n;
            fill(mode + 1, left - n, current, out);
        }
    }
    if modes == 0 || photons == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    fill(0, photons, &mut vec![0; modes], &mut out);
    out.into_iter()
        .map(|occupations| PhotonConfiguration { occupations })
        .collect()
}

/// Exact output distribution for the given input occupation.
///
/// Quantum: `P(T|S) = |perm(M_{S,T})|² / (∏ s_i! ∏ t_k!)`, where `M_{S,T}`
/// repeats row `i` `s_i` times and column `k` `t_k` times. Classical:
/// `P(T|S) = perm(|M|²_{S,T}) / ∏ t_k!`, the multinomial transport of
/// independent particles.
pub fn output_distribution(
    m: &TransitionMatrix,
    input: &PhotonConfiguration,
    statistics: Statistics,
) -> Result<BTreeMap<PhotonConfiguration, f64>> {
    let photons = input.total_photons();
    if photons > MAX_PHOTONS {
        return Err(Error::SizeLimit {
            what: "photon number",
            value: photons,
            limit: MAX_PHOTONS,
        });
    }
    if input.modes() != m.n_inputs() {
        return Err(Error::Shape(format!(
            "input configuration has {} modes, matrix has {} inputs",
            input.modes(),
            m.n_inputs()
        )));
    }
    let rows = input.expanded();
    let input_norm = input.factorial_product();
    let mut out = BTreeMap::new();
    for config in output_configurations(m.n_outputs(), photons) {
        let cols = config.expanded();
        let sub: Vec<Complex64> = rows
            .iter()
            .flat_map(|&r| {
                cols.iter().map(move |&c| match statistics {
                    Statistics::Quantum => m.at(r, c),
                    Statistics::Classical => Complex64::new(m.at(r, c).norm_sqr(), 0.0),
                })
            })
            .collect();
        let perm = permanent(photons, &sub)?;
        let p = match statistics {
            Statistics::Quantum => perm.norm_sqr() / (input_norm * config.factorial_product()),
            Statistics::Classical => perm.re / config.factorial_product(),
        };
        out.insert(config, p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{ideal_2x2, ideal_4x4, random_unitary};
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair(a: usize, b: usize) -> ModePair {
        ModePair::new(a, b).unwrap()
    }

    #[test]
    fn permanent_two_by_two() {
        let (a, b, cc, d) = (c(1.0, 2.0), c(-0.5, 0.3), c(0.7, -1.1), c(2.0, 0.0));
        let p = permanent(2, &[a, b, cc, d]).unwrap();
        assert!((p - (a * d + b * cc)).norm() < 1e-15);
    }

    #[test]
    fn permanent_all_ones_is_factorial() {
        for n in 1..=8 {
            let ones = vec![c(1.0, 0.0); n * n];
            assert_eq!(permanent(n, &ones).unwrap(), c(factorial(n), 0.0));
        }
    }

    #[test]
    fn permanent_errors() {
        assert!(matches!(permanent(2, &[c(1.0, 0.0); 3]), Err(Error::Shape(_))));
        let big = vec![c(0.0, 0.0); 31 * 31];
        assert!(matches!(permanent(31, &big), Err(Error::SizeLimit { .. })));
        let ten = vec![c(0.0, 0.0); 100];
        assert!(matches!(permanent_bruteforce(10, &ten), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn bruteforce_examples() {
        let eye = [
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
        ];
        assert_eq!(permanent_bruteforce(3, &eye).unwrap(), c(1.0, 0.0));
        let swap = [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(permanent_bruteforce(2, &swap).unwrap(), c(1.0, 0.0));
        let small = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)];
        assert_eq!(permanent_bruteforce(2, &small).unwrap(), c(10.0, 0.0));
    }

    #[test]
    fn mode_pair_rules() {
        assert!(ModePair::new(2, 2).is_err());
        assert!(ModePair::new(3, 1).is_err());
        assert!(ModePair::new(0, 1).is_err());
        let pairs: Vec<[usize; 2]> = all_pairs(4).into_iter().map(Into::into).collect();
        assert_eq!(pairs, vec![[1, 2], [1, 3], [1, 4], [2, 3], [2, 4], [3, 4]]);
    }

    #[test]
    fn hom_on_balanced_splitter() {
        let m = ideal_2x2();
        assert!(quantum_coincidence(&m, pair(1, 2), pair(1, 2)).unwrap().abs() < 1e-16);
        assert!((classical_coincidence(&m, pair(1, 2), pair(1, 2)).unwrap() - 0.5).abs() < 1e-15);
        assert!((visibility(&m, pair(1, 2), pair(1, 2)).unwrap().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn four_port_cells() {
        let m0 = ideal_4x4(0.0).unwrap();
        // direct: |1/4 + 1/4|^2 = 1/4 ; classical 2/16
        assert!((quantum_coincidence(&m0, pair(1, 2), pair(1, 2)).unwrap() - 0.25).abs() < 1e-15);
        for theta in [0.0, 0.4, 2.0] {
            let m = ideal_4x4(theta).unwrap();
            assert!((classical_coincidence(&m, pair(1, 2), pair(1, 2)).unwrap() - 0.125).abs() < 1e-15);
        }
        assert!((visibility(&m0, pair(1, 2), pair(1, 2)).unwrap().unwrap() + 1.0).abs() < 1e-15);
        let m90 = ideal_4x4(FRAC_PI_2).unwrap();
        assert!(visibility(&m90, pair(1, 2), pair(1, 2)).unwrap().unwrap().abs() < 1e-15);
    }

    #[test]
    fn identity_device() {
        let m = TransitionMatrix::identity(4).unwrap();
        assert_eq!(quantum_coincidence(&m, pair(1, 2), pair(1, 2)).unwrap(), 1.0);
        assert_eq!(classical_coincidence(&m, pair(1, 2), pair(3, 4)).unwrap(), 0.0);
        assert_eq!(visibility(&m, pair(1, 2), pair(3, 4)).unwrap(), None);
    }

    #[test]
    fn out_of_range_label() {
        let m = ideal_2x2();
        assert_eq!(
            quantum_coincidence(&m, pair(1, 3), pair(1, 2)),
            Err(Error::Index { label: 3, max: 2 })
        );
    }

    #[test]
    fn visibility_matrix_shapes() {
        let v = visibility_matrix(&ideal_2x2()).unwrap();
        assert_eq!(v.values().len(), 1);
        assert!((v.get(0, 0).unwrap() - 1.0).abs() < 1e-15);

        let theta = 1.1;
        let v = visibility_matrix(&ideal_4x4(theta).unwrap()).unwrap();
        assert_eq!((v.values().len(), v.values()[0].len()), (6, 6));
        assert!((v.get(0, 0).unwrap() + theta.cos()).abs() < 1e-14);
    }

    #[test]
    fn zero_columns_masked() {
        let z = c(0.0, 0.0);
        let h = c(0.5, 0.0);
        let m = TransitionMatrix::from_rows(vec![vec![h, h, z, z], vec![h, -h, z, z], vec![h, h, z, z]]).unwrap();
        let v = visibility_matrix(&m).unwrap();
        let col_34 = v.output_pairs().iter().position(|p| *p == pair(3, 4)).unwrap();
        assert!(v.values().iter().all(|row| row[col_34].is_none()));
        assert!(v.get(0, 0).is_some());
        assert!(!v.defined_mask()[0][col_34]);
    }

    #[test]
    fn hom_distribution() {
        let input = PhotonConfiguration::new(vec![1, 1]).unwrap();
        let d = output_distribution(&ideal_2x2(), &input, Statistics::Quantum).unwrap();
        let get = |o: Vec<usize>| d[&PhotonConfiguration::new(o).unwrap()];
        assert!((get(vec![2, 0]) - 0.5).abs() < 1e-15);
        assert!((get(vec![0, 2]) - 0.5).abs() < 1e-15);
        assert!(get(vec![1, 1]).abs() < 1e-15);
        let classical = output_distribution(&ideal_2x2(), &input, Statistics::Classical).unwrap();
        assert!((classical[&input] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_distribution_is_delta() {
        let input = PhotonConfiguration::new(vec![1, 0, 1]).unwrap();
        let d = output_distribution(&TransitionMatrix::identity(3).unwrap(), &input, Statistics::Quantum).unwrap();
        for (cfg, p) in &d {
            let expect = if *cfg == input { 1.0 } else { 0.0 };
            assert_eq!(*p, expect);
        }
    }

    #[test]
    fn distribution_matches_pair_formula() {
        let u = random_unitary(4, 99).unwrap();
        let input = PhotonConfiguration::new(vec![1, 1, 0, 0]).unwrap();
        let d = output_distribution(&u, &input, Statistics::Quantum).unwrap();
        for out in all_pairs(4) {
            let mut occ = vec![0; 4];
            occ[out.first() - 1] = 1;
            occ[out.second() - 1] = 1;
            let p = d[&PhotonConfiguration::new(occ).unwrap()];
            let q = quantum_coincidence(&u, pair(1, 2), out).unwrap();
            assert!((p - q).abs() < 1e-14);
        }
        assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn distribution_bounds() {
        let u = random_unitary(4, 1).unwrap();
        let seven = PhotonConfiguration::new(vec![2, 2, 2, 1]).unwrap();
        assert!(matches!(
            output_distribution(&u, &seven, Statistics::Quantum),
            Err(Error::SizeLimit { .. })
        ));
        let wrong = PhotonConfiguration::new(vec![1, 1]).unwrap();
        assert!(matches!(
            output_distribution(&u, &wrong, Statistics::Quantum),
            Err(Error::Shape(_))
        ));
        assert!(PhotonConfiguration::new(vec![0, 0]).is_err());
    }

    #[test]
    fn enumeration_counts() {
        // C(n + m - 1, n)
        assert_eq!(output_configurations(4, 3).len(), 20);
        assert_eq!(output_configurations(2, 2).len(), 3);
    }
}
