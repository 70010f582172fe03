//! Scenario files and built-in test scenarios.
//!
//! A scenario file is JSON:
//!
//! ```json
//! {
//!   "name": "two-point",
//!   "d": 1,
//!   "atoms": [
//!     {"angle_over_2pi": "0", "weight": "1/2", "fiber_dim": 1, "b_block": [[1, 0]]},
//!     {"angle_over_2pi": "1/2", "weight": 0.5, "fiber_dim": 1, "b_block": [[1, 0]]}
//!   ],
//!   "gamma": [[0, 0]]
//! }
//! ```
//!
//! Points are given either as `angle_over_2pi` (number or `"p/q"`) or as
//! `re`/`im`. Matrices are flattened row-major lists of `[re, im]` pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ClarkError, Result};
use crate::linalg::{herm_inv_sqrt, op_norm, CMatrix, HermMatrix, C64};
use crate::measure::{Atom, SpectralMeasure};
use crate::perturbation::ContractionParam;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub measure: SpectralMeasure,
    pub gamma: ContractionParam,
    /// Multiplies every default tolerance.
    pub tolerance_scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    fn value(&self) -> Result<f64> {
        match self {
            Scalar::Num(x) => Ok(*x),
            Scalar::Text(s) => parse_rational(s),
        }
    }
}

fn parse_rational(s: &str) -> Result<f64> {
    let bad = || ClarkError::InvalidMeasure(format!("not a number or rational: {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle_over_2pi: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<f64>,
    weight: Scalar,
    fiber_dim: usize,
    b_block: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    name: Option<String>,
    d: usize,
    atoms: Vec<AtomFile>,
    gamma: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance_scale: Option<f64>,
}

fn matrix_from_pairs(rows: usize, cols: usize, pairs: &[[f64; 2]], what: &str) -> Result<CMatrix> {
    if pairs.len() != rows * cols {
        return Err(ClarkError::DimensionMismatch(format!(
            "{what}: expected {} entries, found {}",
            rows * cols,
            pairs.len()
        )));
    }
    Ok(CMatrix::from_row_iterator(rows, cols, pairs.iter().map(|[re, im]| C64::new(*re, *im))))
}

fn pairs_from_matrix(m: &CMatrix) -> Vec<[f64; 2]> {
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).map(|(i, j)| [m[(i, j)].re, m[(i, j)].im]).collect()
}

impl Scenario {
    pub fn new(name: &str, measure: SpectralMeasure, gamma: ContractionParam) -> Self {
        Scenario { name: name.to_string(), measure, gamma, tolerance_scale: 1.0 }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| ClarkError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })?;
        let d = file.d;
        let atoms = file
            .atoms
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let point = match (&a.angle_over_2pi, a.re, a.im) {
                    (Some(t), None, None) => C64::from_polar(1.0, std::f64::consts::TAU * t.value()?),
                    (None, Some(re), Some(im)) => C64::new(re, im),
                    _ => {
                        return Err(ClarkError::InvalidMeasure(format!(
                            "atom {j}: give either angle_over_2pi or both re and im"
                        )))
                    }
                };
                let b = matrix_from_pairs(a.fiber_dim, d, &a.b_block, &format!("atom {j} b_block"))?;
                Ok(Atom::new(point, a.weight.value()?, b))
            })
            .collect::<Result<Vec<_>>>()?;
        let measure = SpectralMeasure::new(atoms, d)?;
        let gamma = ContractionParam::new(matrix_from_pairs(d, d, &file.gamma, "gamma")?)?;
        Ok(Scenario {
            name: file.name.unwrap_or_else(|| "unnamed".into()),
            measure,
            gamma,
            tolerance_scale: file.tolerance_scale.unwrap_or(1.0),
        })
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            name: Some(self.name.clone()),
            d: self.measure.d(),
            atoms: self
                .measure
                .atoms()
                .iter()
                .map(|a| AtomFile {
                    angle_over_2pi: None,
                    re: Some(a.point.re),
                    im: Some(a.point.im),
                    weight: Scalar::Num(a.weight),
                    fiber_dim: a.fiber_dim(),
                    b_block: pairs_from_matrix(&a.b_block),
                })
                .collect(),
            gamma: pairs_from_matrix(self.gamma.gamma()),
            tolerance_scale: (self.tolerance_scale != 1.0).then_some(self.tolerance_scale),
        };
        serde_json::to_string_pretty(&file).expect("scenario serializes")
    }

    pub fn with_gamma(&self, gamma: ContractionParam) -> Self {
        Scenario { gamma, ..self.clone() }
    }

    pub fn n(&self) -> usize {
        self.measure.n()
    }

    pub fn d(&self) -> usize {
        self.measure.d()
    }
}

fn scalar(x: f64) -> CMatrix {
    CMatrix::from_element(1, 1, C64::from(x))
}

/// One atom at `1` with unit mass.
pub fn s1() -> Scenario {
    let m = SpectralMeasure::new(vec![Atom::at_turn(0.0, 1.0, scalar(1.0))], 1).expect("valid");
    Scenario::new("S1", m, ContractionParam::zero(1))
}

/// Atoms `±1` with mass `1/2` each.
pub fn s2() -> Scenario {
    let m = SpectralMeasure::new(
        vec![Atom::at_turn(0.0, 0.5, scalar(1.0)), Atom::at_turn(0.5, 0.5, scalar(1.0))],
        1,
    )
    .expect("valid");
    Scenario::new("S2", m, ContractionParam::zero(1))
}

/// Atoms `1, i, −1` with weights `1/2, 1/4, 1/4` and `d = 2`.
pub fn s3() -> Scenario {
    let r2 = std::f64::consts::SQRT_2;
    let row = |a: f64, b: f64| CMatrix::from_row_slice(1, 2, &[C64::from(a), C64::from(b)]);
    let m = SpectralMeasure::new(
        vec![
            Atom::at_turn(0.0, 0.5, row(r2, 0.0)),
            Atom::at_turn(0.25, 0.25, row(0.0, r2)),
            Atom::at_turn(0.5, 0.25, row(0.0, r2)),
        ],
        2,
    )
    .expect("valid");
    Scenario::new("S3", m, ContractionParam::zero(2))
}

/// Atoms `±1`, the second invisible to `B`: not star-cyclic.
pub fn s2_degenerate() -> Scenario {
    let m = SpectralMeasure::new(
        vec![
            Atom::at_turn(0.0, 0.5, scalar(std::f64::consts::SQRT_2)),
            Atom::at_turn(0.5, 0.5, scalar(0.0)),
        ],
        1,
    )
    .expect("valid");
    Scenario::new("S2-degenerate", m, ContractionParam::zero(1))
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Random `d × d` matrix with operator norm drawn from `[lo, hi]`.
pub fn random_gamma(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> ContractionParam {
    let g = gaussian_matrix(rng, d, d);
    let target: f64 = rng.random_range(lo..=hi);
    let g = &g * C64::from(target / op_norm(&g));
    ContractionParam::new(g).expect("norm below one")
}

/// Seeded random star-cyclic scenario with `d ≤ 3`, `n ≤ 12` and
/// `0.1 ≤ ‖Γ‖ ≤ 0.8`.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d: usize = rng.random_range(1..=3);
    let n_atoms: usize = rng.random_range(2..=(12 / d).clamp(2, 6));
    let mut dims: Vec<usize> = (0..n_atoms).map(|_| rng.random_range(1..=d)).collect();
    while dims.iter().sum::<usize>() > 12 {
        let j = dims.iter().position(|&m| m > 1).expect("some fiber above one");
        dims[j] -= 1;
    }
    if dims.iter().sum::<usize>() < d {
        dims[0] = d;
    }
    let spacing = 1.0 / n_atoms as f64;
    let offset: f64 = rng.random_range(0.0..1.0);
    let turns: Vec<f64> = (0..n_atoms)
        .map(|j| offset + spacing * (j as f64 + rng.random_range(-0.25..=0.25)))
        .collect();
    let raw: Vec<f64> = (0..n_atoms).map(|_| rng.random_range(0.6..=1.4)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let xs: Vec<CMatrix> = dims.iter().map(|&m| gaussian_matrix(&mut rng, m, d)).collect();
    let gram = xs
        .iter()
        .zip(&weights)
        .fold(CMatrix::zeros(d, d), |acc, (x, w)| acc + x.adjoint() * x * C64::from(*w));
    let g_inv_sqrt = herm_inv_sqrt(&HermMatrix::symmetrized(gram)).expect("generic Gram matrix is invertible");
    let atoms = turns
        .iter()
        .zip(&weights)
        .zip(&xs)
        .map(|((t, w), x)| Atom::at_turn(*t, *w, x * &g_inv_sqrt))
        .collect();
    let measure = SpectralMeasure::new(atoms, d).expect("valid shapes");
    let gamma = random_gamma(&mut rng, d, 0.1, 0.8);
    Scenario { name: format!("random-{seed}"), measure, gamma, tolerance_scale: 1.0 }
}

/// `S1`–`S3` followed by ten seeded random scenarios.
pub fn standard_suite() -> Vec<Scenario> {
    let mut out = vec![s1(), s2(), s3()];
    out.extend((0..10).map(random_scenario));
    out
}
