//! Numerical re-verification of the contraction-rate inequalities behind
//! the correlation-decay argument.
//!
//! Every check is a dense uniform grid search (endpoints included) followed
//! by one refinement pass at a tenth of the step around the incumbent
//! maximum. Equality constraints are substituted away before gridding.
//! Results are numerical evidence at the stated resolution, not proofs.

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{expand, EstimateError, Estimator, Expansion};
use crate::instance::{Color, Instance, Vertex};
use crate::oracle::{Oracle, OracleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecayError {
    #[error("{name}: argument {value} outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("resolution must be positive and finite, got {0}")]
    Resolution(f64),
    #[error("unknown check {0:?}")]
    UnknownCase(String),
    #[error("bad threshold {0:?}")]
    BadThreshold(String),
}

/// A threshold as an exact ratio of integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Threshold {
    pub num: u64,
    pub den: u64,
}

impl Threshold {
    pub const fn new(num: u64, den: u64) -> Threshold {
        Threshold { num, den }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Parses `"p/q"` or a decimal such as `"0.90"`.
    pub fn parse(s: &str) -> Result<Threshold, DecayError> {
        let bad = || DecayError::BadThreshold(s.to_string());
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let num = p.trim().parse().map_err(|_| bad())?;
            let den: u64 = q.trim().parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            return Ok(Threshold::new(num, den));
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 15 || (int.is_empty() && frac.is_empty()) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        Ok(Threshold::new(int * den + frac, den))
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

pub const LAMBDA: Threshold = Threshold::new(9996, 10000);
pub const DEG1_L4_BOUND: Threshold = Threshold::new(3, 4);
pub const DEG1_L3_FIXED_BOUND: Threshold = Threshold::new(11, 13);
pub const JENSEN_KAPPA1: Threshold = Threshold::new(10195, 10000);
pub const JENSEN_KAPPA2: Threshold = Threshold::new(10181, 10000);
pub const JENSEN_KAPPA: Threshold = Threshold::new(1038, 1000);
pub const JENSEN_MOD_KAPPA1: Threshold = Threshold::new(1009, 1000);
pub const JENSEN_MOD_KAPPA2: Threshold = Threshold::new(1009, 1000);
pub const JENSEN_MOD_KAPPA: Threshold = Threshold::new(1019, 1000);
pub const RESOLVE3_BOUND: Threshold = Threshold::new(963, 1000);
pub const RESOLVE21_SIXTH_BOUND: Threshold = Threshold::new(9138, 10000);
pub const RESOLVE21_QUARTER_BOUND: Threshold = Threshold::new(9163, 10000);
pub const RESOLVE21_THIRTEENTH_BOUND: Threshold = Threshold::new(9102, 10000);
pub const RESOLVE21_D1_BOUND: Threshold = Threshold::new(9231, 10000);

const TOL: f64 = 1e-12;

fn check(name: &'static str, x: f64, lo: f64, hi: f64, domain: &'static str) -> Result<(), DecayError> {
    if x.is_finite() && x >= lo - TOL && x <= hi + TOL {
        Ok(())
    } else {
        Err(DecayError::Domain { name, value: x, domain })
    }
}

// --- potential -------------------------------------------------------------

/// `φ(x) = 2 ln x − 2 ln(1/2 − x)` on `(0, 1/2)`.
pub fn phi(x: f64) -> Result<f64, DecayError> {
    if x > 0.0 && x < 0.5 {
        Ok(2.0 * x.ln() - 2.0 * (0.5 - x).ln())
    } else {
        Err(DecayError::Domain { name: "phi", value: x, domain: "(0, 1/2)" })
    }
}

/// `Φ(x) = 1 / (x (1/2 − x))`, the derivative of `φ`.
pub fn big_phi(x: f64) -> Result<f64, DecayError> {
    if x > 0.0 && x < 0.5 {
        Ok(1.0 / (x * (0.5 - x)))
    } else {
        Err(DecayError::Domain { name: "big_phi", value: x, domain: "(0, 1/2)" })
    }
}

/// `1/Φ(x)` extended continuously to the closed interval (zero at both ends).
pub fn inv_big_phi(x: f64) -> f64 {
    x * (0.5 - x)
}

/// `M = 3/2 − √2 = sup_{[0,1/2]} 1/((1 − x) Φ(x))`.
pub fn m_constant() -> f64 {
    1.5 - std::f64::consts::SQRT_2
}

// --- degree-1 rates --------------------------------------------------------

/// Rate for a degree-1 vertex with a full list.
pub fn alpha_deg1_l4(x: f64) -> Result<f64, DecayError> {
    check("alpha_deg1_l4", x, 0.0, 0.5, "[0, 1/2]")?;
    Ok(deg1_l4(x))
}

fn deg1_l4(x: f64) -> f64 {
    3.0 * x * (1.0 - 2.0 * x) / ((1.0 - x) * (1.0 + 2.0 * x))
}

/// Rate for a 3-color list when the queried color's variable is pinned to 0.
pub fn alpha_deg1_l3_fixed(y: f64) -> Result<f64, DecayError> {
    check("alpha_deg1_l3_fixed", y, 1.0 / 13.0, 0.5, "[1/13, 1/2]")?;
    Ok(1.0 - 2.0 * y)
}

/// Rate for a 3-color list with both variables free.
pub fn alpha_deg1_l3(x: f64, y: f64) -> Result<f64, DecayError> {
    check("alpha_deg1_l3", x, 1.0 / 13.0, 0.5, "x in [1/13, 1/2]")?;
    check("alpha_deg1_l3", y, 0.0, 0.5, "y in [0, 1/2]")?;
    Ok(deg1_l3(x, y))
}

fn deg1_l3(x: f64, y: f64) -> f64 {
    (x * (0.5 - x) * (2.0 + y) + y * (0.5 - y) * (1.0 - x)) / ((1.0 - x) * (x + y / 2.0))
}

// --- degree-2 rates, first neighbor of degree 2 ----------------------------

/// `G_ξ(w, f) = (1 − f)/Φ(1 − w/(1 − f)) + 4Mξ · w/(1 − f)`.
pub fn g_xi(w: f64, f: f64, xi: f64) -> Result<f64, DecayError> {
    check("g_xi", f, 0.0, 0.5, "f in [0, 1/2]")?;
    check("g_xi", xi, 0.0, 1.0, "xi in [0, 1]")?;
    check("g_xi", w / (1.0 - f), 0.5, 1.0, "w/(1-f) in [1/2, 1]")?;
    Ok(g_raw(w, f, xi))
}

fn g_raw(w: f64, f: f64, xi: f64) -> f64 {
    let s = w / (1.0 - f);
    (1.0 - f) * inv_big_phi(1.0 - s) + 4.0 * m_constant() * xi * s
}

/// Symmetric rate when all `D_j ≥ 0`: `f1 + 3 f2 = 1`.
pub fn alpha_hat_case1(f1: f64, f2: f64, y1: f64, y2: f64) -> Result<f64, DecayError> {
    check("alpha_hat_case1", f1, 1.0 / 13.0, 0.5, "f1 in [1/13, 1/2]")?;
    check("alpha_hat_case1", f1 + 3.0 * f2, 1.0, 1.0, "f1 + 3 f2 = 1")?;
    check("alpha_hat_case1", y1, 0.0, 0.5, "y1 in [0, 1/2]")?;
    check("alpha_hat_case1", y2, 0.0, 0.5, "y2 in [0, 1/2]")?;
    Ok(hat_case1(f1, f2, y1, y2))
}

fn hat_case1(f1: f64, f2: f64, y1: f64, y2: f64) -> f64 {
    let m = m_constant();
    let a = (1.0 - f1) * (1.0 - y1) + 3.0 * (1.0 - f2) * (1.0 - y2);
    let big1 = (1.0 - f1) * (1.0 - y1) / a;
    let big2 = (1.0 - f2) * (1.0 - y2) / a;
    // Φ(F)·F = 1/(1/2 − F)
    let lead = 1.0 / (0.5 - big1);
    lead * ((1.0 - big1) * inv_big_phi(y1) / (1.0 - y1)
        + 3.0 * big2 * inv_big_phi(y2) / (1.0 - y2)
        + 12.0 * m * f1 * big2 / (1.0 - f2))
}

/// Non-symmetrized rate when all `D_j ≥ 0`, for `f, y ∈ [0,1/2]^4`.
pub fn alpha_case1(f: [f64; 4], y: [f64; 4]) -> f64 {
    let m = m_constant();
    let a: f64 = (0..4).map(|k| (1.0 - f[k]) * (1.0 - y[k])).sum();
    let big: Vec<f64> = (0..4).map(|k| (1.0 - f[k]) * (1.0 - y[k]) / a).collect();
    let mut inner = (1.0 - big[0]) * inv_big_phi(y[0]) / (1.0 - y[0]);
    for j in 1..4 {
        inner += big[j] * inv_big_phi(y[j]) / (1.0 - y[j]);
        inner += 4.0 * m * f[0] * big[j] / (1.0 - f[j]);
    }
    inner / (0.5 - big[0])
}

/// Averages the last three coordinates the way the symmetrization does:
/// `(f1, f̂2, y1, ŷ2)` with `3ŵ2 = Σ w_j`, `3f̂2 = Σ f_j`, `ŷ2 = 1 − ŵ2/(1 − f̂2)`.
pub fn symmetrize_case1(f: [f64; 4], y: [f64; 4]) -> (f64, f64, f64, f64) {
    let w: f64 = (1..4).map(|k| (1.0 - f[k]) * (1.0 - y[k])).sum::<f64>() / 3.0;
    let f2 = (f[1] + f[2] + f[3]) / 3.0;
    (f[0], f2, y[0], 1.0 - w / (1.0 - f2))
}

/// Non-symmetrized rate when `D_2 < 0`.
pub fn alpha_case2(f: [f64; 4], y: [f64; 4]) -> f64 {
    let m = m_constant();
    let a: f64 = (0..4).map(|k| (1.0 - f[k]) * (1.0 - y[k])).sum();
    let big: Vec<f64> = (0..4).map(|k| (1.0 - f[k]) * (1.0 - y[k]) / a).collect();
    let d2 = 1.0 / (1.0 - f[0]) - [0, 2, 3].iter().map(|&k| big[k] / (1.0 - f[k])).sum::<f64>();
    alpha_case1(f, y) - 4.0 * m * f[1] * d2 / (0.5 - big[0])
}

/// `D_2 = 1/(1 − f1) − Σ_{k≠2} F_k/(1 − f_k)`.
pub fn d2_sign_term(f: [f64; 4], y: [f64; 4]) -> f64 {
    let a: f64 = (0..4).map(|k| (1.0 - f[k]) * (1.0 - y[k])).sum();
    1.0 / (1.0 - f[0])
        - [0, 2, 3]
            .iter()
            .map(|&k| (1.0 - f[k]) * (1.0 - y[k]) / a / (1.0 - f[k]))
            .sum::<f64>()
}

/// `(f1, f2, f̂3, y1, y2, ŷ3)` averaging coordinates 3 and 4.
pub fn symmetrize_case2(f: [f64; 4], y: [f64; 4]) -> (f64, f64, f64, f64, f64, f64) {
    let w = ((1.0 - f[2]) * (1.0 - y[2]) + (1.0 - f[3]) * (1.0 - y[3])) / 2.0;
    let f3 = (f[2] + f[3]) / 2.0;
    (f[0], f[1], f3, y[0], y[1], 1.0 - w / (1.0 - f3))
}

/// Symmetric rate when `D_2 < 0`, exactly as symmetrized (before the
/// `f1 ≥ 1/13` relaxation of the `f2` term).
pub fn alpha_hat_case2_symmetric(f1: f64, f2: f64, f3: f64, y1: f64, y2: f64, y3: f64) -> f64 {
    let m = m_constant();
    let w1 = (1.0 - f1) * (1.0 - y1);
    let a = w1 + (1.0 - f2) * (1.0 - y2) + 2.0 * (1.0 - f3) * (1.0 - y3);
    let big1 = w1 / a;
    let p1 = inv_big_phi(y1) / (1.0 - y1) - 4.0 * m * f2 / (1.0 - f1);
    let p2 = (1.0 - f2) * inv_big_phi(y2) + 4.0 * m * f1 * (1.0 - y2);
    let p3 = 2.0 * (1.0 - f3) * inv_big_phi(y3) + 8.0 * m * (f1 + f2) * (1.0 - y3);
    (a * (1.0 - big1) * p1 + p2 + p3) / (a * (0.5 - big1))
}

/// Upper bound on the symmetric rate when `D_2 < 0`, with the `f2` term of
/// `P1` relaxed using `f1 ≥ 1/13`; `f1 + f2 + 2 f3 = 1`.
pub fn alpha_hat_case2(f1: f64, f2: f64, f3: f64, y1: f64, y2: f64, y3: f64) -> Result<f64, DecayError> {
    for (v, d) in [(f1, "f1 in [0, 1/2]"), (f2, "f2 in [0, 1/2]"), (f3, "f3 in [0, 1/2]")] {
        check("alpha_hat_case2", v, 0.0, 0.5, d)?;
    }
    for (v, d) in [(y1, "y1 in [0, 1/2]"), (y2, "y2 in [0, 1/2]"), (y3, "y3 in [0, 1/2]")] {
        check("alpha_hat_case2", v, 0.0, 0.5, d)?;
    }
    check("alpha_hat_case2", f1 + f2 + 2.0 * f3, 1.0, 1.0, "f1 + f2 + 2 f3 = 1")?;
    Ok(hat_case2(f1, f2, y1, y2, y3))
}

fn hat_case2(f1: f64, f2: f64, y1: f64, y2: f64, y3: f64) -> f64 {
    let m = m_constant();
    let w1 = (1.0 - f1) * (1.0 - y1);
    let a = w1 + (1.0 - f2) * (1.0 - y2) + (1.0 + f1 + f2) * (1.0 - y3);
    let a1 = a - w1;
    let p1 = inv_big_phi(y1) / (1.0 - y1) - 4.0 * m * f2 / (12.0 / 13.0);
    let p2 = (1.0 - f2) * inv_big_phi(y2) + 4.0 * f1 * m * (1.0 - y2);
    let p3 = (1.0 + f1 + f2) * inv_big_phi(y3) + 8.0 * m * (f1 + f2) * (1.0 - y3);
    2.0 * (a1 * p1 + p2 + p3) / (a1 - w1)
}

/// Boundary values of `f1` at which the case-2 bound is maximized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case2Branch {
    /// `f1 = (1 − f2)/6`
    F1Sixth,
    /// `f1 = (3/4 − f2)/4`
    F1Quarter,
    /// `f1 = 1/13`
    F1Thirteenth,
}

impl Case2Branch {
    pub fn f1(self, f2: f64) -> f64 {
        match self {
            Case2Branch::F1Sixth => (1.0 - f2) / 6.0,
            Case2Branch::F1Quarter => (0.75 - f2) / 4.0,
            Case2Branch::F1Thirteenth => 1.0 / 13.0,
        }
    }

    pub fn threshold(self) -> Threshold {
        match self {
            Case2Branch::F1Sixth => RESOLVE21_SIXTH_BOUND,
            Case2Branch::F1Quarter => RESOLVE21_QUARTER_BOUND,
            Case2Branch::F1Thirteenth => RESOLVE21_THIRTEENTH_BOUND,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Case2Branch::F1Sixth => "f1_sixth",
            Case2Branch::F1Quarter => "f1_quarter",
            Case2Branch::F1Thirteenth => "f1_thirteenth",
        }
    }
}

/// The case-2 bound with `f1` substituted per `branch`.
pub fn alpha_hat_case2_branch(branch: Case2Branch, f2: f64, y1: f64, y2: f64, y3: f64) -> f64 {
    hat_case2(branch.f1(f2), f2, y1, y2, y3)
}

// --- degree-2 rates, first neighbor of degree 1 ----------------------------

/// Symmetric rate for `d1 = 1`, `f1 = y1 = 0`, `D_2 < 0`; `f2 + 2 f3 = 1`.
pub fn alpha_hat_d1(f2: f64, f3: f64, y2: f64, y3: f64) -> Result<f64, DecayError> {
    check("alpha_hat_d1", f2, 1.0 / 13.0, 0.5, "f2 in [1/13, 1/2]")?;
    check("alpha_hat_d1", f2 + 2.0 * f3, 1.0, 1.0, "f2 + 2 f3 = 1")?;
    check("alpha_hat_d1", y2, 0.0, 6.0 / 13.0, "y2 in [0, 6/13]")?;
    check("alpha_hat_d1", y3, 0.0, 6.0 / 13.0, "y3 in [0, 6/13]")?;
    Ok(hat_d1(f2, y2, y3))
}

fn hat_d1(f2: f64, y2: f64, y3: f64) -> f64 {
    let m = m_constant();
    let a = 1.0 + (1.0 - f2) * (1.0 - y2) + (1.0 + f2) * (1.0 - y3);
    let num = -2.0 * m * f2 * (a - 1.0)
        + (1.0 - f2) * inv_big_phi(y2)
        + (1.0 + f2) * inv_big_phi(y3)
        + 4.0 * m * f2 * (1.0 - y3);
    num / (a / 2.0 - 1.0)
}

/// Rate for `d1 = 1`, `f1 = y1 = 0`, `D_2 > 0`, all `y_j ≤ 6/13`;
/// `f2 + f3 + f4 = 1`.
pub fn alpha_d1_positive(f: [f64; 3], y: [f64; 3]) -> f64 {
    let m = m_constant();
    let a = 1.0 + (0..3).map(|k| (1.0 - f[k]) * (1.0 - y[k])).sum::<f64>();
    let num = (0..3).map(|k| (1.0 - f[k]) * y[k] * (0.5 - y[k])).sum::<f64>()
        + 2.0 * m * f[0] * (a - 3.0 + y[1] + y[2]);
    num / (a / 2.0 - 1.0)
}

/// The quadratic whose negativity on `[0, 6/13]` closes the `D_2 > 0` case.
pub fn d1_positive_quadratic(y2: f64) -> f64 {
    let m = m_constant();
    let l = LAMBDA.value();
    9.0 / 338.0 + 3.0 * m / 13.0 - 2.0 * l / 13.0 + (0.25 - m / 2.0 + l / 4.0) * y2 - y2 * y2 / 2.0
}

/// `D_2 < 0` with some `y_j = 1/2`, after taking `y2 = 1/2`:
/// `4Mf2 · (f3(1/2−y3) + f4(1/2−y4)) / ((1/2−y3)(1−f3) + (1/2−y4)(1−f4))`.
/// `None` at the removable singularity `y3 = y4 = 1/2`.
pub fn d1_negative_half_branch(f: [f64; 3], y3: f64, y4: f64) -> Option<f64> {
    let den = (0.5 - y3) * (1.0 - f[1]) + (0.5 - y4) * (1.0 - f[2]);
    (den > TOL).then(|| 4.0 * m_constant() * f[0] * (f[1] * (0.5 - y3) + f[2] * (0.5 - y4)) / den)
}

// --- grid search -----------------------------------------------------------

fn axis(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let k = (((hi - lo) / h) - 1e-9).ceil().max(1.0) as usize;
    (0..=k).map(|t| lo + (hi - lo) * t as f64 / k as f64).collect()
}

#[derive(Clone, Debug)]
struct Found {
    max: f64,
    argmax: Vec<f64>,
    key: (usize, Vec<usize>),
    points: u64,
    skipped: u64,
}

impl Found {
    fn empty() -> Found {
        Found {
            max: f64::NEG_INFINITY,
            argmax: Vec::new(),
            key: (usize::MAX, Vec::new()),
            points: 0,
            skipped: 0,
        }
    }

    fn merge(mut self, other: Found) -> Found {
        let points = self.points + other.points;
        let skipped = self.skipped + other.skipped;
        if other.max > self.max || (other.max == self.max && other.key < self.key) {
            self = other;
        }
        self.points = points;
        self.skipped = skipped;
        self
    }
}

/// Maximizes `f` over `outer × inner[0] × inner[1] × ...`. `f` returns
/// `None` for points outside the feasible set. Deterministic: ties go to
/// the lexicographically smallest grid index.
fn search<F>(outer: &[Vec<f64>], inner: &[Vec<f64>], f: &F) -> Found
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    outer
        .par_iter()
        .enumerate()
        .map(|(o, head)| {
            let mut best = Found::empty();
            let mut idx = vec![0usize; inner.len()];
            let mut point: Vec<f64> = head.iter().copied().chain(inner.iter().map(|a| a[0])).collect();
            let h = head.len();
            if inner.iter().any(|a| a.is_empty()) {
                return best;
            }
            loop {
                best.points += 1;
                match f(&point) {
                    Some(v) if v.is_finite() => {
                        if v > best.max {
                            best.max = v;
                            best.argmax = point.clone();
                            best.key = (o, idx.clone());
                        }
                    }
                    _ => best.skipped += 1,
                }
                // odometer
                let mut d = inner.len();
                loop {
                    if d == 0 {
                        return best;
                    }
                    d -= 1;
                    idx[d] += 1;
                    if idx[d] < inner[d].len() {
                        point[h + d] = inner[d][idx[d]];
                        break;
                    }
                    idx[d] = 0;
                    point[h + d] = inner[d][0];
                }
            }
        })
        .reduce(Found::empty, Found::merge)
}

/// Variables and box of one check.
struct Domain {
    names: Vec<&'static str>,
    bounds: Vec<(f64, f64)>,
    /// How many leading coordinates form the outer (parallel) loop.
    outer_dims: usize,
    /// Drops infeasible outer tuples before the inner loops run.
    outer_filter: Option<fn(&[f64]) -> bool>,
}

fn grid_max<F>(domain: &Domain, h: f64, f: &F) -> (Found, f64)
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let axes: Vec<Vec<f64>> = domain.bounds.iter().map(|&(lo, hi)| axis(lo, hi, h)).collect();
    let coarse = run_axes(&axes, domain, f);
    if coarse.argmax.is_empty() {
        return (coarse, 0.0);
    }
    let fine_h = h / 10.0;
    let fine_axes: Vec<Vec<f64>> = domain
        .bounds
        .iter()
        .zip(&coarse.argmax)
        .map(|(&(lo, hi), &c)| axis((c - h).max(lo), (c + h).min(hi), fine_h))
        .collect();
    let fine = run_axes(&fine_axes, domain, f);
    let gain = (fine.max - coarse.max).max(0.0);
    let mut best = if fine.max > coarse.max { fine.clone() } else { coarse.clone() };
    best.points = coarse.points + fine.points;
    best.skipped = coarse.skipped + fine.skipped;
    (best, gain)
}

fn run_axes<F>(axes: &[Vec<f64>], domain: &Domain, f: &F) -> Found
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let outer_dims = domain.outer_dims;
    let mut outer: Vec<Vec<f64>> = vec![Vec::new()];
    for a in &axes[..outer_dims] {
        outer = outer
            .into_iter()
            .flat_map(|p| {
                a.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    if let Some(keep) = domain.outer_filter {
        outer.retain(|p| keep(p));
    }
    search(&outer, &axes[outer_dims..], f)
}

// --- reports ---------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub name: String,
    /// Exact threshold as `"p/q"`, or a symbolic name such as `"2M"`.
    pub threshold: String,
    pub threshold_value: f64,
    /// Whether the inequality is strict (`<`) rather than `≤`.
    pub strict: bool,
    pub max_found: f64,
    pub argmax: Vec<(String, f64)>,
    pub resolution: f64,
    pub points: u64,
    /// Grid points outside the feasible set or at removable singularities.
    pub skipped: u64,
    /// Increase of the maximum during refinement: a rough measure of how
    /// far the coarse grid was from the local optimum.
    pub slack: f64,
    pub pass: bool,
    pub note: String,
}

impl AlphaReport {
    fn new(name: &str, threshold: String, value: f64, strict: bool, h: f64) -> AlphaReport {
        AlphaReport {
            name: name.to_string(),
            threshold,
            threshold_value: value,
            strict,
            max_found: f64::NAN,
            argmax: Vec::new(),
            resolution: h,
            points: 0,
            skipped: 0,
            slack: 0.0,
            pass: false,
            note: format!("numerical evidence at resolution {h}"),
        }
    }

    fn decide(&mut self) {
        self.pass = self.max_found.is_finite()
            && if self.strict {
                self.max_found < self.threshold_value
            } else {
                self.max_found <= self.threshold_value + TOL
            };
    }
}

impl fmt::Display for AlphaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.argmax.iter().map(|(n, v)| format!("{n}={v:.6}")).collect();
        write!(
            f,
            "{:<28} {} max={:.10} {} {} ({}) at [{}]",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.max_found,
            if self.strict { "<" } else { "<=" },
            self.threshold,
            self.threshold_value,
            args.join(", ")
        )
    }
}

fn run_check<F>(name: &str, domain: Domain, limit: Limit, h: f64, f: F) -> AlphaReport
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let mut report = AlphaReport::new(name, limit.label, limit.value, limit.strict, h);
    let (found, gain) = grid_max(&domain, h, &f);
    report.max_found = found.max;
    report.argmax = domain
        .names
        .iter()
        .zip(&found.argmax)
        .map(|(n, &v)| (n.to_string(), v))
        .collect();
    report.points = found.points;
    report.skipped = found.skipped;
    report.slack = gain;
    report.decide();
    report
}

#[derive(Clone, Debug)]
struct Limit {
    label: String,
    value: f64,
    strict: bool,
}

impl From<Threshold> for Limit {
    fn from(t: Threshold) -> Limit {
        Limit { label: t.to_string(), value: t.value(), strict: false }
    }
}

fn two_m() -> Limit {
    Limit { label: "2M".to_string(), value: 2.0 * m_constant(), strict: false }
}

fn simple(names: &[&'static str], bounds: &[(f64, f64)]) -> Domain {
    Domain {
        names: names.to_vec(),
        bounds: bounds.to_vec(),
        outer_dims: 1,
        outer_filter: None,
    }
}

const THIRTEENTH: f64 = 1.0 / 13.0;
const SIX_THIRTEENTHS: f64 = 6.0 / 13.0;

/// Names accepted by [`verify_case`], in execution order.
pub const CASES: &[&str] = &[
    "deg1-l4",
    "deg1-l3-fixed",
    "deg1-l3",
    "jensen",
    "jensen_mod",
    "resolve3+",
    "resolve2+1-",
    "resolve2+1-d1",
    "d1-positive",
];

/// Options for a verification run.
#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Replaces the threshold of the named report (negative controls).
    pub threshold_overrides: Vec<(String, Threshold)>,
}

impl VerifyOptions {
    fn limit(&self, report: &str, default: Limit) -> Limit {
        match self.threshold_overrides.iter().find(|(n, _)| n == report) {
            Some((_, t)) => Limit { strict: default.strict, ..Limit::from(*t) },
            None => default,
        }
    }
}

/// Runs one named check (possibly several reports).
pub fn verify_case(name: &str, resolution: f64, opts: &VerifyOptions) -> Result<Vec<AlphaReport>, DecayError> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(DecayError::Resolution(resolution));
    }
    let h = resolution;
    let lim = |report: &str, t: Limit| opts.limit(report, t);
    let reports = match name {
        "deg1-l4" => vec![run_check(
            "deg1-l4",
            simple(&["x"], &[(0.0, 0.5)]),
            lim("deg1-l4", DEG1_L4_BOUND.into()),
            h,
            |p| Some(deg1_l4(p[0])),
        )],
        "deg1-l3-fixed" => vec![run_check(
            "deg1-l3-fixed",
            simple(&["y"], &[(THIRTEENTH, 0.5)]),
            lim("deg1-l3-fixed", DEG1_L3_FIXED_BOUND.into()),
            h,
            |p| Some(1.0 - 2.0 * p[0]),
        )],
        "deg1-l3" => vec![run_check(
            "deg1-l3",
            simple(&["x", "y"], &[(THIRTEENTH, 0.5), (0.0, 0.5)]),
            lim("deg1-l3", LAMBDA.into()),
            h,
            |p| Some(deg1_l3(p[0], p[1])),
        )],
        "jensen" => jensen_reports("jensen", THIRTEENTH, 1.0, [JENSEN_KAPPA1, JENSEN_KAPPA2, JENSEN_KAPPA], h, opts),
        "jensen_mod" => jensen_reports(
            "jensen_mod",
            0.0,
            0.25,
            [JENSEN_MOD_KAPPA1, JENSEN_MOD_KAPPA2, JENSEN_MOD_KAPPA],
            h,
            opts,
        ),
        "resolve3+" => vec![run_check(
            "resolve3+",
            simple(&["f1", "y1", "y2"], &[(THIRTEENTH, 0.5), (0.0, 0.5), (0.0, 0.5)]),
            lim("resolve3+", RESOLVE3_BOUND.into()),
            h,
            |p| Some(hat_case1(p[0], (1.0 - p[0]) / 3.0, p[1], p[2])),
        )],
        "resolve2+1-" => [Case2Branch::F1Sixth, Case2Branch::F1Quarter, Case2Branch::F1Thirteenth]
            .into_iter()
            .map(|b| {
                let name = format!("resolve2+1-/{}", b.label());
                run_check(
                    &name,
                    simple(&["f2", "y1", "y2", "y3"], &[(0.0, 0.5), (0.0, 0.5), (0.0, 0.5), (0.0, 0.5)]),
                    lim(&name, b.threshold().into()),
                    h,
                    move |p| {
                        let f1 = b.f1(p[0]);
                        let w1 = (1.0 - f1) * (1.0 - p[1]);
                        let a1 = (1.0 - p[0]) * (1.0 - p[2]) + (1.0 + f1 + p[0]) * (1.0 - p[3]);
                        (a1 - w1 > 0.0).then(|| hat_case2(f1, p[0], p[1], p[2], p[3]))
                    },
                )
            })
            .collect(),
        "resolve2+1-d1" => vec![run_check(
            "resolve2+1-d1",
            simple(&["f2", "y2", "y3"], &[(THIRTEENTH, 0.5), (0.0, SIX_THIRTEENTHS), (0.0, SIX_THIRTEENTHS)]),
            lim("resolve2+1-d1", RESOLVE21_D1_BOUND.into()),
            h,
            |p| Some(hat_d1(p[0], p[1], p[2])),
        )],
        "d1-positive" => d1_positive_reports(h, opts),
        other => return Err(DecayError::UnknownCase(other.to_string())),
    };
    Ok(reports)
}

fn jensen_reports(
    name: &str,
    f_lo: f64,
    xi: f64,
    [k1, k2, k]: [Threshold; 3],
    h: f64,
    opts: &VerifyOptions,
) -> Vec<AlphaReport> {
    // Grid in (f, s) with s = w/(1 − f) ∈ [1/2, 1], which is the stated
    // constraint on w solved for w.
    let dom = || simple(&["f1", "s1", "f2", "s2"], &[(f_lo, 0.5), (0.5, 1.0), (f_lo, 0.5), (0.5, 1.0)]);
    let g = move |w: f64, f: f64| g_raw(w, f, xi);
    let two_point = move |p: &[f64]| {
        let (f1, f2) = (p[0], p[2]);
        let (w1, w2) = (p[1] * (1.0 - f1), p[3] * (1.0 - f2));
        Some((g(w1, f1) + g(w2, f2)) / (2.0 * g((w1 + w2) / 2.0, (f1 + f2) / 2.0)))
    };
    let weighted = move |p: &[f64]| {
        let (f1, f2) = (p[0], p[2]);
        let (w1, w2) = (p[1] * (1.0 - f1), p[3] * (1.0 - f2));
        Some((g(w1, f1) / 3.0 + 2.0 * g(w2, f2) / 3.0) / g((w1 + 2.0 * w2) / 3.0, (f1 + 2.0 * f2) / 3.0))
    };
    let n1 = format!("{name}/kappa1");
    let n2 = format!("{name}/kappa2");
    let nk = format!("{name}/kappa1*kappa2");
    let r1 = run_check(&n1, dom(), opts.limit(&n1, k1.into()), h, two_point);
    let r2 = run_check(&n2, dom(), opts.limit(&n2, k2.into()), h, weighted);
    let mut rk = AlphaReport::new(&nk, k.to_string(), k.value(), false, h);
    // The composite is an exact integer comparison of the two constants.
    rk.max_found = k1.value() * k2.value();
    rk.pass = (k1.num as u128) * (k2.num as u128) * (k.den as u128) <= (k.num as u128) * (k1.den as u128) * (k2.den as u128);
    rk.note = format!("exact: {k1} * {k2} <= {k}");
    vec![r1, r2, rk]
}

fn d1_positive_reports(h: f64, opts: &VerifyOptions) -> Vec<AlphaReport> {
    let mut out = Vec::new();
    let name = "d1-positive/quadratic";
    out.push(run_check(
        name,
        simple(&["y2"], &[(0.0, SIX_THIRTEENTHS)]),
        opts.limit(name, Limit { label: "0".into(), value: 0.0, strict: true }),
        h,
        |p| Some(d1_positive_quadratic(p[0])),
    ));

    // f2 + f3 + f4 = 1, all ≤ 1/2; (f3, y3) and (f4, y4) are symmetric, so
    // only f3 ≤ f4 is searched.
    fn feasible(f2: f64, f3: f64) -> Option<f64> {
        let f4 = 1.0 - f2 - f3;
        ((-TOL..=0.5 + TOL).contains(&f4) && f3 <= f4 + TOL).then_some(f4.max(0.0))
    }
    let name = "d1-positive/alpha";
    out.push(run_check(
        name,
        Domain {
            names: vec!["f2", "f3", "y2", "y3", "y4"],
            bounds: vec![(0.0, 0.5), (0.0, 0.5), (0.0, SIX_THIRTEENTHS), (0.0, SIX_THIRTEENTHS), (0.0, SIX_THIRTEENTHS)],
            outer_dims: 2,
            outer_filter: Some(|p| feasible(p[0], p[1]).is_some()),
        },
        opts.limit(name, LAMBDA.into()),
        h,
        |p| feasible(p[0], p[1]).map(|f4| alpha_d1_positive([p[0], p[1], f4], [p[2], p[3], p[4]])),
    ));

    let name = "d1-positive/half";
    out.push(run_check(
        name,
        simple(&["f2"], &[(0.0, 0.5)]),
        opts.limit(name, two_m()),
        h,
        |p| Some(4.0 * m_constant() * p[0]),
    ));

    let name = "d1-negative/half";
    out.push(run_check(
        name,
        Domain {
            names: vec!["f2", "f3", "y3", "y4"],
            bounds: vec![(0.0, 0.5), (0.0, 0.5), (0.0, 0.5), (0.0, 0.5)],
            outer_dims: 2,
            outer_filter: Some(|p| (-TOL..=0.5 + TOL).contains(&(1.0 - p[0] - p[1]))),
        },
        opts.limit(name, two_m()),
        h,
        move |p| {
            let f4 = 1.0 - p[0] - p[1];
            if !(-TOL..=0.5 + TOL).contains(&f4) {
                return None;
            }
            d1_negative_half_branch([p[0], p[1], f4.max(0.0)], p[2], p[3])
        },
    ));
    out
}

/// Runs every check and appends the aggregate bound on the contraction
/// rate, which must stay at most λ.
pub fn verify_all(resolution: f64, opts: &VerifyOptions) -> Result<Vec<AlphaReport>, DecayError> {
    let mut reports = Vec::new();
    for case in CASES {
        reports.extend(verify_case(case, resolution, opts)?);
    }
    reports.push(aggregate(&reports, resolution, opts));
    Ok(reports)
}

fn found(reports: &[AlphaReport], name: &str) -> f64 {
    reports
        .iter()
        .find(|r| r.name == name)
        .map_or(f64::NAN, |r| r.max_found)
}

/// Combines the per-case maxima the way the case analysis does: the
/// symmetrized bounds are scaled by the Jensen constants.
fn aggregate(reports: &[AlphaReport], h: f64, opts: &VerifyOptions) -> AlphaReport {
    let branches = ["resolve2+1-/f1_sixth", "resolve2+1-/f1_quarter", "resolve2+1-/f1_thirteenth"]
        .iter()
        .map(|n| found(reports, n))
        .fold(f64::NEG_INFINITY, f64::max);
    let two_m = 2.0 * m_constant();
    let parts = [
        ("deg1-l4", found(reports, "deg1-l4")),
        ("deg1-l3-fixed", found(reports, "deg1-l3-fixed")),
        ("deg1-l3", found(reports, "deg1-l3")),
        ("kappa*resolve3+", JENSEN_KAPPA.value() * found(reports, "resolve3+")),
        ("kappa*resolve2+1-", JENSEN_KAPPA.value() * branches),
        ("kappa_mod*resolve2+1-d1", JENSEN_MOD_KAPPA.value() * found(reports, "resolve2+1-d1")),
        ("d1-positive/alpha", found(reports, "d1-positive/alpha")),
        ("d1-positive/half", found(reports, "d1-positive/half")),
        ("d1-negative/half", found(reports, "d1-negative/half")),
        ("2M", two_m),
    ];
    let limit = opts.limit("meanvalue", LAMBDA.into());
    let mut r = AlphaReport::new("meanvalue", limit.label, limit.value, false, h);
    let (arg, max) = parts
        .iter()
        .fold(("", f64::NEG_INFINITY), |acc, &(n, v)| if v > acc.1 || v.is_nan() { (n, v) } else { acc });
    r.max_found = max;
    r.argmax = parts.iter().map(|&(n, v)| (n.to_string(), v)).collect();
    r.note = format!("aggregate of per-case maxima; largest term {arg}; numerical evidence at resolution {h}");
    let all_pass = reports.iter().all(|x| x.pass);
    r.decide();
    r.pass &= all_pass;
    r
}

// --- empirical one-level contraction ---------------------------------------

/// One color's one-level comparison of the estimator against the truth:
/// the root estimate combines child estimates, the root truth is exact,
/// and `child_gap` is the largest `|φ(est) − φ(truth)|` over child
/// operands whose estimate and truth both lie strictly inside `(0, 1/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionSample {
    pub color: Color,
    pub estimate: f64,
    pub truth: f64,
    pub root_gap: Option<f64>,
    pub child_gap: f64,
}

impl ContractionSample {
    /// Whether `|Δφ(root)| ≤ λ·child_gap + tol`; vacuous on boundary roots.
    pub fn contracts(&self, tol: f64) -> bool {
        self.root_gap.is_none_or(|g| g <= LAMBDA.value() * self.child_gap + tol)
    }
}

#[derive(Debug, Error)]
pub enum ContractionError {
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn interior(p: &BigRational) -> bool {
    p.is_positive() && *p < BigRational::new(1.into(), 2.into())
}

fn phi_exact(p: &BigRational) -> f64 {
    phi(p.to_f64().unwrap_or(f64::NAN)).unwrap_or(f64::NAN)
}

/// Measures one level of the recursion at `(inst, v)` with the children
/// evaluated at their own depth. Returns `None` when `(inst, v)` is a leaf
/// at this depth. Exact arithmetic throughout; only `φ` is taken in floats.
pub fn one_level_contraction(
    inst: &Instance,
    v: Vertex,
    depth: u32,
    oracle: &Oracle,
) -> Result<Option<Vec<ContractionSample>>, ContractionError> {
    let Expansion::Step(step) = expand(inst, v, depth)? else {
        return Ok(None);
    };
    let est = Estimator::<BigRational>::new(true, false);
    let child_est = est.eval_children(&step, depth)?;
    let child_truth: Vec<[BigRational; 4]> = step
        .queries
        .iter()
        .map(|q| oracle.marginals(&q.instance, q.vertex))
        .collect::<Result<_, _>>()?;
    let root_est = step.combine(&child_est)?;
    let root_truth = oracle.marginals(inst, v)?;
    let child_gap = step
        .operands()
        .into_iter()
        .filter_map(|(k, c)| {
            let (e, t) = (&child_est[k][c.index()], &child_truth[k][c.index()]);
            (interior(e) && interior(t)).then(|| (phi_exact(e) - phi_exact(t)).abs())
        })
        .fold(0.0, f64::max);
    Ok(Some(
        Color::ALL
            .iter()
            .map(|&c| {
                let (e, t) = (&root_est[c.index()], &root_truth[c.index()]);
                ContractionSample {
                    color: c,
                    estimate: e.to_f64().unwrap_or(f64::NAN),
                    truth: t.to_f64().unwrap_or(f64::NAN),
                    root_gap: (interior(e) && interior(t)).then(|| (phi_exact(e) - phi_exact(t)).abs()),
                    child_gap,
                }
            })
            .collect(),
    ))
}
