//! Truncated Calderón–Zygmund operators on discrete measures and the
//! empirical weak-(1,1) statistic.
//!
//! This is the only floating-point module. Distances are irrational, so
//! kernels are evaluated in `f64` and every value carries a first-order
//! rounding bound. The truncation test `|x − y| > ε` is decided exactly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::measure::{Atom, DiscreteMeasure};
use crate::rational::Rational;

/// Unit roundoff of `f64`.
const U: f64 = f64::EPSILON / 2.0;

/// Relative nudge applied to thresholds so that `|v| > t` counts the atom at `t`.
pub const THRESHOLD_NUDGE: f64 = 1.0 / (1u64 << 20) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `(x₁ − y₁)/|x − y|²` in the plane: the real part of the Cauchy kernel.
    CauchyReal,
    /// `(x₁ − y₁)/|x − y|^{d+1}`.
    RieszD,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cauchy_real" => Ok(KernelKind::CauchyReal),
            "riesz_d" => Ok(KernelKind::RieszD),
            _ => Err(Error::Parse(format!("unknown kernel {s:?} (expected cauchy_real or riesz_d)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
    pub growth_dim: f64,
    pub smoothness: Rational,
    /// `|K(x,y)|·|x − y|^d <= size_constant`.
    pub size_constant: f64,
}

impl Kernel {
    pub fn cauchy_real() -> Self {
        Kernel { kind: KernelKind::CauchyReal, growth_dim: 1.0, smoothness: Rational::one(), size_constant: 1.0 }
    }

    pub fn riesz(d: &Rational) -> Result<Self> {
        if !d.is_positive() {
            return Err(Error::InvalidArgument(format!("growth dimension must be positive, got {d}")));
        }
        Ok(Kernel { kind: KernelKind::RieszD, growth_dim: d.to_f64(), smoothness: Rational::one(), size_constant: 1.0 })
    }

    /// The kernel of `kind` for a measure of dimension `dim` and growth `d`.
    pub fn for_measure(kind: KernelKind, dim: usize, d: &Rational) -> Result<Self> {
        match kind {
            KernelKind::CauchyReal if dim != 2 => Err(Error::DimensionMismatch { expected: 2, found: dim }),
            KernelKind::CauchyReal => Ok(Kernel::cauchy_real()),
            KernelKind::RieszD => Kernel::riesz(d),
        }
    }

    /// Relative error bound of one evaluation, in units of `U`.
    fn rel_ulps(&self, dim: usize) -> f64 {
        // dist² accumulates dim + 1 roundings, the power and quotient a few more
        let power = match self.kind {
            KernelKind::CauchyReal => 2.0,
            KernelKind::RieszD => 4.0 + (self.growth_dim + 1.0) * 2.0,
        };
        dim as f64 + 4.0 + power
    }
}

/// `K(x,y)` and an absolute error bound. `x` and `y` must differ.
pub fn kernel_eval(ker: &Kernel, x: &Point, y: &Point) -> Result<(f64, f64)> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    if x == y {
        return Err(Error::InvalidArgument(format!("kernel is singular at x = y = {x}")));
    }
    let xf: Vec<f64> = x.0.iter().map(Rational::to_f64).collect();
    let yf: Vec<f64> = y.0.iter().map(Rational::to_f64).collect();
    Ok(eval_f64(ker, &xf, &yf))
}

fn eval_f64(ker: &Kernel, x: &[f64], y: &[f64]) -> (f64, f64) {
    let diff0 = x[0] - y[0];
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let v = match ker.kind {
        KernelKind::CauchyReal => diff0 / d2,
        KernelKind::RieszD => diff0 / d2.powf((ker.growth_dim + 1.0) / 2.0),
    };
    (v, v.abs() * ker.rel_ulps(x.len()) * U)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncated {
    pub values: Vec<f64>,
    /// Absolute error bound per value.
    pub error_bounds: Vec<f64>,
}

/// `T_ε f(x_i) = Σ_{|x_i − x_j| > ε} K(x_i, x_j) f(x_j) μ_j`.
///
/// Uses the densities stored in `mu`. Coordinates are compared in `f64` and
/// pairs within rounding distance of the cutoff are resolved in exact
/// arithmetic.
pub fn apply_truncated(mu: &DiscreteMeasure, ker: &Kernel, eps: &Rational) -> Result<Truncated> {
    if !eps.is_positive() {
        return Err(Error::InvalidArgument(format!("truncation ε must be positive, got {eps}")));
    }
    let atoms = mu.atoms();
    let coords: Vec<Vec<f64>> = atoms.iter().map(|a| a.x.0.iter().map(Rational::to_f64).collect()).collect();
    let weights: Vec<f64> = atoms.iter().map(|a| (&a.f * &a.mass).to_f64()).collect();
    let eps2_exact = eps * eps;
    let eps2 = eps2_exact.to_f64();
    let n = atoms.len();
    let per_term = |i: usize, j: usize| -> Option<(f64, f64)> {
        let d2: f64 = coords[i].iter().zip(&coords[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        let far = if (d2 - eps2).abs() <= 1e-9 * eps2.max(d2) {
            atoms[i].x.dist2(&atoms[j].x) > eps2_exact
        } else {
            d2 > eps2
        };
        if !far {
            return None;
        }
        let (k, err) = eval_f64(ker, &coords[i], &coords[j]);
        Some((k * weights[j], (err + k.abs() * 2.0 * U) * weights[j].abs()))
    };
    let (values, error_bounds) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sum = 0.0;
            let mut err = 0.0;
            let mut abs_sum = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                if let Some((t, e)) = per_term(i, j) {
                    sum += t;
                    err += e;
                    abs_sum += t.abs();
                }
            }
            // recursive summation: each partial sum adds one rounding
            (sum, err + n as f64 * U * abs_sum)
        })
        .unzip();
    Ok(Truncated { values, error_bounds })
}

/// `max_t t·μ(|v| > t(1 − 2^{−20}))/‖f‖₁` over `t ∈ {|v_i|}`.
pub fn weak11_statistic(mu: &DiscreteMeasure, values: &[f64], f_l1: f64) -> Result<f64> {
    if values.len() != mu.len() {
        return Err(Error::InvalidArgument(format!("{} values for {} atoms", values.len(), mu.len())));
    }
    if !(f_l1 > 0.0) {
        return Err(Error::InvalidArgument(format!("‖f‖₁ must be positive, got {f_l1}")));
    }
    let mut pairs: Vec<(f64, f64)> = values.iter().zip(mu.atoms()).map(|(v, a)| (v.abs(), a.mass.to_f64())).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    // tail[i] = mass of the i largest |v|
    let mut tail = Vec::with_capacity(pairs.len() + 1);
    tail.push(0.0);
    for (_, m) in &pairs {
        tail.push(tail.last().unwrap() + m);
    }
    let mut best = 0.0f64;
    for &(t, _) in &pairs {
        if t == 0.0 {
            break;
        }
        let cut = t * (1.0 - THRESHOLD_NUDGE);
        let count = pairs.partition_point(|&(v, _)| v > cut);
        best = best.max(t * tail[count] / f_l1);
    }
    Ok(best)
}

/// Default truncation: half the smallest sup-norm separation, so every pair
/// of distinct atoms is kept.
pub fn default_eps(mu: &DiscreteMeasure) -> Rational {
    mu.default_r_min()
}

/// Atoms on the graph of a random piecewise-linear function `[0, 1] → R`
/// with slopes in `[−lipschitz, lipschitz]`, masses equal to the local
/// horizontal spacing and densities `k/8`, `k ∈ 0..=8`.
///
/// Gaps between consecutive abscissae are `(1 + u)/(8·size)` with `u`
/// uniform in `0..8`; slopes are multiples of `1/4`.
pub fn lipschitz_graph_measure<R: Rng>(rng: &mut R, size: usize, lipschitz: u32) -> Result<DiscreteMeasure> {
    if size < 2 {
        return Err(Error::InvalidArgument("a graph measure needs at least two atoms".into()));
    }
    let denom = 8 * size as i64;
    let mut xs = Vec::with_capacity(size);
    let mut x = Rational::zero();
    for _ in 0..size {
        xs.push(x.clone());
        x += Rational::ratio(1 + rng.gen_range(0..8), denom);
    }
    let span = xs.last().unwrap().clone();
    let knots = 8i64;
    let steps = 4 * lipschitz as i64;
    let slopes: Vec<Rational> = (0..knots).map(|_| Rational::ratio(rng.gen_range(-steps..=steps), 4)).collect();
    let knot_width = &span / Rational::integer(knots);
    let ys: Vec<Rational> = xs
        .iter()
        .map(|x| {
            let mut y = Rational::zero();
            let mut left = Rational::zero();
            for s in &slopes {
                let right = &left + &knot_width;
                let seg = if *x >= right { knot_width.clone() } else { (x - &left).max(Rational::zero()) };
                y += s * seg;
                left = right;
            }
            y
        })
        .collect();
    let atoms = (0..size)
        .map(|i| {
            let lo = if i == 0 { &xs[0] } else { &xs[i - 1] };
            let hi = if i + 1 == size { &xs[i] } else { &xs[i + 1] };
            let mut mass = (hi - lo).half();
            if mass.is_zero() {
                mass = Rational::ratio(1, denom);
            }
            Atom { x: Point(vec![xs[i].clone(), ys[i].clone()]), mass, f: Rational::ratio(rng.gen_range(0..=8), 8) }
        })
        .collect();
    DiscreteMeasure::new(2, Rational::one(), atoms)
}
