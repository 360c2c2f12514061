//! Density of a sum of independent variables by direct numerical convolution.
//!
//! Pointwise values come from adaptive quadrature over the overlap of the two
//! supports, split at every knot of either input and integrated in the
//! `sin²` endpoint variable so `1/√` edges stay integrable. The tabulated
//! result stores values at cosine-clustered nodes inside each knot segment
//! and interpolates with local cubics in the angle variable, which keeps
//! `√`-type kinks at segment edges smooth.

use std::f64::consts::PI;
use std::sync::Arc;

use super::piecewise::{Branch, BranchSource, PiecewisePdf};
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

const POINT_TOLERANCE: Tolerance = Tolerance {
    absolute: 1e-14,
    relative: 1e-12,
    max_intervals: 200,
};

/// `∫ f_a(x) f_b(s - x) dx` at a single abscissa.
pub fn convolve_at(f_a: &PiecewisePdf, f_b: &PiecewisePdf, s: f64) -> f64 {
    let (a_lo, a_hi) = f_a.support();
    let (b_lo, b_hi) = f_b.support();
    let lo = a_lo.max(s - b_hi);
    let hi = a_hi.min(s - b_lo);
    if !(hi > lo) {
        return 0.0;
    }
    let mut points = vec![lo, hi];
    points.extend(f_a.knots().iter().copied().filter(|k| *k > lo && *k < hi));
    points.extend(f_b.knots().iter().map(|k| s - k).filter(|k| *k > lo && *k < hi));
    quadrature::integrate_pieces_singular(|x| f_a.eval(x) * f_b.eval(s - x), &points, POINT_TOLERANCE).value
}

/// Values at `θ_k = kπ/m`, `x_k = lo + (hi - lo)·sin²(θ_k/2)`, `k = 0..=m`.
#[derive(Debug)]
struct AngleTable {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl AngleTable {
    fn node(lo: f64, hi: f64, k: usize, m: usize) -> f64 {
        if k == m {
            return hi;
        }
        let s = (0.5 * PI * k as f64 / m as f64).sin();
        lo + (hi - lo) * s * s
    }

    fn build(lo: f64, hi: f64, m: usize, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..=m).map(|k| f(Self::node(lo, hi, k, m))).collect();
        Self { lo, hi, values }
    }

    fn eval(&self, x: f64) -> f64 {
        let m = self.values.len() - 1;
        let r = ((x - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0);
        // x = lo + (hi-lo)·sin²(θ/2)  ⇒  θ = 2·asin(√r)
        let theta = 2.0 * r.sqrt().asin();
        let t = theta * m as f64 / PI;
        let start = (t.floor() as isize - 1).clamp(0, m as isize - 3) as usize;
        let mut acc = 0.0;
        for j in 0..4 {
            let mut weight = 1.0;
            for i in 0..4 {
                if i != j {
                    weight *= (t - (start + i) as f64) / (j as f64 - i as f64);
                }
            }
            acc += weight * self.values[start + j];
        }
        acc.max(0.0)
    }

    /// Integral of the interpolant, one angle cell at a time.
    /// Replaces the value at an outer support edge, where the overlap of the
    /// input supports is empty, by its one-sided limit extrapolated in `θ`.
    fn extrapolate_edge(&mut self, upper: bool) {
        let v = &mut self.values;
        let m = v.len() - 1;
        let at = |j: usize| if upper { v[m - j] } else { v[j] };
        let limit = (4.0 * at(1) - 6.0 * at(2) + 4.0 * at(3) - at(4)).max(0.0);
        if upper {
            v[m] = limit;
        } else {
            v[0] = limit;
        }
    }

    fn mass(&self) -> f64 {
        let m = self.values.len() - 1;
        (0..m)
            .map(|k| quadrature::integrate_cell(|x| self.eval(x), Self::node(self.lo, self.hi, k, m), Self::node(self.lo, self.hi, k + 1, m)))
            .sum()
    }

    fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// Adds geometrically graded knots inside any segment much longer than a
/// neighbour, so features on the neighbour's length scale (e.g. a peak of
/// width `Δ²` next to a segment of length `D²/4`) are resolved.
fn graded(knots: &[f64]) -> Vec<f64> {
    const RATIO: f64 = 4.0;
    let lens: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let mut out = knots.to_vec();
    for (i, w) in knots.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        if let Some(&left) = i.checked_sub(1).and_then(|j| lens.get(j)) {
            let mut step = left * RATIO;
            while a + step < mid {
                out.push(a + step);
                step *= RATIO;
            }
        }
        if let Some(&right) = lens.get(i + 1) {
            let mut step = right * RATIO;
            while b - step > mid {
                out.push(b - step);
                step *= RATIO;
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Tabulated density of `A + B` for independent `A ~ f_a`, `B ~ f_b`.
///
/// Segments run between all pairwise sums of input knots; `grid_size` nodes
/// are shared among them in proportion to length (at least 32 each). The
/// result is rescaled to unit mass; a residual above `1e-6` before rescaling
/// is reported as [`Error::Normalization`].
pub fn numeric_convolution(f_a: &PiecewisePdf, f_b: &PiecewisePdf, grid_size: usize) -> Result<PiecewisePdf> {
    for f in [f_a, f_b] {
        let mass = f.integral();
        if !mass.is_finite() || (mass - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalizable(format!(
                "convolution input `{}` integrates to {mass}",
                f.name()
            )));
        }
    }
    let mut knots: Vec<f64> = f_a
        .knots()
        .iter()
        .flat_map(|ka| f_b.knots().iter().map(move |kb| ka + kb))
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let knots = graded(&knots);
    let (lo, hi) = (knots[0], knots[knots.len() - 1]);
    let span = hi - lo;
    let mut tables: Vec<AngleTable> = knots
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let m = ((grid_size as f64 * (w[1] - w[0]) / span).round() as usize).max(32);
            AngleTable::build(w[0], w[1], m, |s| convolve_at(f_a, f_b, s))
        })
        .collect();
    if let Some(first) = tables.first_mut() {
        first.extrapolate_edge(false);
    }
    if let Some(last) = tables.last_mut() {
        last.extrapolate_edge(true);
    }

    let mass: f64 = tables.iter().map(AngleTable::mass).sum();
    if !mass.is_finite() || mass <= 0.0 || (mass - 1.0).abs() > 1e-6 {
        return Err(Error::Normalization {
            name: format!("{} * {}", f_a.name(), f_b.name()),
            integral: mass,
            tolerance: 1e-6,
        });
    }
    for t in &mut tables {
        t.scale(1.0 / mass);
    }
    let branches = tables
        .into_iter()
        .map(|t| {
            let (a, b) = (t.lo, t.hi);
            let t = Arc::new(t);
            Branch::new(a, b, BranchSource::Tabulated, Arc::new(move |x| t.eval(x)))
        })
        .collect();
    PiecewisePdf::new(format!("{} * {}", f_a.name(), f_b.name()), branches, &[], 1e-6)
}
