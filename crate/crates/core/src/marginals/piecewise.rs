use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchSource {
    ClosedForm,
    Tabulated,
    /// A closed form that disagreed with the convolution oracle and was replaced by it.
    OracleFallback,
}

impl fmt::Display for BranchSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchSource::ClosedForm => "closed-form",
            BranchSource::Tabulated => "tabulated",
            BranchSource::OracleFallback => "oracle-fallback",
        })
    }
}

#[derive(Clone)]
pub struct Branch {
    pub lo: f64,
    pub hi: f64,
    pub source: BranchSource,
    eval: DensityFn,
}

impl Branch {
    pub fn new(lo: f64, hi: f64, source: BranchSource, eval: DensityFn) -> Self {
        Self { lo, hi, source, eval }
    }

    pub fn closed_form(lo: f64, hi: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(lo, hi, BranchSource::ClosedForm, Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn function(&self) -> DensityFn {
        Arc::clone(&self.eval)
    }
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Branch")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("source", &self.source)
            .finish()
    }
}

/// A density given as ordered branches that tile its support.
///
/// Branch `i` covers `[lo, hi)`; the last branch is closed. Outside the
/// support the density is zero. `knots` holds every point where the density
/// may lose smoothness (branch edges plus interior kinks) and seeds every
/// grid or subdivision built on top of it.
#[derive(Clone, Debug)]
pub struct PiecewisePdf {
    name: String,
    branches: Vec<Branch>,
    knots: Vec<f64>,
    integral: f64,
}

impl PiecewisePdf {
    /// Builds the density and checks that it integrates to one within `tolerance`.
    ///
    /// Empty branches are dropped. `interior_knots` outside the support are ignored.
    pub fn new(
        name: impl Into<String>,
        branches: Vec<Branch>,
        interior_knots: &[f64],
        tolerance: f64,
    ) -> Result<Self> {
        let pdf = Self::unchecked(name, branches, interior_knots)?;
        let residual = (pdf.integral - 1.0).abs();
        if !(residual <= tolerance) {
            return Err(Error::Normalization {
                name: pdf.name,
                integral: pdf.integral,
                tolerance,
            });
        }
        let negative = pdf
            .dense_grid(64)
            .into_iter()
            .any(|x| (pdf.branch_at(x).map_or(0.0, |b| b.eval(x))) < -1e-12);
        if negative {
            return Err(Error::NotNormalizable(format!("density `{}` is negative on its support", pdf.name)));
        }
        Ok(pdf)
    }

    /// Same as [`PiecewisePdf::new`] without the normalization requirement.
    pub fn unchecked(name: impl Into<String>, branches: Vec<Branch>, interior_knots: &[f64]) -> Result<Self> {
        let name = name.into();
        let branches: Vec<Branch> = branches.into_iter().filter(|b| b.hi > b.lo).collect();
        if branches.is_empty() {
            return Err(Error::NotNormalizable(format!("density `{name}` has an empty support")));
        }
        for b in &branches {
            if !(b.lo.is_finite() && b.hi.is_finite()) {
                return Err(Error::NotNormalizable(format!("density `{name}` has an unbounded branch")));
            }
        }
        for pair in branches.windows(2) {
            if pair[0].hi != pair[1].lo {
                return Err(Error::NotNormalizable(format!(
                    "density `{name}` branches do not tile: [{}, {}) then [{}, {})",
                    pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                )));
            }
        }
        let lo = branches[0].lo;
        let hi = branches[branches.len() - 1].hi;
        let mut knots: Vec<f64> = branches.iter().map(|b| b.lo).collect();
        knots.push(hi);
        knots.extend(interior_knots.iter().copied().filter(|k| *k > lo && *k < hi));
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut pdf = Self {
            name,
            branches,
            knots,
            integral: 0.0,
        };
        let integral = pdf.integrate_over_support();
        if !integral.is_finite() || integral <= 0.0 {
            return Err(Error::NotNormalizable(format!(
                "density `{}` integrates to {integral}",
                pdf.name
            )));
        }
        pdf.integral = integral;
        Ok(pdf)
    }

    fn integrate_over_support(&self) -> f64 {
        let tol = Tolerance {
            absolute: 1e-13,
            relative: 1e-12,
            max_intervals: 400,
        };
        quadrature::integrate_pieces_singular(|x| self.eval(x), &self.knots, tol).value
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn support(&self) -> (f64, f64) {
        (self.branches[0].lo, self.branches[self.branches.len() - 1].hi)
    }

    /// Integral over the support, as measured at construction.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn normalization_residual(&self) -> f64 {
        (self.integral - 1.0).abs()
    }

    pub fn branch_index(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return None;
        }
        if x == hi {
            return Some(self.branches.len() - 1);
        }
        // last branch whose lower edge is <= x
        let idx = self.branches.partition_point(|b| b.lo <= x);
        Some(idx.saturating_sub(1))
    }

    fn branch_at(&self, x: f64) -> Option<&Branch> {
        self.branch_index(x).map(|i| &self.branches[i])
    }

    /// Density at `x`; zero outside the support, never negative.
    pub fn eval(&self, x: f64) -> f64 {
        match self.branch_at(x) {
            Some(b) => b.eval(x).max(0.0),
            None => 0.0,
        }
    }

    /// Copy of the density with branch `index` replaced.
    pub fn with_branch(&self, index: usize, branch: Branch) -> Result<Self> {
        let mut branches = self.branches.clone();
        branches[index] = branch;
        let interior: Vec<f64> = self.knots.clone();
        Self::unchecked(self.name.clone(), branches, &interior)
    }

    pub fn into_function(self) -> DensityFn {
        Arc::new(move |x| self.eval(x))
    }

    /// `per_segment` points spread over every knot segment, endpoints included.
    pub fn dense_grid(&self, per_segment: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.knots.len() * per_segment);
        for w in self.knots.windows(2) {
            for k in 0..per_segment {
                out.push(w[0] + (w[1] - w[0]) * k as f64 / per_segment as f64);
            }
        }
        out.push(*self.knots.last().unwrap());
        out
    }

    /// Writes `value,density` rows on `points` evenly spaced abscissae.
    pub fn write_csv<W: Write>(&self, out: W, points: usize) -> Result<()> {
        let (lo, hi) = self.support();
        write_two_column(out, "density", points, lo, hi, |x| self.eval(x))
    }
}

pub fn write_two_column<W: Write>(
    out: W,
    column: &str,
    points: usize,
    lo: f64,
    hi: f64,
    f: impl Fn(f64) -> f64,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["value", column])?;
    let n = points.max(2);
    for k in 0..n {
        let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        writer.write_record([x.to_string(), f(x).to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Cumulative distribution tabulated on a knot-aware grid.
///
/// Between grid nodes the value is refined by integrating the density from
/// the left node and clamping into the cell's bracket, so the result is
/// monotone and accurate to quadrature precision.
#[derive(Clone, Debug)]
pub struct TabulatedCdf {
    grid: Vec<f64>,
    values: Vec<f64>,
    pdf: PiecewisePdf,
    mass: f64,
}

/// Tabulates the CDF of `pdf` on roughly `grid_size` cells.
///
/// Cells cluster towards every knot (cosine spacing in each knot segment).
/// The table is rescaled by the measured mass so it ends at exactly one;
/// [`TabulatedCdf::mass`] keeps the unscaled total.
pub fn cdf_of(pdf: &PiecewisePdf, grid_size: usize) -> TabulatedCdf {
    let knots = pdf.knots();
    let (lo, hi) = pdf.support();
    let span = hi - lo;
    let mut grid = vec![knots[0]];
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let cells = ((grid_size as f64 * (b - a) / span).round() as usize).max(32);
        for k in 1..=cells {
            let theta = std::f64::consts::PI * k as f64 / cells as f64;
            let s = (0.5 * theta).sin();
            let x = if k == cells { b } else { a + (b - a) * s * s };
            if x > *grid.last().unwrap() {
                grid.push(x);
            }
        }
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    values.push(0.0);
    for w in grid.windows(2) {
        acc += quadrature::integrate_cell(|x| pdf.eval(x), w[0], w[1]).max(0.0);
        values.push(acc);
    }
    let mass = acc;
    for v in &mut values {
        *v /= mass;
    }
    *values.last_mut().unwrap() = 1.0;
    TabulatedCdf {
        grid,
        values,
        pdf: pdf.clone(),
        mass,
    }
}

impl TabulatedCdf {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Unscaled integral of the density accumulated over the grid.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn support(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let i = self.grid.partition_point(|g| *g <= x) - 1;
        let (a, fa, fb) = (self.grid[i], self.values[i], self.values[i + 1]);
        if x == a {
            return fa;
        }
        let partial = quadrature::integrate_cell(|t| self.pdf.eval(t), a, x) / self.mass;
        (fa + partial).clamp(fa, fb)
    }

    /// Survival function `1 - F(x)`, computed from the upper tail of the table.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.eval(x)
    }

    pub fn write_csv<W: Write>(&self, out: W, points: usize) -> Result<()> {
        let (lo, hi) = self.support();
        write_two_column(out, "cdf", points, lo, hi, |x| self.eval(x))
    }
}
