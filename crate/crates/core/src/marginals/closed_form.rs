//! Closed-form densities of the distance terms and of the two SNRs.
//!
//! Notation: `E ~ Unif[-Δ, Δ]`, `y ~ Unif[-D/2, D/2]`, `U = E²`, `V = y²`,
//! `W = U + V` (Bob), `X = x1 - x2`, `Z = X + E`, `S = Z² + y2²` (Eve).
//! All functions assume `0 < Δ ≤ D/2` unless stated; the `Δ = 0` limits are
//! provided separately.

use std::f64::consts::PI;

/// `asin` with the argument pulled back into `[-1, 1]` when it overshoots by
/// at most `1e-12`.
pub fn asin_clamped(x: f64) -> f64 {
    let tol = 1e-12;
    if x > 1.0 && x <= 1.0 + tol {
        PI / 2.0
    } else if x < -1.0 && x >= -1.0 - tol {
        -PI / 2.0
    } else {
        x.asin()
    }
}

/// Triangular density of `X = x1 - x2` on `[-D, D]`.
pub fn pdf_x_separation(side: f64, x: f64) -> f64 {
    if x.abs() > side {
        0.0
    } else {
        (side - x.abs()) / (side * side)
    }
}

/// Density of `Z = X + E`.
pub fn pdf_z(side: f64, delta: f64, z: f64) -> f64 {
    if delta == 0.0 {
        return pdf_x_separation(side, z);
    }
    let a = z.abs();
    let d2 = side * side;
    if a <= delta {
        (2.0 * side * delta - delta * delta - z * z) / (2.0 * delta * d2)
    } else if a <= side - delta {
        (side - a) / d2
    } else if a <= side + delta {
        (side + delta - a).powi(2) / (4.0 * delta * d2)
    } else {
        0.0
    }
}

/// Density of `U = E²` on `(0, Δ²)`.
pub fn pdf_u(delta: f64, u: f64) -> f64 {
    if u > 0.0 && u <= delta * delta {
        1.0 / (2.0 * delta * u.sqrt())
    } else {
        0.0
    }
}

/// Density of `V = y²` on `(0, D²/4)`.
pub fn pdf_v(side: f64, v: f64) -> f64 {
    if v > 0.0 && v <= side * side / 4.0 {
        1.0 / (side * v.sqrt())
    } else {
        0.0
    }
}

/// Density of `Z²` on `(0, (D+Δ)²)`; symmetric `Z` folds both signs.
pub fn pdf_z_squared(side: f64, delta: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let r = u.sqrt();
    pdf_z(side, delta, r) / r
}

/// Three-branch density of `W = E² + y1²` on `(0, Δ² + D²/4]`.
pub fn pdf_w(side: f64, delta: f64, w: f64) -> f64 {
    let quarter = side * side / 4.0;
    if delta == 0.0 {
        return pdf_v(side, w);
    }
    let d2 = delta * delta;
    if w <= 0.0 || w > d2 + quarter {
        0.0
    } else if w <= d2 {
        PI / (2.0 * delta * side)
    } else if w <= quarter {
        asin_clamped(delta / w.sqrt()) / (delta * side)
    } else {
        (asin_clamped(delta / w.sqrt()) - asin_clamped((1.0 - quarter / w).sqrt())) / (delta * side)
    }
}

/// First branch of `f_S` on `(0, Δ²]`.
pub fn pdf_s_branch1(side: f64, delta: f64, s: f64) -> f64 {
    PI / (2.0 * delta * side.powi(3)) * (2.0 * side * delta - delta * delta - s / 2.0)
}

/// Second branch of `f_S` on `(Δ², D²/4]`.
pub fn pdf_s_branch2(side: f64, delta: f64, s: f64) -> f64 {
    let d2 = delta * delta;
    let arc = asin_clamped(delta / s.sqrt());
    let root = (s - d2).max(0.0).sqrt();
    (2.0 * delta * side * PI - (2.0 * d2 + s) * arc - 3.0 * delta * root) / (2.0 * delta * side.powi(3))
}

/// `Δ = 0` limit of the second branch, valid on `(0, D²/4]`.
pub fn pdf_s_ideal(side: f64, s: f64) -> f64 {
    (PI * side - 2.0 * s.max(0.0).sqrt()) / side.powi(3)
}

/// Bob's SNR density in the four-branch form (the fourth is zero).
pub fn pdf_gamma_bob(side: f64, height: f64, delta: f64, gamma_bar: f64, gamma: f64) -> f64 {
    if !(gamma > 0.0) {
        return 0.0;
    }
    let h2 = height * height;
    let quarter = side * side / 4.0;
    let d2 = delta * delta;
    let w = gamma_bar / gamma - h2;
    let jac = gamma_bar / (gamma * gamma);
    if delta == 0.0 {
        return jac * pdf_v(side, w);
    }
    if gamma >= gamma_bar / (d2 + h2) && gamma <= gamma_bar / h2 {
        PI / (2.0 * delta * side) * jac
    } else if gamma > gamma_bar / (quarter + h2) && gamma < gamma_bar / (d2 + h2) {
        jac / (delta * side) * asin_clamped(delta / w.sqrt())
    } else if gamma >= gamma_bar / (d2 + quarter + h2) && gamma <= gamma_bar / (quarter + h2) {
        jac / (delta * side)
            * (asin_clamped(delta / w.sqrt()) - asin_clamped((1.0 - quarter / w).sqrt()))
    } else {
        0.0
    }
}

/// Eve's SNR density on its first two branches, `γ ≥ γ̄/(h² + D²/4)`.
/// Returns `None` below that range, where the density needs the tabulated
/// third branch of `f_S`.
pub fn pdf_gamma_eve_upper(side: f64, height: f64, delta: f64, gamma_bar: f64, gamma: f64) -> Option<f64> {
    let h2 = height * height;
    let quarter = side * side / 4.0;
    let d2 = delta * delta;
    if gamma > gamma_bar / h2 || !(gamma > 0.0) {
        return Some(0.0);
    }
    if gamma < gamma_bar / (h2 + quarter) {
        return None;
    }
    let s = gamma_bar / gamma - h2;
    let jac = gamma_bar / (gamma * gamma);
    if delta == 0.0 {
        return Some(jac * pdf_s_ideal(side, s));
    }
    let d3 = side.powi(3);
    if gamma >= gamma_bar / (h2 + d2) {
        Some(jac * PI / (2.0 * delta * d3) * (2.0 * side * delta - d2 - s / 2.0))
    } else {
        let root = (s - d2).max(0.0).sqrt();
        Some(
            jac / (2.0 * delta * d3)
                * (2.0 * delta * side * PI - (2.0 * d2 + s) * asin_clamped(delta / s.sqrt()) - 3.0 * delta * root),
        )
    }
}
