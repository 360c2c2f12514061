mod common;

use common::{ks_critical_95, ks_statistic, tanh_sinh, tanh_sinh_pieces};
use pinsec::geometry::{seeded_rng, snr_bob, SystemGeometry, UserRealization};
use pinsec::marginals::closed_form;
use pinsec::marginals::{SnrMarginals, SquaredDistanceLaws};
use pinsec::montecarlo::mc_pairs;

const D: f64 = 20.0;
const H: f64 = 5.0;

/// `f_W(w) = ∫ f_U(u) f_V(w - u) du` with `U = E²`, `V = y²`.
fn w_oracle(delta: f64, w: f64) -> f64 {
    let quarter = D * D / 4.0;
    let lo = (w - quarter).max(0.0);
    let hi = w.min(delta * delta);
    if hi <= lo {
        return 0.0;
    }
    tanh_sinh(|u| 1.0 / (2.0 * delta * u.sqrt()) / (D * (w - u).sqrt()), lo, hi)
}

/// Triangular CDF of `x1 - x2`.
fn separation_cdf(x: f64) -> f64 {
    if x <= -D {
        0.0
    } else if x < 0.0 {
        (D + x).powi(2) / (2.0 * D * D)
    } else if x < D {
        1.0 - (D - x).powi(2) / (2.0 * D * D)
    } else {
        1.0
    }
}

/// Density of `Z = x1 + E - x2`.
fn z_oracle(delta: f64, z: f64) -> f64 {
    if delta == 0.0 {
        return ((D - z.abs()) / (D * D)).max(0.0);
    }
    (separation_cdf(z + delta) - separation_cdf(z - delta)) / (2.0 * delta)
}

fn z_squared_oracle(delta: f64, t: f64) -> f64 {
    let r = t.sqrt();
    (z_oracle(delta, r) + z_oracle(delta, -r)) / (2.0 * r)
}

/// `f_S(s) = ∫ f_{Z²}(t) f_V(s - t) dt`.
fn s_oracle(delta: f64, s: f64) -> f64 {
    let quarter = D * D / 4.0;
    let lo = (s - quarter).max(0.0);
    let hi = s.min((D + delta).powi(2));
    if hi <= lo {
        return 0.0;
    }
    let mut pts = vec![lo, hi];
    for k in [delta * delta, (D - delta).powi(2)] {
        if k > lo && k < hi {
            pts.push(k);
        }
    }
    pts.sort_by(f64::total_cmp);
    tanh_sinh_pieces(|t| z_squared_oracle(delta, t) / (D * (s - t).sqrt()), &pts)
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |k| lo + (hi - lo) * (k as f64 - 0.5) / n as f64)
}

#[test]
fn w_density_matches_direct_convolution() {
    for delta in [0.5, 1.0, 2.0] {
        let laws = SquaredDistanceLaws::new(D, delta).unwrap();
        let top = delta * delta + D * D / 4.0;
        for w in grid(0.0, top, 1000) {
            let oracle = w_oracle(delta, w);
            assert!(
                (laws.pdf_w(w) - oracle).abs() < 1e-5,
                "delta={delta} w={w}: {} vs {oracle}",
                laws.pdf_w(w)
            );
            assert!((closed_form::pdf_w(D, delta, w) - oracle).abs() < 1e-5);
        }
    }
}

#[test]
fn s_density_matches_direct_convolution() {
    for delta in [0.0, 0.5, 1.0, 2.0] {
        let laws = SquaredDistanceLaws::new(D, delta).unwrap();
        let top = (D + delta).powi(2) + D * D / 4.0;
        for s in grid(0.0, top, 1000) {
            let oracle = s_oracle(delta, s);
            assert!(
                (laws.pdf_s(s) - oracle).abs() < 1e-5,
                "delta={delta} s={s}: {} vs {oracle}",
                laws.pdf_s(s)
            );
        }
    }
}

#[test]
fn s_closed_branches_match_direct_convolution() {
    for delta in [0.5, 1.0, 2.0] {
        for s in grid(0.0, delta * delta, 200) {
            assert!((closed_form::pdf_s_branch1(D, delta, s) - s_oracle(delta, s)).abs() < 1e-5);
        }
        for s in grid(delta * delta, D * D / 4.0, 800) {
            assert!((closed_form::pdf_s_branch2(D, delta, s) - s_oracle(delta, s)).abs() < 1e-5);
        }
    }
}

#[test]
fn snr_densities_are_distance_densities_pushed_forward() {
    for (delta, gamma_bar) in [(0.5, 1e2), (1.0, 1e3), (2.0, 1e5)] {
        let g = SystemGeometry::new(D, H, delta, gamma_bar).unwrap();
        let m = SnrMarginals::new(&g).unwrap();
        let laws = m.laws();
        let (b_lo, b_hi) = g.bob_snr_bounds();
        for gamma in grid(b_lo, b_hi, 500) {
            let mapped = gamma_bar / (gamma * gamma) * closed_form::pdf_w(D, delta, gamma_bar / gamma - H * H);
            let direct = closed_form::pdf_gamma_bob(D, H, delta, gamma_bar, gamma);
            assert!((direct - mapped).abs() <= 1e-8 * (1.0 + mapped.abs()), "gamma={gamma}");
            let lib = gamma_bar / (gamma * gamma) * laws.pdf_w(gamma_bar / gamma - H * H);
            assert!((m.bob_pdf(gamma) - lib).abs() <= 1e-8 * (1.0 + lib.abs()));
        }
        let (e_lo, e_hi) = g.eve_snr_bounds();
        for gamma in grid(e_lo, e_hi, 500) {
            let s = gamma_bar / gamma - H * H;
            let lib = gamma_bar / (gamma * gamma) * laws.pdf_s(s);
            assert!((m.eve_pdf(gamma) - lib).abs() <= 1e-8 * (1.0 + lib.abs()), "gamma={gamma}");
            if let Some(upper) = closed_form::pdf_gamma_eve_upper(D, H, delta, gamma_bar, gamma) {
                let branch = if s < delta * delta {
                    closed_form::pdf_s_branch1(D, delta, s)
                } else {
                    closed_form::pdf_s_branch2(D, delta, s)
                };
                let mapped = gamma_bar / (gamma * gamma) * branch;
                assert!((upper - mapped).abs() <= 1e-8 * (1.0 + mapped.abs()));
            }
        }
    }
}

#[test]
fn snr_densities_integrate_to_one() {
    for delta in [0.0, 0.5, 1.0, 2.0] {
        let g = SystemGeometry::new(D, H, delta, 1e3).unwrap();
        let m = SnrMarginals::new(&g).unwrap();
        let bob = tanh_sinh_pieces(|x| m.bob_pdf(x), m.bob_density().knots());
        let eve = tanh_sinh_pieces(|x| m.eve_pdf(x), m.eve_density().knots());
        assert!((bob - 1.0).abs() < 1e-6, "delta={delta}: {bob}");
        assert!((eve - 1.0).abs() < 1e-5, "delta={delta}: {eve}");
    }
}

#[test]
fn cdfs_are_monotone_and_consistent_with_densities() {
    let g = SystemGeometry::new(D, H, 1.0, 1e3).unwrap();
    let m = SnrMarginals::new(&g).unwrap();
    let (lo, hi) = g.eve_snr_bounds();
    let mut prev = 0.0;
    for y in grid(lo, hi, 2000) {
        let c = m.eve_cdf(y);
        assert!(c >= prev && (0.0..=1.0).contains(&c));
        prev = c;
    }
    for y in [lo + 0.1 * (hi - lo), 0.5 * (lo + hi), hi - 0.01 * (hi - lo)] {
        let mut pts: Vec<f64> = m.eve_density().knots().iter().copied().filter(|k| *k < y).collect();
        pts.push(y);
        let integral = tanh_sinh_pieces(|x| m.eve_pdf(x), &pts);
        assert!((m.eve_cdf(y) - integral).abs() < 1e-6, "y={y}");
    }
    assert_eq!(m.bob_cdf(0.0), 0.0);
    assert_eq!(m.bob_cdf(f64::INFINITY), 1.0);
}

#[test]
fn simulated_snrs_pass_ks_at_95_percent() {
    let g = SystemGeometry::new(D, H, 1.0, 1e3).unwrap();
    let m = SnrMarginals::new(&g).unwrap();
    let n = 100_000;
    let pairs = mc_pairs(&g, n, 20_240).unwrap();
    let mut bob: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut eve: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let crit = ks_critical_95(n);
    let kb = ks_statistic(&mut bob, |x| m.bob_cdf(x));
    let ke = ks_statistic(&mut eve, |x| m.eve_cdf(x));
    assert!(kb < crit, "bob KS {kb} >= {crit}");
    assert!(ke < crit, "eve KS {ke} >= {crit}");
}

#[test]
fn squared_distance_histogram_matches_density() {
    let delta = 1.0;
    let g = SystemGeometry::new(D, H, delta, 1.0).unwrap();
    let laws = SquaredDistanceLaws::new(D, delta).unwrap();
    let n = 100_000;
    let bins = 50;
    let top = g.bob_distance_max();
    let mut counts = vec![0usize; bins];
    let mut rng = seeded_rng(77, 0);
    for _ in 0..n {
        let r = UserRealization::sample(&g, &mut rng);
        // W from the SNR so the test also exercises the SNR formula
        let w = g.gamma_bar() / snr_bob(&g, &r) - H * H;
        counts[((w / top * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let l1: f64 = (0..bins)
        .map(|b| {
            let lo = top * b as f64 / bins as f64;
            let hi = top * (b + 1) as f64 / bins as f64;
            let p = tanh_sinh(|w| laws.pdf_w(w), lo, hi);
            (counts[b] as f64 / n as f64 - p).abs()
        })
        .sum();
    assert!(l1 < 0.03, "L1 distance {l1}");
}
