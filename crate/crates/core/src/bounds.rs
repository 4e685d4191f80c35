//! Bracket for the isoperimetric function `c(n)`:
//!
//! ```text
//! n ω_n^{1/n}  ≤  c(n)  ≤  2 (2ζ(n))^{-1/n} · n ω_n^{1/n}
//! ```
//!
//! The lower side is the perimeter of the unit-volume ball; the upper side
//! combines `Per(V_G) ≤ n/ρ_G` with the Minkowski–Hlawka packing radius.
//! Everything is evaluated in log form so that `n` can go to several hundred.

use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::error::Result;
use crate::lattice::{minimum_vectors, Lattice};

/// `ln Γ(n/2 + 1)` for integer `n ≥ 0`, by exact recurrence.
fn ln_gamma_half_plus_one(n: usize) -> f64 {
    if n % 2 == 0 {
        (1..=n / 2).map(|j| (j as f64).ln()).sum()
    } else {
        // Γ(k + 3/2) = √π · Π_{j=0}^{k} (j + 1/2), with n = 2k + 1.
        let k = (n - 1) / 2;
        0.5 * PI.ln() + (0..=k).map(|j| (j as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// `ln ω_n`, the log-volume of the unit n-ball.
pub fn ln_unit_ball_volume(n: usize) -> f64 {
    0.5 * n as f64 * PI.ln() - ln_gamma_half_plus_one(n)
}

/// `ω_n = π^{n/2} / Γ(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    assert!(n >= 1, "unit ball volume needs n >= 1");
    ln_unit_ball_volume(n).exp()
}

const BERNOULLI: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];

/// Riemann ζ at an integer `n ≥ 2`.
///
/// The series is summed directly while its tail bound `(K+1)^{1−n}/(n−1)`
/// drops below 1e-15 within a few dozen terms; otherwise the remainder after
/// `N` terms is replaced by its Euler–Maclaurin expansion.
pub fn zeta(n: usize) -> f64 {
    assert!(n >= 2, "zeta needs n >= 2");
    let s = n as f64;
    let tail = |k: f64| (k + 1.0).powf(1.0 - s) / (s - 1.0);

    let mut sum = 0.0;
    for k in 1..=64u32 {
        sum += f64::from(k).powf(-s);
        if tail(f64::from(k)) < 1e-15 {
            return sum;
        }
    }

    let big_n = 16.0_f64;
    let head: f64 = (1..16).rev().map(|k| f64::from(k).powf(-s)).sum();
    let mut rem = big_n.powf(1.0 - s) / (s - 1.0) + 0.5 * big_n.powf(-s);
    // Rising factorial s(s+1)…(s+2j−2) over (2j)!, times N^{−s−2j+1}.
    let mut rising = s;
    let mut fact = 2.0;
    let mut power = big_n.powf(-s - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        rem += b / fact * rising * power;
        let j = j as f64 + 1.0;
        rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
        fact *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
        power /= big_n * big_n;
    }
    head + rem
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub dim: usize,
    pub omega_n: f64,
    pub zeta_n: f64,
    /// `n ω_n^{1/n}`
    pub lower: f64,
    /// `2 (2ζ(n))^{−1/n} n ω_n^{1/n}`
    pub upper: f64,
    /// `ζ(n)^{1/n} / (ω_n^{1/n} 2^{1−1/n})`
    pub mh_packing_radius: f64,
    /// `√(2πen)`
    pub asymptote: f64,
}

pub fn bounds_row(n: usize) -> BoundsRow {
    assert!(n >= 2, "bounds need n >= 2");
    let nf = n as f64;
    let ln_omega = ln_unit_ball_volume(n);
    let zeta_n = zeta(n);
    let ln_lower = nf.ln() + ln_omega / nf;
    let ln_upper = 2f64.ln() - (2.0 * zeta_n).ln() / nf + ln_lower;
    let ln_mh = zeta_n.ln() / nf - ln_omega / nf - (1.0 - 1.0 / nf) * 2f64.ln();
    BoundsRow {
        dim: n,
        omega_n: ln_omega.exp(),
        zeta_n,
        lower: ln_lower.exp(),
        upper: ln_upper.exp(),
        mh_packing_radius: ln_mh.exp(),
        asymptote: (2.0 * PI * E * nf).sqrt(),
    }
}

/// Packing radius at covolume 1 against the Minkowski–Hlawka bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MhComparison {
    pub packing_radius: f64,
    pub bound: f64,
    pub attains: bool,
}

pub fn mh_comparison(lattice: &Lattice) -> Result<MhComparison> {
    let unit = lattice.with_covolume(1.0)?;
    let (lambda, _) = minimum_vectors(&unit)?;
    let packing_radius = lambda / 2.0;
    let bound = bounds_row(unit.dim()).mh_packing_radius;
    Ok(MhComparison {
        packing_radius,
        bound,
        attains: packing_radius >= bound,
    })
}

/// Whether the lattice, rescaled to covolume 1, reaches the
/// Minkowski–Hlawka packing radius.
pub fn mh_lattice_check(lattice: &Lattice) -> Result<bool> {
    Ok(mh_comparison(lattice)?.attains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_lattice;

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn ball_volumes() {
        assert!(rel(unit_ball_volume(2), PI) < 1e-15);
        assert!(rel(unit_ball_volume(3), 4.0 * PI / 3.0) < 1e-15);
        assert!(rel(unit_ball_volume(1), 2.0) < 1e-15);
        for n in 3..=40 {
            let rec = unit_ball_volume(n - 2) * 2.0 * PI / n as f64;
            assert!(rel(unit_ball_volume(n), rec) < 1e-12, "n = {n}");
        }
        // No overflow or underflow in log form.
        assert!(ln_unit_ball_volume(500).is_finite());
    }

    #[test]
    fn zeta_values() {
        assert!((zeta(2) - PI * PI / 6.0).abs() < 1e-12);
        assert!((zeta(4) - PI.powi(4) / 90.0).abs() < 1e-12);
        assert!((zeta(6) - PI.powi(6) / 945.0).abs() < 1e-12);
        assert!((zeta(3) - 1.202_056_903_159_594_3).abs() < 1e-12);
        let z = zeta(60);
        assert!(z >= 1.0 && z - 1.0 - 2f64.powi(-60) <= 1e-17);
        for n in 2..40 {
            assert!(zeta(n) > zeta(n + 1));
        }
    }

    #[test]
    fn dimension_two_row() {
        let row = bounds_row(2);
        assert!((row.lower - 2.0 * PI.sqrt()).abs() < 1e-12);
        assert!((row.lower - 3.544_907_7).abs() < 1e-6);
        let upper = 2.0 * 2.0 * PI.sqrt() / (PI * PI / 3.0).sqrt();
        assert!((row.upper - upper).abs() < 1e-12);
        assert!((row.upper - 3.908_820_1).abs() < 1e-6);
        assert!((row.mh_packing_radius - 0.511_663_4).abs() < 1e-6);
        let hexagon = 6.0 * 2f64.sqrt() * 3f64.powf(-0.75);
        assert!(row.lower <= hexagon && hexagon <= row.upper);
    }

    #[test]
    fn dimension_three_lower() {
        let row = bounds_row(3);
        assert!((row.lower - 3.0 * (4.0 * PI / 3.0).powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((row.lower - 4.835_975_8).abs() < 1e-6);
    }

    #[test]
    fn ordering_and_asymptotics() {
        for n in 2..=500 {
            let row = bounds_row(n);
            assert!(row.lower < row.upper);
            if n >= 50 {
                let r = row.lower / row.asymptote;
                assert!((0.95..=1.05).contains(&r), "n = {n}: {r}");
            }
        }
        let row = bounds_row(200);
        assert!((row.upper / row.lower - 2.0).abs() < 1e-2);
        assert!((row.lower / row.asymptote - 1.0).abs() < 2e-2);
    }

    #[test]
    fn minkowski_hlawka_checks() {
        let hex = make_lattice(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap();
        let c = mh_comparison(&hex).unwrap();
        assert!((c.packing_radius - 0.537_285_0).abs() < 1e-6);
        assert!(c.attains);
        assert!(!mh_lattice_check(&Lattice::integer(2).unwrap()).unwrap());
        let d4 = make_lattice(&[
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, -1.0, 0.0, 0.0],
            vec![0.0, 1.0, -1.0, 0.0],
            vec![0.0, 0.0, 1.0, -1.0],
        ])
        .unwrap();
        assert!(mh_lattice_check(&d4).unwrap());
    }
}
