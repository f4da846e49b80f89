//! Edge-preserving potential, its quadratic-tail smoothing, and the
//! half-quadratic dual machinery.
//!
//! The base potential is `phi(s) = 2 (sqrt(1 + s^2) - 1)`: convex,
//! nondecreasing, linear at infinity, with `phi(sqrt(s))` concave. The
//! smoothed variant `phi_eps` replaces `phi` by tangent parabolas below
//! `eps` and above `1/eps`, which makes the dual edge indicator
//! `omega = phi_eps'(s) / (2 s)` well defined and bounded away from zero.
//! The conjugate `psi_eps` lets the penalty be written as
//! `inf_omega (omega s^2 + psi_eps(omega))`, the form the alternating
//! scheme exploits: quadratic in the field for frozen `omega`, closed-form
//! in `omega` for frozen field.

use crate::error::{Error, Result};
use crate::fem::ElementField;

/// Smoothing parameters of the edge-preserving potential.
#[derive(Debug, Clone, Copy)]
pub struct PotentialSpec {
    /// Quadratic-tail smoothing width; the potential is quadratic on
    /// `[0, epsilon]` and beyond `1/epsilon`.
    pub epsilon: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec { epsilon: 0.1 }
    }
}

impl PotentialSpec {
    pub fn new(epsilon: f64) -> Result<PotentialSpec> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        Ok(PotentialSpec { epsilon })
    }

    /// Upper end of the attainable indicator range, `phi'(eps) / (2 eps)`.
    pub fn omega_max(&self) -> f64 {
        1.0 / (1.0 + self.epsilon * self.epsilon).sqrt()
    }

    /// Lower end (the positive floor), `eps phi'(1/eps) / 2`.
    pub fn omega_min(&self) -> f64 {
        self.epsilon / (1.0 + self.epsilon * self.epsilon).sqrt()
    }
}

/// Base potential `phi(s) = 2 (sqrt(1 + s^2) - 1)`; rejects negative `s`.
pub fn phi(s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::invalid(format!("phi needs s >= 0, got {s}")));
    }
    Ok(2.0 * ((1.0 + s * s).sqrt() - 1.0))
}

/// Derivative `phi'(s) = 2 s / sqrt(1 + s^2)`.
pub fn phi_prime(s: f64) -> f64 {
    2.0 * s / (1.0 + s * s).sqrt()
}

fn phi_unchecked(s: f64) -> f64 {
    2.0 * ((1.0 + s * s).sqrt() - 1.0)
}

/// Smoothed potential: quadratic on `[0, eps]`, equal to `phi` on
/// `[eps, 1/eps]`, quadratic with slope-matched coefficient beyond `1/eps`.
/// C1 across both seams and nonnegative everywhere.
pub fn phi_eps(s: f64, spec: &PotentialSpec) -> f64 {
    let eps = spec.epsilon;
    debug_assert!(s >= 0.0);
    if s <= eps {
        let a = phi_prime(eps) / (2.0 * eps);
        a * s * s + phi_unchecked(eps) - eps * phi_prime(eps) / 2.0
    } else if s <= 1.0 / eps {
        phi_unchecked(s)
    } else {
        let inv = 1.0 / eps;
        let a = eps * phi_prime(inv) / 2.0;
        a * s * s + phi_unchecked(inv) - phi_prime(inv) / (2.0 * eps)
    }
}

/// Derivative of the smoothed potential.
pub fn phi_eps_prime(s: f64, spec: &PotentialSpec) -> f64 {
    let eps = spec.epsilon;
    if s <= eps {
        phi_prime(eps) / eps * s
    } else if s <= 1.0 / eps {
        phi_prime(s)
    } else {
        eps * phi_prime(1.0 / eps) * s
    }
}

/// The minimizing edge indicator for one gradient magnitude:
/// `phi_eps'(s) / (2 s)`, with the removable singularity at `s = 0` filled
/// by its limit. Decreasing in `s`, with values in
/// `[omega_min, omega_max]`.
pub fn omega_of(s: f64, spec: &PotentialSpec) -> f64 {
    let eps = spec.epsilon;
    let clamped = s.clamp(eps, 1.0 / eps);
    1.0 / (1.0 + clamped * clamped).sqrt()
}

/// Elementwise indicator update from a field of gradient magnitudes.
pub fn omega_update(grad_norm: &ElementField, spec: &PotentialSpec) -> ElementField {
    ElementField {
        values: grad_norm
            .values
            .iter()
            .map(|&s| omega_of(s, spec))
            .collect(),
    }
}

/// Conjugate of the smoothed potential: `psi_eps(omega) =
/// sup_s (phi_eps(s) - omega s^2)`.
///
/// On the attainable range the supremum sits at the inverse of
/// [`omega_of`], found by bisection; at and above `omega_max` the supremum
/// is at `s = 0` and the value is the constant `phi_eps(0)` (this constant
/// branch is what a frozen indicator of one evaluates to). Values below
/// `omega_min` are rejected: there the supremum is infinite.
pub fn psi_eps(omega: f64, spec: &PotentialSpec) -> Result<f64> {
    let lo = spec.omega_min();
    let hi = spec.omega_max();
    let tol = 1e-12;
    if omega < lo - tol {
        return Err(Error::invalid(format!(
            "omega {omega} below the attainable floor {lo}"
        )));
    }
    if omega >= hi {
        return Ok(phi_eps(0.0, spec));
    }
    if omega <= lo {
        let inv = 1.0 / spec.epsilon;
        return Ok(phi_unchecked(inv) - phi_prime(inv) / (2.0 * spec.epsilon));
    }
    // invert omega_of on [eps, 1/eps]; the map is strictly decreasing there
    let mut a = spec.epsilon;
    let mut b = 1.0 / spec.epsilon;
    while b - a > 1e-12 {
        let mid = 0.5 * (a + b);
        if omega_of(mid, spec) > omega {
            a = mid;
        } else {
            b = mid;
        }
    }
    let s_star = 0.5 * (a + b);
    Ok(phi_eps(s_star, spec) - omega * s_star * s_star)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: PotentialSpec = PotentialSpec { epsilon: 0.1 };

    #[test]
    fn phi_basics() {
        assert_eq!(phi(0.0).unwrap(), 0.0);
        assert!((phi(1.0).unwrap() - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(phi(-1.0).is_err());
        // linear growth with slope 2
        let s = 1e6;
        assert!((phi(s).unwrap() / s - 2.0).abs() < 1e-5);
    }

    #[test]
    fn phi_eps_continuity_at_seams() {
        let eps = SPEC.epsilon;
        let a = phi_prime(eps) / (2.0 * eps);
        let lower = a * eps * eps + phi(eps).unwrap() - eps * phi_prime(eps) / 2.0;
        assert!((lower - phi(eps).unwrap()).abs() < 1e-15);

        let inv = 1.0 / eps;
        let upper = eps * phi_prime(inv) / 2.0 * inv * inv + phi(inv).unwrap()
            - phi_prime(inv) / (2.0 * eps);
        assert!((upper - phi(inv).unwrap()).abs() < 1e-12);
        // derivative continuity at both seams
        for s in [eps, inv] {
            let d_in = phi_eps_prime(s - 1e-9, &SPEC);
            let d_out = phi_eps_prime(s + 1e-9, &SPEC);
            assert!((d_in - d_out).abs() < 1e-6);
        }
        // value of the lower parabola at zero is positive
        let at_zero = phi_eps(0.0, &SPEC);
        assert!(at_zero > 0.0);
        assert!((at_zero - (phi(0.1).unwrap() - 0.05 * phi_prime(0.1))).abs() < 1e-15);
    }

    #[test]
    fn phi_eps_convex_nonnegative_converges_pointwise() {
        // second differences nonnegative on a grid
        let n = 2000;
        let smax = 30.0;
        let vals: Vec<f64> = (0..n)
            .map(|i| phi_eps(smax * i as f64 / n as f64, &SPEC))
            .collect();
        for w in vals.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] > -1e-10);
        }
        assert!(vals.iter().all(|&v| v >= 0.0));
        // pointwise convergence to phi as eps -> 0
        for &s in &[0.05, 0.7, 3.0, 40.0] {
            let tight = PotentialSpec::new(1e-4).unwrap();
            assert!((phi_eps(s, &tight) - phi(s).unwrap()).abs() < 1e-3);
        }
    }

    #[test]
    fn omega_update_branches() {
        // removable singularity at zero
        let at_zero = omega_of(0.0, &SPEC);
        assert!((at_zero - phi_prime(0.1) / 0.2).abs() < 1e-15);
        // middle branch closed form
        assert!((omega_of(1.0, &SPEC) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        // saturation at the positive floor for huge gradients
        let floor = 0.1 * phi_prime(10.0) / 2.0;
        assert!((omega_of(1e9, &SPEC) - floor).abs() < 1e-15);
        // monotone decreasing
        let mut last = f64::INFINITY;
        for i in 0..500 {
            let v = omega_of(i as f64 * 0.05, &SPEC);
            assert!(v <= last + 1e-15);
            last = v;
        }
    }

    #[test]
    fn psi_eps_reference_values() {
        // maximal omega: supremum at s = 0
        let hi = SPEC.omega_max();
        assert!((psi_eps(hi, &SPEC).unwrap() - phi_eps(0.0, &SPEC)).abs() < 1e-12);
        // middle branch: omega = 1/sqrt(2) inverts to s* = 1
        let mid = psi_eps(1.0 / 2f64.sqrt(), &SPEC).unwrap();
        let expect = phi(1.0).unwrap() - 1.0 / 2f64.sqrt();
        assert!((mid - expect).abs() < 1e-10, "{mid} vs {expect}");
        // below the floor: rejected
        assert!(psi_eps(0.0, &SPEC).is_err());
        // the constant extension above omega_max stays put
        assert!((psi_eps(1.0, &SPEC).unwrap() - phi_eps(0.0, &SPEC)).abs() < 1e-15);
    }

    #[test]
    fn duality_gap_nonnegative_on_random_pairs() {
        // omega s^2 + psi(omega) >= phi_eps(s) for any attainable omega
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let s = 10f64.powf(-4.0 + 8.0 * next());
            let omega = SPEC.omega_min() + (SPEC.omega_max() - SPEC.omega_min()) * next();
            let lhs = omega * s * s + psi_eps(omega, &SPEC).unwrap();
            assert!(lhs - phi_eps(s, &SPEC) >= -1e-10);
        }
    }

    #[test]
    fn envelope_reaches_phi_eps() {
        // min over the attainable omega of (omega s^2 + psi(omega)) recovers
        // phi_eps(s) on a log grid
        for i in 0..=80 {
            let s = 10f64.powf(-4.0 + 8.0 * i as f64 / 80.0);
            let omega = omega_of(s, &SPEC);
            let val = omega * s * s + psi_eps(omega, &SPEC).unwrap();
            assert!(
                (val - phi_eps(s, &SPEC)).abs() < 1e-8,
                "s = {s}: {val} vs {}",
                phi_eps(s, &SPEC)
            );
        }
    }

    #[test]
    fn omega_update_is_the_minimizer() {
        for &s in &[0.01, 0.3, 1.0, 4.0, 30.0] {
            let star = omega_of(s, &SPEC);
            let best = star * s * s + psi_eps(star, &SPEC).unwrap();
            for&d in &[-1e-3, 1e-3] {
                let w = (star + d).clamp(SPEC.omega_min(), SPEC.omega_max());
                let v = w * s * s + psi_eps(w, &SPEC).unwrap();
                assert!(v + 1e-12 >= best, "s = {s}, perturbed {v} < {best}");
            }
        }
    }
}
