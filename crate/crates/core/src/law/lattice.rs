//! Arithmetic-progression detection for finite supports.
//!
//! A support {v_1 < … < v_m} is declared lattice when all values sit on
//! x0 + d·Z for a maximal span d > 0. Differences are rationalized by
//! continued fractions at a 1e-9 relative tolerance with the denominator
//! capped at 1e4, so decimal-grained data is recognized while
//! near-irrational spacings are classified non-lattice rather than
//! approximated by a huge common divisor.

use super::LatticeInfo;

const REL_TOL: f64 = 1e-9;
const DENOM_CAP: u64 = 10_000;
const LCM_CAP: u64 = 10_000_000;

/// Best rational p/q ≈ r (within REL_TOL, q ≤ cap) by continued fractions.
fn rationalize(r: f64, cap: u64) -> Option<(u64, u64)> {
    if !r.is_finite() || r <= 0.0 {
        return None;
    }
    let tol = REL_TOL * r.max(1.0);
    let mut x = r;
    let (mut p_prev, mut q_prev) = (1u64, 0u64);
    let (mut p, mut q) = (x.floor() as u64, 1u64);
    loop {
        if (r - p as f64 / q as f64).abs() <= tol {
            return Some((p, q));
        }
        let a = x.floor();
        let frac = x - a;
        if frac <= f64::EPSILON * x.abs().max(1.0) {
            return None; // expansion terminated without hitting tolerance
        }
        x = 1.0 / frac;
        let ax = x.floor();
        if ax > u64::MAX as f64 {
            return None;
        }
        let ai = ax as u64;
        let p_next = ai.checked_mul(p).and_then(|v| v.checked_add(p_prev))?;
        let q_next = ai.checked_mul(q).and_then(|v| v.checked_add(q_prev))?;
        if q_next > cap {
            return None;
        }
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Largest g with every value ≈ integer·g, over strictly positive inputs.
pub(crate) fn rational_gcd(values: &[f64]) -> Option<f64> {
    debug_assert!(values.iter().all(|&v| v > 0.0));
    let base = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut ratios = Vec::with_capacity(values.len());
    for &v in values {
        ratios.push(rationalize(v / base, DENOM_CAP)?);
    }
    // common grid: base/L with L = lcm of denominators; g = base·gcd(p_i·L/q_i)/L
    let mut l: u64 = 1;
    for &(_, q) in &ratios {
        l = l / gcd(l, q) * q;
        if l > LCM_CAP {
            return None;
        }
    }
    let mut g: u64 = 0;
    for &(p, q) in &ratios {
        g = gcd(g, p.checked_mul(l / q)?);
    }
    if g == 0 {
        return None;
    }
    Some(base * g as f64 / l as f64)
}

/// Lattice of a strictly increasing value list; None when incommensurate.
///
/// Single-value convention: span = the value itself (1 if it is 0), offset 0,
/// so that 0 stays on the lattice; maximality is vacuous there.
pub(crate) fn detect(values: &[f64]) -> Option<LatticeInfo> {
    match values {
        [] => None,
        [v] => {
            let span = if *v > REL_TOL { *v } else { 1.0 };
            Some(LatticeInfo { span, offset: 0.0 })
        }
        _ => {
            let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
            let span = rational_gcd(&diffs)?;
            let shifts = values[0] / span;
            let offset = if (shifts - shifts.round()).abs() <= REL_TOL * shifts.abs().max(1.0) {
                0.0
            } else {
                values[0] - span * (values[0] / span).floor()
            };
            for &v in values {
                let k = (v - offset) / span;
                if (k - k.round()).abs() > REL_TOL * k.abs().max(1.0) {
                    return None;
                }
            }
            Some(LatticeInfo { span, offset })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integer_support() {
        let l = detect(&[1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(l.span, 1.0);
        assert_eq!(l.offset, 0.0);
    }

    #[test]
    fn shifted_support_keeps_offset() {
        let l = detect(&[1.5, 2.5]).unwrap();
        assert_relative_eq!(l.span, 1.0);
        assert_relative_eq!(l.offset, 0.5);
    }

    #[test]
    fn decimal_grid_is_recognized() {
        let l = detect(&[0.1, 0.25]).unwrap();
        assert_relative_eq!(l.span, 0.15, epsilon = 1e-12);
        assert_relative_eq!(l.offset, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn maximal_span_over_uneven_gaps() {
        let l = detect(&[0.2, 0.5, 1.1]).unwrap(); // gaps 0.3 and 0.6
        assert_relative_eq!(l.span, 0.3, epsilon = 1e-12);
        assert_relative_eq!(l.offset, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn two_atoms_are_always_lattice() {
        let l = detect(&[1.0, 1.0 + std::f64::consts::PI]).unwrap();
        assert_relative_eq!(l.span, std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn irrational_gap_ratio_rejected() {
        assert!(detect(&[0.0, 1.0, 1.0 + std::f64::consts::PI]).is_none());
    }

    #[test]
    fn single_atom_conventions() {
        let l = detect(&[2.5]).unwrap();
        assert_relative_eq!(l.span, 2.5);
        assert_eq!(l.offset, 0.0);
        let z = detect(&[0.0]).unwrap();
        assert_relative_eq!(z.span, 1.0);
    }

    #[test]
    fn value_gcd_for_embedding() {
        assert_relative_eq!(rational_gcd(&[0.3, 0.5]).unwrap(), 0.1, epsilon = 1e-12);
        assert_relative_eq!(rational_gcd(&[2.0, 6.0]).unwrap(), 2.0);
        assert!(rational_gcd(&[1.0, std::f64::consts::PI]).is_none());
    }
}
