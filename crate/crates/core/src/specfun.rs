//! Lambert W₀, the cardinal sine with its first two derivatives, and
//! harmonic numbers.

use crate::error::{Error, Result};
use num_traits::Float;

const E: f64 = core::f64::consts::E;

/// Principal branch of the Lambert function on [0, ∞).
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain("lambert_w0 requires x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if x < E { x } else { x.ln() - x.ln().ln() };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-15 * w.abs().max(1e-300) {
            break;
        }
    }
    Ok(w)
}

/// W₀(eᵃ), evaluated without forming eᵃ once it would overflow.
pub fn lambert_w0_of_exp(a: f64) -> f64 {
    if a <= 700.0 {
        return lambert_w0(a.exp()).unwrap_or(0.0);
    }
    // w + ln w = a
    let mut w = a - a.max(2.0).ln();
    for _ in 0..50 {
        let f = w + w.ln() - a;
        let step = f / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 1e-16 * w {
            break;
        }
    }
    w
}

/// `s = sinc(x)`, `psi = −sinc′(x)`, `phi = −sinc″(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincTriple {
    pub s: f64,
    pub psi: f64,
    pub phi: f64,
}

pub fn sinc_triple(x: f64) -> SincTriple {
    let ax = x.abs();
    let (s, d1, d2) = if ax < 1e-2 {
        let x2 = ax * ax;
        let x4 = x2 * x2;
        (1.0 - x2 / 6.0 + x4 / 120.0, -ax / 3.0 + ax * x2 / 30.0, -1.0 / 3.0 + x2 / 10.0 - x4 / 168.0)
    } else {
        let (sn, cs) = (ax.sin(), ax.cos());
        let x2 = ax * ax;
        (
            sn / ax,
            cs / ax - sn / x2,
            2.0 * sn / (x2 * ax) - 2.0 * cs / x2 - sn / ax,
        )
    };
    // sinc′ is odd
    let d1 = if x < 0.0 { -d1 } else { d1 };
    SincTriple { s, psi: -d1, phi: -d2 }
}

pub fn sinc(x: f64) -> f64 {
    sinc_triple(x).s
}

pub fn psi(x: f64) -> f64 {
    sinc_triple(x).psi
}

pub fn phi(x: f64) -> f64 {
    sinc_triple(x).phi
}

/// First positive zero of φ = −sinc″, by bisection on [1.5, 2.5].
pub fn first_zero_of_phi() -> f64 {
    let (mut lo, mut hi) = (1.5, 2.5);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SincReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest slack over all checks.
    pub worst: f64,
}

impl SincReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, slack: f64) {
        if self.checked == 0 || slack < self.worst {
            self.worst = slack;
        }
        self.checked += 1;
        if slack < -1e-15 {
            self.violations += 1;
        }
    }
}

/// Grid check of the three properties used by the sine bounds, for any
/// candidate implementation `f` of the sinc triple:
/// the 2/|x| envelope on sinc, sinc′ and sinc″ over [−50, 50],
/// φ non-negative decreasing and ψ non-negative increasing on [0, x₀].
pub fn sinc_property_check(f: impl Fn(f64) -> SincTriple, n: usize) -> SincReport {
    let mut rep = SincReport::default();
    for k in 0..n {
        let x = -50.0 + 100.0 * (k as f64 + 0.5) / n as f64;
        let t = f(x);
        let env = 2.0 / x.abs();
        rep.record(env - t.s.abs());
        rep.record(env - t.psi.abs());
        rep.record(env - t.phi.abs());
    }
    let (mut lo, mut hi) = (1.5, 2.5);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid).phi > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut prev = f(0.0);
    for k in 0..=n {
        let t = f(lo * k as f64 / n as f64);
        rep.record(t.phi);
        rep.record(t.psi);
        rep.record(prev.phi - t.phi);
        rep.record(t.psi - prev.psi);
        prev = t;
    }
    rep
}

pub fn harmonic(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("harmonic requires m >= 1"));
    }
    Ok((1..=m).map(|k| 1.0 / k as f64).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn bisect_w(x: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, x.max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn w0_known_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        let w1 = lambert_w0(1.0).unwrap();
        assert!((w1 - bisect_w(1.0)).abs() < 1e-12);
        assert!((w1 - 0.5671432904).abs() < 1e-10);
        assert!(lambert_w0(-1e-3).is_err());
    }

    #[test]
    fn w0_residual() {
        for k in -12..=300 {
            let x = 10f64.powf(k as f64 * 0.5);
            if !x.is_finite() {
                continue;
            }
            let w = lambert_w0(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-12 * x.max(1.0), "x={x}");
        }
    }

    #[test]
    fn w0_of_exp() {
        assert!((lambert_w0_of_exp(1.0) - 1.0).abs() < 1e-15);
        assert!((lambert_w0_of_exp(0.0) - bisect_w(1.0)).abs() < 1e-12);
        let w = lambert_w0_of_exp(1000.0);
        assert!((w + w.ln() - 1000.0).abs() < 1e-10);
        assert!(w > 993.0 && w < 993.2);
        for a in [-20.0, -1.0, 3.0, 50.0, 300.0, 699.0] {
            let direct = lambert_w0(f64::exp(a)).unwrap();
            assert!((lambert_w0_of_exp(a) - direct).abs() <= 1e-10 * direct);
        }
        // both branches agree across the switch
        let below = lambert_w0_of_exp(700.0);
        let above = lambert_w0_of_exp(700.0 + 1e-9);
        assert!((below - above).abs() < 1e-8);
    }

    #[test]
    fn sinc_at_zero_and_pi() {
        let t = sinc_triple(0.0);
        assert_eq!((t.s, t.psi, t.phi), (1.0, 0.0, 1.0 / 3.0));
        let t = sinc_triple(PI);
        assert!(t.s.abs() < 1e-15);
        assert!((t.psi - 1.0 / PI).abs() < 1e-15);
        assert!((t.phi + 2.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn sinc_parity() {
        for x in [0.005, 0.3, 2.0, 17.5] {
            let (p, n) = (sinc_triple(x), sinc_triple(-x));
            assert_eq!(p.s, n.s);
            assert_eq!(p.phi, n.phi);
            assert_eq!(p.psi, -n.psi);
        }
    }

    #[test]
    fn taylor_and_closed_form_agree_at_crossover() {
        let x: f64 = 1e-2;
        let (sn, cs) = (x.sin(), x.cos());
        let closed_phi = -(2.0 * sn / x.powi(3) - 2.0 * cs / (x * x) - sn / x);
        let taylor = sinc_triple(x * (1.0 - 1e-12));
        assert!((taylor.phi - closed_phi).abs() < 1e-9);
        assert!((taylor.s - sn / x).abs() < 1e-13);
    }

    #[test]
    fn phi_zero() {
        let x0 = first_zero_of_phi();
        assert!((x0 - 2.0815).abs() < 1e-3);
        assert!(phi(x0).abs() <= 1e-9);
        assert!(phi(2.0) > 0.0 && phi(2.2) < 0.0);
    }

    #[test]
    fn sinc_properties() {
        assert!(sinc_property_check(sinc_triple, 20_000).holds());
        let flipped = |x: f64| {
            let t = sinc_triple(x);
            SincTriple { phi: -t.phi, ..t }
        };
        assert!(!sinc_property_check(flipped, 20_000).holds());
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(1).unwrap(), 1.0);
        assert!((harmonic(4).unwrap() - 25.0 / 12.0).abs() < 1e-15);
        assert!(harmonic(100).unwrap() <= 1.0 + 100f64.ln());
        assert!(harmonic(0).is_err());
    }
}
