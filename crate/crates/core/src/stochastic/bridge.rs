//! Sub-step models for the supremum of an observable between two samples.
//!
//! Between consecutive samples the path is treated as a Brownian bridge with
//! the dispersion frozen at the left endpoint. Smooth observables use the
//! exact maximum law of a one-dimensional bridge; logarithmic singularities
//! use the bridge occupation density at the singular point, for which
//! P(dist < ε) ≈ Q / log(1/ε) with
//! Q = K₀(√(AB)/τ)·exp(−(A+B−C)/(2τ)).

use num_complex::Complex64 as C64;
use rand::RngCore;

use super::path::open_uniform;

/// e^x·K₀(x) for x > 0 (polynomial approximations, relative error below 2e-7).
pub fn bessel_k0_scaled(x: f64) -> f64 {
    assert!(x > 0.0, "K0 needs a positive argument");
    if x <= 2.0 {
        let t = x / 3.75;
        let t2 = t * t;
        let i0 = 1.0
            + t2 * (3.5156229
                + t2 * (3.0899424 + t2 * (1.2067492 + t2 * (0.2659732 + t2 * (0.0360768 + t2 * 0.0045813)))));
        let y = x * x / 4.0;
        let k0 = -(x / 2.0).ln() * i0
            + (-0.57721566
                + y * (0.42278420
                    + y * (0.23069756 + y * (0.03488590 + y * (0.00262698 + y * (0.00010750 + y * 0.0000074))))));
        k0 * x.exp()
    } else {
        let y = 2.0 / x;
        let p = 1.25331414
            + y * (-0.07832358
                + y * (0.02189568 + y * (-0.01062446 + y * (0.00587872 + y * (-0.00251540 + y * 0.00053208)))));
        p / x.sqrt()
    }
}

pub fn bessel_k0(x: f64) -> f64 {
    bessel_k0_scaled(x) * (-x).exp()
}

/// Occupation weight Q of a planar standard Brownian bridge of duration `tau`
/// at a point with squared distances `a2` (to the start), `b2` (to the end);
/// `c2` is the squared start-to-end distance.
pub fn bridge_hitting_weight(a2: f64, b2: f64, c2: f64, tau: f64) -> f64 {
    let x = (a2 * b2).sqrt() / tau;
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let expo = x + (a2 + b2 - c2) / (2.0 * tau);
    if expo > 700.0 {
        return 0.0;
    }
    bessel_k0_scaled(x) * (-expo).exp()
}

/// Maximum of a driftless one-dimensional Brownian bridge from `x0` to `x1`
/// with variance rate `v` over `tau`, driven by a uniform `u` in (0, 1].
pub fn bridge_max_1d(x0: f64, x1: f64, v: f64, tau: f64, u: f64) -> f64 {
    let d = x1 - x0;
    0.5 * (x0 + x1 + (d * d - 2.0 * v * tau * u.ln()).sqrt())
}

/// Local data of a logarithmic singularity ν·log(1/dist) near one step.
///
/// Coordinates are standardized so that the path is a standard planar Brownian
/// motion along the normal direction of the zero set; `zero` is the zero and
/// `end` the right endpoint, both relative to the left endpoint.
#[derive(Debug, Clone, Copy)]
pub struct LogSingularStep {
    pub u_start: f64,
    pub u_end: f64,
    pub zero: C64,
    pub end: C64,
    pub multiplicity: f64,
    pub tau: f64,
}

impl LogSingularStep {
    pub fn weight(&self) -> f64 {
        let a2 = self.zero.norm_sqr();
        let b2 = (self.end - self.zero).norm_sqr();
        bridge_hitting_weight(a2, b2, self.end.norm_sqr(), self.tau)
    }

    /// Samples the supremum of ν·log(1/dist) + c over the step, returning
    /// `(full, reduced)` where the reduced value is the full one divided by ν.
    pub fn sample(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        let nu = self.multiplicity;
        let q = self.weight();
        let ends = self.u_start.max(self.u_end);
        if q <= 0.0 {
            return (ends, ends / nu);
        }
        let c = self.u_start + nu * self.zero.norm().ln();
        let s = c + nu * q / open_uniform(rng);
        let full = s.max(ends);
        (full, full / nu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k0_reference_values() {
        let refs = [
            (0.1, 2.4270690247020164),
            (0.5, 0.9244190712276656),
            (1.0, 0.42102443824070823),
            (2.0, 0.1138938727495334),
            (5.0, 0.0036910983340425942),
            (20.0, 5.741237815336524e-10),
        ];
        for (x, k) in refs {
            let rel = (bessel_k0(x) - k).abs() / k;
            assert!(rel < 1e-6, "x={x}: rel {rel}");
        }
    }

    #[test]
    fn bridge_weight_matches_green_integral() {
        // π ∫ p_s(a,z0) p_{τ−s}(z0,b) / p_τ(a,b) ds by midpoint quadrature.
        let heat = |s: f64, d2: f64| (-d2 / (2.0 * s)).exp() / (2.0 * std::f64::consts::PI * s);
        for (a2, b2, c2, tau) in [(0.01, 0.02, 0.005, 0.01), (0.004, 0.009, 0.02, 0.01), (0.5, 0.3, 0.1, 1.0)] {
            let n = 200_000;
            let h = tau / n as f64;
            let mut acc = 0.0;
            for j in 0..n {
                let s = (j as f64 + 0.5) * h;
                acc += heat(s, a2) * heat(tau - s, b2);
            }
            let green = std::f64::consts::PI * acc * h / heat(tau, c2);
            let q = bridge_hitting_weight(a2, b2, c2, tau);
            assert!((q - green).abs() / green < 1e-5, "{q} vs {green}");
        }
    }

    #[test]
    fn bridge_max_is_at_least_endpoints() {
        for u in [1.0, 0.5, 1e-9] {
            let m = bridge_max_1d(0.3, -0.2, 1.0, 0.01, u);
            assert!(m >= 0.3);
        }
        assert!((bridge_max_1d(0.3, -0.2, 1.0, 0.01, 1.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn far_zero_gives_endpoint_max() {
        let step = LogSingularStep {
            u_start: 0.1,
            u_end: 0.2,
            zero: C64::new(3.0, 0.0),
            end: C64::new(0.05, 0.0),
            multiplicity: 1.0,
            tau: 0.01,
        };
        assert_eq!(step.weight(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(step.sample(&mut rng), (0.2, 0.2));
    }
}
