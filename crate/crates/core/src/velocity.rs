//! Polynomial velocity laws `V`, the induced flux `f(x) = x V(x)` and the
//! quadratic-entropy flux.

/// Polynomial with real coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// `x · p(x)`.
    pub fn times_x(&self) -> Polynomial {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend_from_slice(&self.coeffs);
        Polynomial::new(coeffs)
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Polynomial {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c / (k as f64 + 1.0)),
        );
        Polynomial::new(coeffs)
    }

    /// Real roots in `[lo, hi]`, located by sign changes on a fine
    /// subdivision and refined by bisection. Roots of even multiplicity
    /// that do not change sign are picked up when a sample hits them exactly.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        if self.degree() == 0 || !(lo < hi) {
            return Vec::new();
        }
        let pieces = 64 * self.degree();
        let h = (hi - lo) / pieces as f64;
        let mut roots = Vec::new();
        let mut a = lo;
        let mut fa = self.eval(a);
        for k in 1..=pieces {
            let b = if k == pieces { hi } else { lo + k as f64 * h };
            let fb = self.eval(b);
            if fa == 0.0 {
                roots.push(a);
            } else if fa * fb < 0.0 {
                roots.push(self.bisect(a, b, fa));
            }
            a = b;
            fa = fb;
        }
        if fa == 0.0 {
            roots.push(hi);
        }
        roots.dedup();
        roots
    }

    fn bisect(&self, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = self.eval(m);
            if fm == 0.0 {
                return m;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        0.5 * (a + b)
    }

    /// Maximum of the polynomial on `[lo, hi]`, attained at an endpoint or a
    /// critical point.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        self.extremes_on(lo, hi).1
    }

    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        self.extremes_on(lo, hi).0
    }

    pub fn max_abs_on(&self, lo: f64, hi: f64) -> f64 {
        let (mn, mx) = self.extremes_on(lo, hi);
        mn.abs().max(mx.abs())
    }

    fn extremes_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let candidates = self
            .derivative()
            .roots_in(lo, hi)
            .into_iter()
            .chain([lo, hi]);
        candidates.fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), x| {
            let y = self.eval(x);
            (mn.min(y), mx.max(y))
        })
    }
}

/// A velocity law `V` together with the derived quantities the solvers use.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityLaw {
    velocity: Polynomial,
    velocity_prime: Polynomial,
    flux: Polynomial,
    flux_prime: Polynomial,
}

impl VelocityLaw {
    pub fn new(velocity: Polynomial) -> Self {
        let flux = velocity.times_x();
        Self {
            velocity_prime: velocity.derivative(),
            flux_prime: flux.derivative(),
            flux,
            velocity,
        }
    }

    /// `V(x) = 1 − x²`.
    pub fn quadratic_greenshields() -> Self {
        Self::new(Polynomial::new(vec![1.0, 0.0, -1.0]))
    }

    #[inline]
    pub fn v(&self, x: f64) -> f64 {
        self.velocity.eval(x)
    }

    #[inline]
    pub fn v_prime(&self, x: f64) -> f64 {
        self.velocity_prime.eval(x)
    }

    /// `f(x) = x V(x)`.
    #[inline]
    pub fn flux(&self, x: f64) -> f64 {
        self.flux.eval(x)
    }

    #[inline]
    pub fn flux_prime(&self, x: f64) -> f64 {
        self.flux_prime.eval(x)
    }

    pub fn velocity(&self) -> &Polynomial {
        &self.velocity
    }

    pub fn velocity_prime(&self) -> &Polynomial {
        &self.velocity_prime
    }

    pub fn flux_polynomial(&self) -> &Polynomial {
        &self.flux
    }

    pub fn flux_prime_polynomial(&self) -> &Polynomial {
        &self.flux_prime
    }

    /// Entropy flux `β(x) = ∫₀ˣ α'(s) f'(s) ds` for `α(x) = x²`.
    pub fn quadratic_entropy_flux(&self) -> Polynomial {
        let integrand = self.flux_prime.times_x();
        let doubled = Polynomial::new(integrand.coeffs().iter().map(|c| 2.0 * c).collect());
        doubled.antiderivative()
    }

    /// Whether `x ↦ x V(x)` is strictly concave on `[0, upper]`, i.e.
    /// `x V''(x) + 2 V'(x) < 0` almost everywhere there. A nonzero
    /// polynomial has isolated roots, so `f'' ≤ 0` suffices.
    pub fn flux_strictly_concave_on(&self, upper: f64) -> bool {
        let second = self.flux_prime.derivative();
        let nonzero = second.coeffs().iter().any(|&c| c != 0.0);
        nonzero && second.max_on(0.0, upper) <= 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_derivatives() {
        let p = Polynomial::new(vec![1.0, 0.0, -1.0]);
        assert_eq!(p.eval(0.5), 0.75);
        assert_eq!(p.derivative().coeffs(), &[0.0, -2.0]);
        assert_eq!(p.times_x().coeffs(), &[0.0, 1.0, 0.0, -1.0]);
        assert_eq!(Polynomial::new(vec![2.0, 0.0, 0.0]).degree(), 0);
    }

    #[test]
    fn roots_of_cubic_flux_derivative() {
        // f'(x) = 1 - 3x²
        let law = VelocityLaw::quadratic_greenshields();
        let roots = law.flux_prime_polynomial().roots_in(-1.0, 1.0);
        assert_eq!(roots.len(), 2);
        let r = (1.0f64 / 3.0).sqrt();
        assert!((roots[0] + r).abs() < 1e-14);
        assert!((roots[1] - r).abs() < 1e-14);
        assert!(law.flux_prime_polynomial().roots_in(0.7, 0.9).is_empty());
    }

    #[test]
    fn extremes_use_critical_points() {
        let law = VelocityLaw::quadratic_greenshields();
        let f = law.flux_polynomial();
        let r = (1.0f64 / 3.0).sqrt();
        assert!((f.max_on(0.0, 1.0) - (r - r * r * r)).abs() < 1e-14);
        assert_eq!(f.min_on(0.0, 1.0), 0.0);
        assert_eq!(law.flux_prime_polynomial().max_abs_on(0.0, 0.75), 1.0);
        assert_eq!(law.velocity_prime().max_abs_on(0.0, 0.75), 1.5);
    }

    #[test]
    fn entropy_flux_closed_form() {
        // β(x) = x² − (3/2)x⁴
        let law = VelocityLaw::quadratic_greenshields();
        let beta = law.quadratic_entropy_flux();
        assert_eq!(beta.coeffs(), &[0.0, 0.0, 1.0, 0.0, -1.5]);
        // β' = α' f'
        for x in [0.0, 0.1, 0.4, 0.75] {
            let lhs = beta.derivative().eval(x);
            let rhs = 2.0 * x * law.flux_prime(x);
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn concavity_check() {
        let law = VelocityLaw::quadratic_greenshields();
        assert!(law.flux_strictly_concave_on(0.75));
        let lwr = VelocityLaw::new(Polynomial::new(vec![1.0, -1.0]));
        assert!(lwr.flux_strictly_concave_on(1.0));
        let linear = VelocityLaw::new(Polynomial::new(vec![1.0]));
        assert!(!linear.flux_strictly_concave_on(1.0));
        let convex = VelocityLaw::new(Polynomial::new(vec![1.0, 1.0]));
        assert!(!convex.flux_strictly_concave_on(1.0));
    }
}
