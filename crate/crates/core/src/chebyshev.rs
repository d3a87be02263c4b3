//! Scalar Chebyshev machinery.
//!
//! Chebyshev polynomials of the first kind, T_k(ω) = cos(k arccos ω),
//! expansion coefficients by Gauss-Chebyshev quadrature, Clenshaw
//! evaluation, the kernel-polynomial reconstruction of spectral
//! densities, and the resolvent coefficients
//!
//!   c_k(z) = (-i / √(1-z²)) (2 - δ_{k0}) e^{-ik arccos z},
//!
//! for which  Σ_k c_k(z) T_k(x) = 1/(z - x)  when Im z > 0.
//!
//! Branch choice: `arccos` is the principal complex branch and the
//! square root is taken as √(1-z²) ≡ sin(arccos z), continuous with it.
//! With Im z > 0 this gives |e^{-i arccos z}| < 1, so the series terms
//! decay geometrically.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// T_k(ω) by the three-term recurrence. The argument is clamped to
/// [-1, 1] (inputs are accepted up to 1e-12 outside).
pub fn t_k(omega: f64, k: usize) -> f64 {
    let x = omega.clamp(-1.0, 1.0);
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev2 = 1.0;
            let mut prev = x;
            for _ in 2..=k {
                let next = 2.0 * x * prev - prev2;
                prev2 = prev;
                prev = next;
            }
            prev
        }
    }
}

/// A truncated Chebyshev series Σ c_k T_k(ω) on ω ∈ [-1, 1].
#[derive(Debug, Clone)]
pub struct ChebSeries {
    coeffs: Vec<Complex64>,
}

impl ChebSeries {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    /// Expansion coefficients of a real function up to order `k_max`,
    ///
    ///   c_k = (2-δ_{k0})/π ∫ f(ω) T_k(ω) / √(1-ω²) dω,
    ///
    /// evaluated by n-point Gauss-Chebyshev quadrature (nodes
    /// cos(π(j+1/2)/n), uniform weights). `n_quad` defaults to
    /// 4(k_max+1) and must be at least 2(k_max+1).
    pub fn from_function<F: Fn(f64) -> f64>(
        f: F,
        k_max: usize,
        n_quad: Option<usize>,
    ) -> Result<Self> {
        let n = n_quad.unwrap_or(4 * (k_max + 1));
        if n < 2 * (k_max + 1) {
            return Err(Error::InvalidArgument(format!(
                "n_quad = {n} too small; need at least {}",
                2 * (k_max + 1)
            )));
        }
        let thetas: Vec<f64> = (0..n)
            .map(|j| std::f64::consts::PI * (j as f64 + 0.5) / n as f64)
            .collect();
        let values: Vec<f64> = thetas.iter().map(|&t| f(t.cos())).collect();
        let coeffs = (0..=k_max)
            .map(|k| {
                let sum: f64 = thetas
                    .iter()
                    .zip(&values)
                    .map(|(&t, &v)| v * (k as f64 * t).cos())
                    .sum();
                let prefactor = if k == 0 { 1.0 } else { 2.0 };
                Complex64::new(prefactor * sum / n as f64, 0.0)
            })
            .collect();
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Σ c_k T_k(ω) by the Clenshaw recurrence.
    pub fn reconstruct(&self, omega: f64) -> Complex64 {
        clenshaw(&self.coeffs, omega.clamp(-1.0, 1.0))
    }
}

/// Clenshaw recurrence for Σ c_k T_k(x).
pub(crate) fn clenshaw(coeffs: &[Complex64], x: f64) -> Complex64 {
    let n = coeffs.len();
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    if n == 1 {
        return coeffs[0];
    }
    let two_x = 2.0 * x;
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for k in (1..n).rev() {
        let b = coeffs[k] + two_x * b1 - b2;
        b2 = b1;
        b1 = b;
    }
    coeffs[0] + x * b1 - b2
}

/// Chebyshev moments m_k = <χ0| T_k(H) |χ0> of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct MomentSeries {
    values: Vec<f64>,
}

impl MomentSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The trivial (Dirichlet) kernel g_k = 1.
pub fn dirichlet_kernel(len: usize) -> Vec<f64> {
    vec![1.0; len]
}

/// Kernel-polynomial reconstruction
///
///   f(ω) = 1/(π√(1-ω²)) [ g_0 μ_0 + 2 Σ_{k≥1} g_k μ_k T_k(ω) ].
pub fn kpm_reconstruct(moments: &MomentSeries, kernel: &[f64], omega: f64) -> Result<f64> {
    if kernel.len() != moments.len() {
        return Err(Error::InvalidArgument(format!(
            "kernel length {} != moment count {}",
            kernel.len(),
            moments.len()
        )));
    }
    if omega.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "|omega| = {} hits the weight singularity",
            omega.abs()
        )));
    }
    let coeffs: Vec<Complex64> = moments
        .values
        .iter()
        .zip(kernel)
        .enumerate()
        .map(|(k, (&m, &g))| {
            let pre = if k == 0 { 1.0 } else { 2.0 };
            Complex64::new(pre * g * m, 0.0)
        })
        .collect();
    let bracket = clenshaw(&coeffs, omega).re;
    Ok(bracket / (std::f64::consts::PI * (1.0 - omega * omega).sqrt()))
}

fn resolvent_prefactor(z: Complex64) -> Result<(Complex64, Complex64)> {
    if z.im == 0.0 {
        return Err(Error::InvalidArgument(
            "resolvent coefficients need Im z != 0".into(),
        ));
    }
    let theta = z.acos();
    let sin_theta = theta.sin();
    // -i / sqrt(1 - z^2), branch continuous with arccos
    let prefactor = Complex64::new(0.0, -1.0) / sin_theta;
    // e^{-i theta}
    let ratio = (Complex64::new(0.0, -1.0) * theta).exp();
    Ok((prefactor, ratio))
}

/// Resolvent expansion coefficient c_k(z); see the module docs for the
/// branch conventions. Requires Im z != 0.
pub fn resolvent_coeff(z: Complex64, k: usize) -> Result<Complex64> {
    let (prefactor, ratio) = resolvent_prefactor(z)?;
    let pre = if k == 0 { 1.0 } else { 2.0 };
    Ok(prefactor * pre * ratio.powu(k as u32))
}

/// All coefficients c_0(z) ... c_{k_max}(z) in one pass.
pub fn resolvent_coeffs(z: Complex64, k_max: usize) -> Result<Vec<Complex64>> {
    let (prefactor, ratio) = resolvent_prefactor(z)?;
    let mut out = Vec::with_capacity(k_max + 1);
    let mut power = Complex64::new(1.0, 0.0);
    for k in 0..=k_max {
        let pre = if k == 0 { 1.0 } else { 2.0 };
        out.push(prefactor * pre * power);
        power *= ratio;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn low_order_values() {
        for &w in &[-1.0, -0.3, 0.0, 0.5, 1.0] {
            assert_relative_eq!(t_k(w, 0), 1.0);
            assert_relative_eq!(t_k(w, 1), w);
        }
        assert_relative_eq!(t_k(0.5, 2), -0.5, epsilon = 1e-15);
        for k in 0..20 {
            assert_relative_eq!(t_k(-1.0, k), if k % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn recurrence_matches_cosine_form_to_high_order() {
        let grid: Vec<f64> = (0..=40).map(|i| -1.0 + i as f64 / 20.0).collect();
        let mut max_err: f64 = 0.0;
        for &w in &grid {
            for k in [0, 1, 2, 5, 17, 100, 501, 1000, 2000] {
                let exact = (k as f64 * w.acos()).cos();
                max_err = max_err.max((t_k(w, k) - exact).abs());
            }
        }
        assert!(max_err < 1e-10, "max deviation {max_err}");
    }

    #[test]
    fn coefficient_projections() {
        let s = ChebSeries::from_function(|w| w, 5, None).unwrap();
        assert_relative_eq!(s.coeffs()[1].re, 1.0, epsilon = 1e-12);
        for (k, c) in s.coeffs().iter().enumerate() {
            if k != 1 {
                assert!(c.norm() < 1e-12);
            }
        }
        let s = ChebSeries::from_function(|w| 2.0 * w * w - 1.0, 5, None).unwrap();
        assert_relative_eq!(s.coeffs()[2].re, 1.0, epsilon = 1e-12);
        for (k, c) in s.coeffs().iter().enumerate() {
            if k != 2 {
                assert!(c.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_size_guard() {
        assert!(ChebSeries::from_function(|w| w, 5, Some(11)).is_err());
        assert!(ChebSeries::from_function(|w| w, 5, Some(12)).is_ok());
    }

    #[test]
    fn exp_expansion_reconstructs() {
        let s = ChebSeries::from_function(f64::exp, 20, None).unwrap();
        let got = s.reconstruct(0.3);
        assert!((got.re - 0.3f64.exp()).abs() < 1e-12);
        assert!(got.im.abs() < 1e-14);

        // grid sweep at K = 30
        let s = ChebSeries::from_function(f64::exp, 30, None).unwrap();
        let mut max_err: f64 = 0.0;
        for i in 0..=100 {
            let w = -1.0 + 2.0 * i as f64 / 100.0;
            max_err = max_err.max((s.reconstruct(w).re - w.exp()).abs());
        }
        assert!(max_err < 1e-13, "max err {max_err}");
    }

    #[test]
    fn trivial_series_values() {
        let one = ChebSeries::new(vec![Complex64::new(1.0, 0.0)]);
        for &w in &[-0.9, 0.0, 0.7] {
            assert_relative_eq!(one.reconstruct(w).re, 1.0);
        }
        let t1 = ChebSeries::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert_relative_eq!(t1.reconstruct(0.25).re, 0.25);
    }

    #[test]
    fn kpm_delta_distribution_normalizes() {
        // moments of delta(x - 0.3): mu_k = T_k(0.3)
        let k_max = 200;
        let moments = MomentSeries::new((0..=k_max).map(|k| t_k(0.3, k)).collect());
        let kernel = dirichlet_kernel(k_max + 1);
        // trapezoid oracle: integral over (-1, 1) should be ~1
        let n = 20000;
        let a = -1.0 + 1e-6;
        let b = 1.0 - 1e-6;
        let h = (b - a) / n as f64;
        let mut integral = 0.0;
        for i in 0..=n {
            let w = a + i as f64 * h;
            let v = kpm_reconstruct(&moments, &kernel, w).unwrap();
            let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
            integral += weight * v * h;
        }
        assert!((integral - 1.0).abs() < 0.02, "integral = {integral}");
    }

    #[test]
    fn kpm_trivial_cases() {
        let zeros = MomentSeries::new(vec![0.0; 8]);
        let kernel = dirichlet_kernel(8);
        for &w in &[-0.5, 0.0, 0.9] {
            assert_relative_eq!(kpm_reconstruct(&zeros, &kernel, w).unwrap(), 0.0);
        }
        let k0 = MomentSeries::new(vec![1.0]);
        let v = kpm_reconstruct(&k0, &dirichlet_kernel(1), 0.5).unwrap();
        let want = 1.0 / (std::f64::consts::PI * (1.0 - 0.25f64).sqrt());
        assert_relative_eq!(v, want, epsilon = 1e-14);
        assert!(kpm_reconstruct(&k0, &dirichlet_kernel(1), 1.0).is_err());
        assert!(kpm_reconstruct(&k0, &dirichlet_kernel(2), 0.0).is_err());
    }

    #[test]
    fn resolvent_coefficient_decays_and_guards() {
        let z = Complex64::new(0.0, 0.1);
        let theta = z.acos();
        let ratio = (Complex64::new(0.0, -1.0) * theta).exp();
        assert!(ratio.norm() < 1.0);
        assert!(resolvent_coeff(Complex64::new(0.5, 0.0), 3).is_err());
        assert!(resolvent_coeff(Complex64::new(2.0, 0.0), 0).is_err());
    }

    #[test]
    fn resolvent_prefactors() {
        let z = Complex64::new(0.2, 0.05);
        let c0 = resolvent_coeff(z, 0).unwrap();
        let c1 = resolvent_coeff(z, 1).unwrap();
        let theta = z.acos();
        let ratio = (Complex64::new(0.0, -1.0) * theta).exp();
        // k = 0 prefactor 1, k >= 1 prefactor 2
        assert!((c1 / c0 / ratio - 2.0).norm() < 1e-12);
    }

    #[test]
    fn resolvent_series_sums_to_pole() {
        let z = Complex64::new(0.2, 0.05);
        let x = -0.4;
        let coeffs = resolvent_coeffs(z, 4000).unwrap();
        let sum: Complex64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * t_k(x, k))
            .sum();
        let exact = 1.0 / (z - x);
        assert!((sum - exact).norm() < 1e-6, "err {}", (sum - exact).norm());
    }

    #[test]
    fn resolvent_series_converges_geometrically() {
        // error after K terms shrinks by ~|e^{-i arccos z}| per term
        let z = Complex64::new(0.1, 0.2);
        let x = 0.55;
        let exact = 1.0 / (z - x);
        let coeffs = resolvent_coeffs(z, 400).unwrap();
        let mut partial = Complex64::new(0.0, 0.0);
        let mut errs = Vec::new();
        for (k, c) in coeffs.iter().enumerate() {
            partial += c * t_k(x, k);
            if k % 100 == 99 {
                errs.push((partial - exact).norm());
            }
        }
        let rate = (Complex64::new(0.0, -1.0) * z.acos()).exp().norm();
        let predicted = rate.powi(100);
        for pair in errs.windows(2) {
            let observed = pair[1] / pair[0];
            assert!(
                observed < predicted * 10.0,
                "observed {observed}, predicted {predicted}"
            );
        }
    }

    proptest! {
        #[test]
        fn clenshaw_matches_naive_summation(seed in 0u64..200) {
            use rand::prelude::*;
            use rand_chacha::ChaCha12Rng;
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let coeffs: Vec<Complex64> = (0..200)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let scale: f64 = coeffs.iter().map(|c| c.norm()).sum();
            let s = ChebSeries::new(coeffs.clone());
            let w = rng.gen_range(-1.0..1.0);
            let naive: Complex64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * t_k(w, k))
                .sum();
            prop_assert!((s.reconstruct(w) - naive).norm() < 1e-10 * scale);
        }

        #[test]
        fn series_evaluation_routes_agree(w in -1.0f64..1.0) {
            let s = ChebSeries::from_function(f64::exp, 25, None).unwrap();
            let scale: f64 = s.coeffs().iter().map(|c| c.norm()).sum();
            let naive: Complex64 = s
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, c)| c * t_k(w, k))
                .sum();
            prop_assert!((s.reconstruct(w) - naive).norm() < 1e-10 * scale);
        }
    }
}
