//! Elliptic symbols `|a(xi)|_p^beta`, heat multipliers and heat kernels.
//!
//! A homogeneous polynomial `a` of degree `d` with `a(xi) = 0` only at the
//! origin satisfies the two-sided bound
//! `C0 ||xi||^d <= |a(xi)|_p <= C1 ||xi||^d`; on a lattice the constants are
//! certified empirically by scanning the unit shell at working precision.
//! The heat kernel is the inverse transform of the frequency multiplier
//! `exp(-t |a(xi)|_p^beta)`; it is a probability density with the semigroup
//! property, and in one dimension its shells admit a closed series used here
//! as an independent oracle:
//!
//! ```text
//! Gamma(t, |x| = p^-n) = (1 - 1/p) sum_{g <= n} p^g exp(-t p^(g b))
//!                        - p^n exp(-t p^((n+1) b))
//! ```
//!
//! obtained by splitting the inverse Fourier integral over the shells
//! `|xi| = p^g` and using `int_{B_g} chi_p(x xi) dxi = p^g Omega(p^g |x|)`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::lattice::{Lattice, LatticeField, Side};
use crate::padic::{int_valuation, pow_rational};
use crate::spectral::{RadialDensity, SpectralMeasure};
use crate::transform::TransformPlan;
use crate::{Error, Result};

/// Truncation-mass budget used when a lattice is planned for a kernel.
pub const DEFAULT_EPS_TAIL: f64 = 1e-8;

/// A monomial `coefficient * xi_0^{e_0} ... xi_{N-1}^{e_{N-1}}`.
pub type Monomial = (Vec<u32>, BigInt);

/// An elliptic polynomial symbol `|a(xi)|_p^beta` with certified norm bounds.
#[derive(Debug, Clone)]
pub struct EllipticSymbol {
    prime: u32,
    dim: u32,
    monomials: Vec<Monomial>,
    degree: u32,
    beta: f64,
    c0: BigRational,
    c1: BigRational,
}

fn monomial_degree(m: &Monomial) -> u32 {
    m.0.iter().sum()
}

fn eval_poly(monomials: &[Monomial], coords: &[u64]) -> BigInt {
    // i128 fast path with checked arithmetic, falling back to big integers
    if let Some(v) = eval_poly_i128(monomials, coords) {
        return BigInt::from(v);
    }
    let mut acc = BigInt::zero();
    for (exps, coeff) in monomials {
        let mut term = coeff.clone();
        for (c, &e) in exps.iter().enumerate() {
            term *= BigInt::from(coords[c]).pow(e);
        }
        acc += term;
    }
    acc
}

fn eval_poly_i128(monomials: &[Monomial], coords: &[u64]) -> Option<i128> {
    let mut acc: i128 = 0;
    for (exps, coeff) in monomials {
        let mut term: i128 = coeff.to_i128()?;
        for (c, &e) in exps.iter().enumerate() {
            for _ in 0..e {
                term = term.checked_mul(coords[c] as i128)?;
            }
        }
        acc = acc.checked_add(term)?;
    }
    Some(acc)
}

/// Verify homogeneity algebraically and ellipticity empirically on the unit
/// shell of `lattice`, at the lattice's working precision. Returns the
/// observed `(C0, C1)`; homogeneity extends them to all shells.
pub fn check_elliptic(
    monomials: &[Monomial],
    p: u32,
    lattice: &Lattice,
) -> Result<(BigRational, BigRational)> {
    if monomials.is_empty() {
        return Err(Error::BadParameter("symbol polynomial is zero".into()));
    }
    let dim = lattice.dim() as usize;
    for (exps, _) in monomials {
        if exps.len() != dim {
            return Err(Error::DimensionMismatch(exps.len(), dim));
        }
    }
    let degree = monomial_degree(&monomials[0]);
    for m in monomials {
        let d = monomial_degree(m);
        if d != degree {
            return Err(Error::NotHomogeneous {
                expected: degree,
                found: d,
            });
        }
    }
    if lattice.support() < 0 || lattice.resolution() < 1 {
        return Err(Error::BadParameter(
            "unit-shell certification needs M >= 0 and m >= 1".into(),
        ));
    }
    // Unit-shell representatives are p^(-M) k with min ord(k_c) = M; their
    // unit parts u = k / p^M are determined modulo p^m, so a valuation can
    // only be certified below m digits.
    let precision = lattice.resolution();
    let scale = (p as u64).pow(lattice.support() as u32);
    let mut min_v = i64::MAX;
    let mut max_v = i64::MIN;
    for i in 0..lattice.cells() {
        if lattice.norm_exponent(i) != Some(0) {
            continue;
        }
        let unit: Vec<u64> = lattice.coords(i).iter().map(|&k| k / scale).collect();
        let value = eval_poly(monomials, &unit);
        match int_valuation(&value, p) {
            None => {
                return Err(Error::NotElliptic {
                    cell: i,
                    valuation: None,
                })
            }
            Some(v) if v >= precision => {
                return Err(Error::NotElliptic {
                    cell: i,
                    valuation: Some(v),
                })
            }
            Some(v) => {
                min_v = min_v.min(v);
                max_v = max_v.max(v);
            }
        }
    }
    if min_v > max_v {
        return Err(Error::BadParameter(
            "lattice has no unit shell to certify on".into(),
        ));
    }
    // |a| = p^(-v): the largest valuation gives the smallest bound
    Ok((pow_rational(p, -max_v), pow_rational(p, -min_v)))
}

impl EllipticSymbol {
    /// Certify `a` on the unit shell of `lattice` and package it with the
    /// exponent `beta`.
    pub fn certify(
        monomials: Vec<Monomial>,
        beta: f64,
        p: u32,
        lattice: &Lattice,
    ) -> Result<EllipticSymbol> {
        if beta <= 0.0 {
            return Err(Error::BadParameter("beta must be positive".into()));
        }
        let (c0, c1) = check_elliptic(&monomials, p, lattice)?;
        Ok(EllipticSymbol {
            prime: p,
            dim: lattice.dim(),
            degree: monomial_degree(&monomials[0]),
            monomials,
            beta,
            c0,
            c1,
        })
    }

    /// The one-dimensional symbol `a(xi) = xi`, for which `C0 = C1 = 1`.
    pub fn identity_1d(p: u32, beta: f64) -> Result<EllipticSymbol> {
        let lattice = Lattice::build(p, 1, 0, 1)?;
        EllipticSymbol::certify(vec![(vec![1], BigInt::from(1))], beta, p, &lattice)
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Certified empirical bounds `(C0, C1)`.
    pub fn bounds(&self) -> (&BigRational, &BigRational) {
        (&self.c0, &self.c1)
    }

    /// `d * beta`, the decay exponent entering every integrability criterion.
    pub fn dbeta(&self) -> f64 {
        self.degree as f64 * self.beta
    }

    /// Exact evaluation of `|a(xi)|_p^beta` over a frequency lattice: for a
    /// representative `xi = p^(-m) k` the homogeneous polynomial gives
    /// `a(xi) = p^(-m d) a(k)` with `a(k)` an exact integer.
    pub fn symbol_field(&self, lattice: &Arc<Lattice>) -> Result<LatticeField> {
        if lattice.prime() != self.prime {
            return Err(Error::BadParameter("lattice prime differs".into()));
        }
        if lattice.dim() != self.dim {
            return Err(Error::DimensionMismatch(
                lattice.dim() as usize,
                self.dim as usize,
            ));
        }
        let shift = lattice.support() * self.degree as i64;
        let ln_p = (self.prime as f64).ln();
        let mut values = Vec::with_capacity(lattice.cells());
        for i in 0..lattice.cells() {
            let coords = lattice.coords(i);
            let a = eval_poly(&self.monomials, &coords);
            let value = match int_valuation(&a, self.prime) {
                None => {
                    if coords.iter().all(|&k| k == 0) {
                        0.0
                    } else {
                        return Err(Error::NotElliptic {
                            cell: i,
                            valuation: None,
                        });
                    }
                }
                Some(v) => {
                    let ord = v - shift;
                    let exponent = -self.beta * ord as f64 * ln_p;
                    if exponent > 700.0 {
                        return Err(Error::PrecisionOverflow);
                    }
                    exponent.exp()
                }
            };
            values.push(Complex64::new(value, 0.0));
        }
        Ok(LatticeField::from_values(
            lattice.clone(),
            Side::Frequency,
            values,
        ))
    }
}

/// The heat kernel `Gamma(t, .)` on a position lattice together with its
/// frequency multiplier `exp(-t |a(xi)|^beta)`.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    pub time: f64,
    /// Position-side kernel values.
    pub field: LatticeField,
    /// Frequency-side multiplier; exactly 1 at `xi = 0`.
    pub multiplier: LatticeField,
    /// Fitted constant `A` of the decay bound
    /// `Gamma(t,x) <= A t (t^(1/(d beta)) + ||x||)^(-d beta - N)`.
    pub fitted_bound: f64,
    /// Estimated kernel mass outside `B_M^N`, from the fitted bound.
    pub tail_mass: f64,
    /// Set when the tail estimate exceeds the requested budget.
    pub tail_warning: bool,
}

impl HeatKernel {
    /// Build `Gamma(t, .)` for `t >= 0`. At `t = 0` the multiplier is
    /// identically one and the kernel is the discrete delta `p^(mN)` at the
    /// origin cell, the convolution identity.
    pub fn build(
        symbol: &EllipticSymbol,
        t: f64,
        plan: &TransformPlan,
        eps_tail: f64,
    ) -> Result<HeatKernel> {
        if t < 0.0 {
            return Err(Error::BadParameter("t must be nonnegative".into()));
        }
        let position = plan.position_lattice().clone();
        let frequency = plan.frequency_lattice().clone();
        if t == 0.0 {
            let multiplier = LatticeField::constant(frequency, Side::Frequency, 1.0);
            let mut field = LatticeField::zeros(position.clone(), Side::Position);
            field.values_mut()[position.origin_index()] =
                Complex64::new(position.cell_volume().recip(), 0.0);
            return Ok(HeatKernel {
                time: 0.0,
                field,
                multiplier,
                fitted_bound: 0.0,
                tail_mass: 0.0,
                tail_warning: false,
            });
        }
        let mut multiplier = symbol.symbol_field(&frequency)?;
        for v in multiplier.values_mut() {
            *v = Complex64::new((-t * v.re).exp(), 0.0);
        }
        let field = plan.inverse(&multiplier)?;

        let p = position.prime() as f64;
        let n = position.dim() as f64;
        let dbeta = symbol.dbeta();
        let spread = t.powf(1.0 / dbeta);
        let mut fitted = 0.0f64;
        for (i, v) in field.values().iter().enumerate() {
            let norm = match position.norm_exponent(i) {
                None => 0.0,
                Some(g) => p.powi(g as i32),
            };
            let bound = (spread + norm).powf(dbeta + n) / t;
            fitted = fitted.max(v.re.max(0.0) * bound);
        }
        // mass beyond B_M under the fitted decay bound:
        // A t (1 - p^-N) p^(-(M+1) d beta) / (1 - p^(-d beta))
        let m_support = position.support() as f64;
        let tail_mass = fitted * t * (1.0 - p.powf(-n)) * p.powf(-(m_support + 1.0) * dbeta)
            / (1.0 - p.powf(-dbeta));
        Ok(HeatKernel {
            time: t,
            field,
            multiplier,
            fitted_bound: fitted,
            tail_mass,
            tail_warning: tail_mass > eps_tail,
        })
    }

    /// Lattice Haar integral of the kernel.
    pub fn mass(&self) -> Result<f64> {
        Ok(self.field.integrate()?.re)
    }
}

/// Value and analytic tail bound of a truncated radial series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// One-dimensional radial heat series: `Gamma(t, x)` at `|x|_p = p^(-n)` for
/// the symbol `|xi|_p^b`, summed over the shells `g = n, n-1, ...` for
/// `depth` terms, with the analytic tail bound `p^(n - depth)`.
pub fn radial_heat_series(p: u32, b: f64, t: f64, n: i64, depth: u32) -> SeriesValue {
    assert!(t > 0.0 && depth >= 1);
    let pf = p as f64;
    let ln_p = pf.ln();
    let mut sum = 0.0f64;
    for g in ((n - depth as i64 + 1)..=n).rev() {
        sum +=
            (1.0 - 1.0 / pf) * (g as f64 * ln_p).exp() * (-t * (g as f64 * b * ln_p).exp()).exp();
    }
    sum -= (n as f64 * ln_p).exp() * (-t * ((n + 1) as f64 * b * ln_p).exp()).exp();
    SeriesValue {
        value: sum,
        tail_bound: ((n - depth as i64) as f64 * ln_p).exp(),
    }
}

/// `int_{B_R} Gamma(t, x) dx` for the 1-D symbol `|xi|^b`, computed in
/// frequency space as `p^R int_{B_{-R}} exp(-t |xi|^b) dxi`.
pub fn heat_mass_within(p: u32, b: f64, t: f64, ball_exponent: i64) -> f64 {
    let pf = p as f64;
    let ln_p = pf.ln();
    let mut sum = 0.0f64;
    let mut g = -ball_exponent;
    loop {
        let shell = (g as f64 * ln_p).exp();
        if shell < 1e-22 {
            // remaining shells have multiplier ~ 1; they sum to p^g exactly
            sum += shell;
            break;
        }
        sum += (1.0 - 1.0 / pf) * shell * (-t * (g as f64 * b * ln_p).exp()).exp();
        g -= 1;
    }
    (ball_exponent as f64 * ln_p).exp() * sum
}

/// Kernel mass outside `B_M`, 1-D.
pub fn heat_mass_outside(p: u32, b: f64, t: f64, support: i64) -> f64 {
    (1.0 - heat_mass_within(p, b, t, support)).max(0.0)
}

/// Average of `Gamma(t, .)` over the origin cell `B_{-m}`, 1-D: the exact
/// value the lattice kernel holds at the origin representative.
pub fn heat_origin_cell_average(p: u32, b: f64, t: f64, resolution: i64) -> f64 {
    let pf = p as f64;
    heat_mass_within(p, b, t, -resolution) * pf.powi(resolution as i32)
}

/// Pick `(M, m)` for a 1-D heat-kernel lattice: the shell-wise defect of the
/// lattice kernel against the true kernel is exactly `p^(-M)` times the
/// kernel mass outside `B_M`, so `M` is grown until that product drops below
/// `eps`, and the remaining cell budget is spent on resolution (capped at
/// `max_resolution`).
pub fn plan_heat_lattice_1d(
    p: u32,
    b: f64,
    t: f64,
    eps: f64,
    max_cells: u64,
    max_resolution: i64,
) -> Result<(i64, i64)> {
    let pf = p as f64;
    let mut support = 1i64;
    loop {
        let defect = pf.powi(-support as i32) * heat_mass_outside(p, b, t, support);
        if defect <= eps {
            break;
        }
        support += 1;
        if support > 64 {
            return Err(Error::BadParameter(format!(
                "no support exponent under 64 reaches eps = {eps}"
            )));
        }
    }
    let mut resolution = 1i64;
    while resolution < max_resolution
        && (p as u128).pow((support + resolution + 1) as u32) <= max_cells as u128
    {
        resolution += 1;
    }
    if (p as u128).pow((support + resolution) as u32) > max_cells as u128 {
        return Err(Error::TooLarge {
            cells: (p as u128).pow((support + resolution) as u32),
            cap: max_cells as u128,
        });
    }
    Ok((support, resolution))
}

/// Radial inverse Fourier transform in `Q_p^N`: for a radial density
/// `g(||xi|| = p^gamma)`,
/// `f(||x|| = p^s) = sum_{gamma <= -s} g(gamma)(p^(gamma N) - p^((gamma-1) N))
///                   - g(-s + 1) p^(-s N)`.
pub fn radial_inverse_fourier(
    g: impl Fn(i64) -> f64,
    p: u32,
    dim: u32,
    s: i64,
    depth: u32,
) -> f64 {
    let pf = p as f64;
    let n = dim as i32;
    let mut sum = 0.0f64;
    for gamma in (-s - depth as i64 + 1)..=(-s) {
        let outer = pf.powi(gamma as i32 * n);
        let inner = pf.powi((gamma - 1) as i32 * n);
        sum += g(gamma) * (outer - inner);
    }
    sum -= g(-s + 1) * pf.powi((-s) as i32 * n);
    sum
}

/// A radial position-space kernel paired with the spectral measure whose
/// Fourier transform it is.
#[derive(Debug, Clone)]
pub struct PairedKernel {
    pub field: LatticeField,
    /// The closed form is singular at the origin; the origin cell carries
    /// the innermost-shell value instead of a function value.
    pub origin_singular: bool,
    pub measure: SpectralMeasure,
}

/// The Riesz kernel
/// `f(x) = (1 - p^-alpha)/(1 - p^(alpha - N)) ||x||^(alpha - N)`,
/// `0 < alpha < N`, paired with the spectral density `||xi||^-alpha`.
pub fn riesz_kernel(alpha: f64, p: u32, dim: u32, lattice: &Arc<Lattice>) -> Result<PairedKernel> {
    if !(alpha > 0.0 && alpha < dim as f64) {
        return Err(Error::BadParameter(format!(
            "Riesz kernel needs 0 < alpha < N, got alpha = {alpha}, N = {dim}"
        )));
    }
    if lattice.prime() != p || lattice.dim() != dim {
        return Err(Error::LatticeMismatch);
    }
    let c = riesz_constant(alpha, p, dim);
    let pf = p as f64;
    let n = dim as f64;
    let innermost = -lattice.resolution();
    let field = LatticeField::sample_radial(lattice.clone(), Side::Position, |g| {
        // the origin cell stores the shell value of radius p^(-m)
        let gamma = g.unwrap_or(innermost);
        c * pf.powf(gamma as f64 * (alpha - n))
    });
    Ok(PairedKernel {
        field,
        origin_singular: true,
        measure: SpectralMeasure::radial(p, dim, RadialDensity::Power { alpha }),
    })
}

pub fn riesz_constant(alpha: f64, p: u32, dim: u32) -> f64 {
    let pf = p as f64;
    (1.0 - pf.powf(-alpha)) / (1.0 - pf.powf(alpha - dim as f64))
}

/// The Bessel potential `K_alpha`, supported in `Z_p^N`, with
/// `F K_alpha(xi) = max(1, ||xi||)^(-alpha)`:
///
/// ```text
/// K_alpha(x) = c_alpha (||x||^(alpha-N) - p^(alpha-N)) Omega(||x||)   alpha != N
/// K_N(x)     = (1 - p^-N) log_p(p / ||x||) Omega(||x||)
/// ```
///
/// The origin cell carries the exact average of `K_alpha` over `B_{-m}^N`
/// (a convergent radial shell sum), which makes the lattice transform of the
/// sampled field agree with the closed form at every lattice frequency.
pub fn bessel_potential(
    alpha: f64,
    p: u32,
    dim: u32,
    lattice: &Arc<Lattice>,
) -> Result<LatticeField> {
    if alpha <= 0.0 {
        return Err(Error::BadParameter("Bessel potential needs alpha > 0".into()));
    }
    if lattice.prime() != p || lattice.dim() != dim {
        return Err(Error::LatticeMismatch);
    }
    let pf = p as f64;
    let n = dim as f64;
    let m = lattice.resolution();
    let q = pf.powf(-n);
    let origin = if (alpha - n).abs() > 1e-12 {
        let c = riesz_constant(alpha, p, dim);
        // p^(mN) int_{B_-m} K = p^(mN) c [ (1-p^-N) p^(-m alpha) / (1-p^-alpha)
        //                                  - p^(alpha-N) p^(-mN) ]
        pf.powf(m as f64 * n)
            * c
            * ((1.0 - q) * pf.powf(-(m as f64) * alpha) / (1.0 - pf.powf(-alpha))
                - pf.powf(alpha - n - m as f64 * n))
    } else {
        // log branch averages exactly to (1 - p^-N)(1 + m) + p^-N
        (1.0 - q) * (1.0 + m as f64) + q
    };
    let field = LatticeField::sample_radial(lattice.clone(), Side::Position, |g| match g {
        None => origin,
        Some(gamma) if gamma <= 0 => {
            if (alpha - n).abs() > 1e-12 {
                riesz_constant(alpha, p, dim)
                    * (pf.powf(gamma as f64 * (alpha - n)) - pf.powf(alpha - n))
            } else {
                (1.0 - q) * (1.0 - gamma as f64)
            }
        }
        Some(_) => 0.0,
    });
    Ok(field)
}

/// `max(1, ||xi||)^(-alpha)` sampled on a frequency lattice.
pub fn bessel_multiplier(alpha: f64, lattice: &Arc<Lattice>) -> LatticeField {
    let pf = lattice.prime() as f64;
    LatticeField::sample_radial(lattice.clone(), Side::Frequency, |g| match g {
        Some(gamma) if gamma > 0 => pf.powf(-alpha * gamma as f64),
        _ => 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn identity_symbol_has_unit_bounds() {
        let sym = EllipticSymbol::identity_1d(3, 2.0).unwrap();
        let (c0, c1) = sym.bounds();
        assert_eq!(c0, c1);
        assert_eq!(c0.to_f64().unwrap(), 1.0);
    }

    #[test]
    fn sum_of_squares_elliptic_mod3_not_mod5() {
        let monomials = vec![(vec![2, 0], int(1)), (vec![0, 2], int(1))];
        let l3 = Lattice::build(3, 2, 0, 2).unwrap();
        let (c0, c1) = check_elliptic(&monomials, 3, &l3).unwrap();
        assert_eq!(c0.to_f64().unwrap(), 1.0);
        assert_eq!(c1.to_f64().unwrap(), 1.0);

        // -1 is a square mod 5: a(1, 2) = 5, and deeper near-zeros exist
        let l5 = Lattice::build(5, 2, 0, 2).unwrap();
        assert!(matches!(
            check_elliptic(&monomials, 5, &l5),
            Err(Error::NotElliptic { .. })
        ));
    }

    #[test]
    fn rejects_inhomogeneous() {
        let monomials = vec![(vec![2], int(1)), (vec![1], int(1))];
        let l = Lattice::build(2, 1, 0, 2).unwrap();
        assert!(matches!(
            check_elliptic(&monomials, 2, &l),
            Err(Error::NotHomogeneous { .. })
        ));
    }

    #[test]
    fn symbol_field_exact_values() {
        // |xi|_3^beta at xi = 1/3 with beta = 2 is 9
        let sym = EllipticSymbol::identity_1d(3, 2.0).unwrap();
        let freq = Lattice::build(3, 1, 1, 1).unwrap().dual();
        let f = sym.symbol_field(&freq).unwrap();
        assert!((f.values()[1].re - 9.0).abs() < 1e-12); // j = 1 -> xi = 1/3
        assert_eq!(f.values()[0].re, 0.0); // a(0) = 0

        // a = xi_1^2 + xi_2^2 at (3, 3): a = 18, |18|_3 = 1/9 = ||xi||^2
        let cert = Lattice::build(3, 2, 0, 2).unwrap();
        let sym2 = EllipticSymbol::certify(
            vec![(vec![2, 0], int(1)), (vec![0, 2], int(1))],
            1.0,
            3,
            &cert,
        )
        .unwrap();
        let freq2 = Lattice::build(3, 2, 2, 1).unwrap().dual(); // xi = 3^-1 j
        let f2 = sym2.symbol_field(&freq2).unwrap();
        let j = freq2.index_of(&[9, 9]); // xi = (3, 3)
        assert!((f2.values()[j].re - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn heat_kernel_mass_positivity_delta() {
        let sym = EllipticSymbol::identity_1d(2, 1.0).unwrap();
        let l = Lattice::build(2, 1, 4, 4).unwrap();
        let plan = TransformPlan::new(&l);

        let k0 = HeatKernel::build(&sym, 0.0, &plan, DEFAULT_EPS_TAIL).unwrap();
        assert!(k0.multiplier.values().iter().all(|v| v.re == 1.0));
        assert!((k0.field.values()[0].re - 16.0).abs() < 1e-12);
        assert!(k0.field.values()[1..].iter().all(|v| v.norm() == 0.0));

        let k = HeatKernel::build(&sym, 1.0, &plan, DEFAULT_EPS_TAIL).unwrap();
        assert!((k.mass().unwrap() - 1.0).abs() < 1e-12);
        let min = k
            .field
            .values()
            .iter()
            .map(|v| v.re)
            .fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-12);
        assert_eq!(k.multiplier.values()[0].re, 1.0);
    }

    #[test]
    fn heat_kernel_matches_radial_series() {
        let sym = EllipticSymbol::identity_1d(2, 1.0).unwrap();
        let (support, resolution) = plan_heat_lattice_1d(2, 1.0, 1.0, 5e-7, 1 << 20, 6).unwrap();
        let l = Lattice::build(2, 1, support, resolution).unwrap();
        let plan = TransformPlan::new(&l);
        let k = HeatKernel::build(&sym, 1.0, &plan, DEFAULT_EPS_TAIL).unwrap();

        // frozen spot value of the independent series oracle
        let spot = radial_heat_series(2, 1.0, 1.0, 0, 80);
        assert!((spot.value - 0.4127075082929578).abs() < 1e-12);

        for (gamma, idxs) in l.shell_map() {
            let oracle = radial_heat_series(2, 1.0, 1.0, -gamma, 80).value;
            for i in idxs {
                assert!(
                    (k.field.values()[i].re - oracle).abs() <= 1e-6,
                    "gamma={gamma}"
                );
            }
        }
        let origin_oracle = heat_origin_cell_average(2, 1.0, 1.0, resolution);
        assert!((k.field.values()[0].re - origin_oracle).abs() <= 1e-6);
    }

    #[test]
    fn radial_series_positivity_and_mass() {
        for p in [2u32, 3] {
            for b in [0.5, 1.0, 2.0] {
                for t in [0.1, 1.0, 10.0] {
                    let mut mass = 0.0;
                    for n in -60i64..=60 {
                        let v = radial_heat_series(p, b, t, n, 140);
                        assert!(v.value >= -1e-12, "p={p} b={b} t={t} n={n}");
                        // shell |x| = p^-n has volume p^-n (1 - 1/p)
                        mass += (p as f64).powi(-n as i32) * (1.0 - 1.0 / p as f64) * v.value;
                    }
                    let within = heat_mass_within(p, b, t, 60);
                    assert!((mass - within).abs() < 1e-9, "routes differ p={p} b={b} t={t}");
                    assert!((within - 1.0).abs() < 1e-6, "p={p} b={b} t={t}: {within}");
                }
            }
        }
    }

    #[test]
    fn semigroup_property() {
        let sym = EllipticSymbol::identity_1d(2, 1.0).unwrap();
        let l = Lattice::build(2, 1, 5, 5).unwrap();
        let plan = TransformPlan::new(&l);
        let a = HeatKernel::build(&sym, 0.3, &plan, DEFAULT_EPS_TAIL).unwrap();
        let b = HeatKernel::build(&sym, 0.7, &plan, DEFAULT_EPS_TAIL).unwrap();
        let ab = plan.convolve(&a.field, &b.field).unwrap();
        let c = HeatKernel::build(&sym, 1.0, &plan, DEFAULT_EPS_TAIL).unwrap();
        assert!(ab.max_diff(&c.field) <= 1e-8);
    }

    #[test]
    fn fitted_bound_stable_under_refinement() {
        let sym = EllipticSymbol::identity_1d(2, 1.0).unwrap();
        let mut fits = Vec::new();
        for m in [6i64, 7] {
            let l = Lattice::build(2, 1, 6, m).unwrap();
            let plan = TransformPlan::new(&l);
            let k = HeatKernel::build(&sym, 1.0, &plan, DEFAULT_EPS_TAIL).unwrap();
            fits.push(k.fitted_bound);
        }
        let rel = (fits[0] - fits[1]).abs() / fits[0];
        assert!(rel <= 0.10, "fitted A drifted {rel} under refinement");
    }

    #[test]
    fn bessel_identity_on_lattice() {
        for alpha in [0.5f64, 1.0, 1.5] {
            let l = Lattice::build(2, 1, 4, 4).unwrap();
            let plan = TransformPlan::new(&l);
            let k = bessel_potential(alpha, 2, 1, &l).unwrap();
            let kh = plan.forward(&k).unwrap();
            let expect = bessel_multiplier(alpha, plan.frequency_lattice());
            assert!(
                kh.max_diff(&expect) <= 1e-9,
                "alpha={alpha}: {}",
                kh.max_diff(&expect)
            );
        }
    }

    #[test]
    fn bessel_support_and_log_branch() {
        let l = Lattice::build(3, 1, 2, 3).unwrap();
        let k = bessel_potential(1.0, 3, 1, &l).unwrap();
        for i in 0..l.cells() {
            match l.norm_exponent(i) {
                Some(g) if g > 0 => assert_eq!(k.values()[i].re, 0.0),
                Some(0) => assert!((k.values()[i].re - (1.0 - 1.0 / 3.0)).abs() < 1e-15),
                _ => {}
            }
        }
    }

    #[test]
    fn riesz_kernel_shape() {
        // p=3, N=2, alpha=1: the constant is exactly 1, f = ||x||^-1
        let l = Lattice::build(3, 2, 2, 2).unwrap();
        let k = riesz_kernel(1.0, 3, 2, &l).unwrap();
        assert!(k.origin_singular);
        assert!((riesz_constant(1.0, 3, 2) - 1.0).abs() < 1e-15);
        for i in 0..l.cells() {
            if let Some(g) = l.norm_exponent(i) {
                let expect = 3f64.powi(-g as i32);
                assert!((k.field.values()[i].re - expect).abs() < 1e-12);
            }
        }
        assert!(riesz_kernel(2.5, 3, 2, &l).is_err());
    }

    #[test]
    fn riesz_density_transform_matches_kernel() {
        // inverse lattice transform of ||xi||^-alpha vs the closed form
        let alpha = 0.5f64;
        let l = Lattice::build(3, 1, 3, 5).unwrap();
        let plan = TransformPlan::new(&l);
        let freq = plan.frequency_lattice().clone();
        let pf = 3f64;
        let m_res = freq.resolution();
        // origin frequency cell carries the cell average of the density
        let origin_mass: f64 = {
            let mut s = 0.0;
            let mut g = -m_res;
            loop {
                let term = pf.powi(g as i32) * (1.0 - 1.0 / pf) * pf.powf(-alpha * g as f64);
                if term < 1e-18 {
                    break;
                }
                s += term;
                g -= 1;
            }
            s
        };
        let density = LatticeField::sample_radial(freq, Side::Frequency, |g| match g {
            None => origin_mass * pf.powi(m_res as i32),
            Some(gamma) => pf.powf(-alpha * gamma as f64),
        });
        let f = plan.inverse(&density).unwrap();
        let c = riesz_constant(alpha, 3, 1);
        for i in 0..l.cells() {
            if let Some(g) = l.norm_exponent(i) {
                if g >= 1 - l.resolution() && g <= 0 {
                    let expect = c * pf.powf(g as f64 * (alpha - 1.0));
                    let rel = (f.values()[i].re - expect).abs() / expect;
                    assert!(rel <= 0.02, "gamma={g}: rel={rel}");
                }
            }
        }
    }
}
