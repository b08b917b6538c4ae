//! Finite discretisation of `Q_p^N` by coset representatives of
//! `B_M^N / B_{-m}^N`.
//!
//! A lattice with support exponent `M` and resolution exponent `m` holds the
//! `p^(N(M+m))` representatives `x = p^(-M) k`, `k in {0, ..., p^(M+m)-1}^N`,
//! in lexicographic order of the coordinate tuples. Step functions that are
//! constant at scale `p^(-m)` and supported in `B_M^N` are represented
//! exactly; the Haar integral of such a function is the cell volume
//! `p^(-mN)` times the value sum. The dual (frequency) lattice swaps the two
//! exponents.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::padic::pow_rational;
use crate::{Error, Result};

/// Default cap on the representative count.
pub const DEFAULT_CELL_CAP: u128 = 1 << 24;

/// Which side of the Fourier transform a lattice or field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Position,
    Frequency,
}

/// Serializable lattice descriptor `{p, N, M, m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDescriptor {
    pub p: u32,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "M")]
    pub support: i64,
    #[serde(rename = "m")]
    pub resolution: i64,
}

#[derive(Debug)]
pub struct Lattice {
    prime: u32,
    dim: u32,
    support: i64,
    resolution: i64,
    axis_len: u64,
    cells: usize,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.prime == other.prime
            && self.dim == other.dim
            && self.support == other.support
            && self.resolution == other.resolution
    }
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    let p = p as u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Lattice {
    pub fn build(p: u32, dim: u32, support: i64, resolution: i64) -> Result<Arc<Lattice>> {
        Self::build_with_cap(p, dim, support, resolution, DEFAULT_CELL_CAP)
    }

    pub fn build_with_cap(
        p: u32,
        dim: u32,
        support: i64,
        resolution: i64,
        cap: u128,
    ) -> Result<Arc<Lattice>> {
        if !is_prime(p) {
            return Err(Error::BadLattice(format!("p = {p} is not prime")));
        }
        if dim == 0 {
            return Err(Error::BadLattice("dimension must be >= 1".into()));
        }
        let span = support + resolution;
        if span < 1 {
            return Err(Error::BadLattice(format!(
                "need M + m >= 1, got {support} + {resolution}"
            )));
        }
        let mut cells: u128 = 1;
        for _ in 0..span * dim as i64 {
            cells = cells.saturating_mul(p as u128);
            if cells > cap {
                return Err(Error::TooLarge { cells, cap });
            }
        }
        let axis_len = (p as u128).pow(span as u32) as u64;
        Ok(Arc::new(Lattice {
            prime: p,
            dim,
            support,
            resolution,
            axis_len,
            cells: cells as usize,
        }))
    }

    pub fn from_descriptor(d: &LatticeDescriptor) -> Result<Arc<Lattice>> {
        Self::build(d.p, d.n, d.support, d.resolution)
    }

    pub fn descriptor(&self) -> LatticeDescriptor {
        LatticeDescriptor {
            p: self.prime,
            n: self.dim,
            support: self.support,
            resolution: self.resolution,
        }
    }

    /// The frequency lattice paired with this one: support and resolution
    /// exponents swap.
    pub fn dual(&self) -> Arc<Lattice> {
        Arc::new(Lattice {
            prime: self.prime,
            dim: self.dim,
            support: self.resolution,
            resolution: self.support,
            axis_len: self.axis_len,
            cells: self.cells,
        })
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn support(&self) -> i64 {
        self.support
    }

    pub fn resolution(&self) -> i64 {
        self.resolution
    }

    /// Points per axis, `p^(M+m)`.
    pub fn axis_len(&self) -> u64 {
        self.axis_len
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Haar volume `p^(-mN)` of one cell.
    pub fn cell_volume(&self) -> f64 {
        (self.prime as f64).powi((-self.resolution * self.dim as i64) as i32)
    }

    pub fn cell_volume_rational(&self) -> BigRational {
        pow_rational(self.prime, -self.resolution * self.dim as i64)
    }

    /// Integer coordinates `k` of representative `i`, lexicographic order
    /// with coordinate 0 most significant.
    pub fn coords(&self, index: usize) -> Vec<u64> {
        debug_assert!(index < self.cells);
        let mut k = vec![0u64; self.dim as usize];
        let mut rest = index as u64;
        for c in (0..self.dim as usize).rev() {
            k[c] = rest % self.axis_len;
            rest /= self.axis_len;
        }
        k
    }

    pub fn index_of(&self, coords: &[u64]) -> usize {
        debug_assert_eq!(coords.len(), self.dim as usize);
        let mut idx = 0u64;
        for &k in coords {
            debug_assert!(k < self.axis_len);
            idx = idx * self.axis_len + k;
        }
        idx as usize
    }

    /// Exact coordinates `p^(-M) k` of representative `i`.
    pub fn representative(&self, index: usize) -> Vec<BigRational> {
        let scale = pow_rational(self.prime, -self.support);
        self.coords(index)
            .iter()
            .map(|&k| &scale * BigRational::from_integer(BigInt::from(k)))
            .collect()
    }

    /// Base-p digit string of each coordinate (least significant first),
    /// coordinates joined by ';'.
    pub fn digit_string(&self, index: usize) -> String {
        let span = (self.support + self.resolution) as usize;
        let mut out = String::new();
        for (c, &k) in self.coords(index).iter().enumerate() {
            if c > 0 {
                out.push(';');
            }
            let mut rest = k;
            for _ in 0..span {
                let d = (rest % self.prime as u64) as u32;
                rest /= self.prime as u64;
                out.push_str(&d.to_string());
            }
        }
        out
    }

    fn coord_valuation(&self, k: u64) -> Option<i64> {
        if k == 0 {
            return None;
        }
        let mut v = 0i64;
        let mut k = k;
        while k % self.prime as u64 == 0 {
            v += 1;
            k /= self.prime as u64;
        }
        Some(v)
    }

    /// `gamma` with `||x_i||_p = p^gamma`, or `None` for the origin cell.
    pub fn norm_exponent(&self, index: usize) -> Option<i64> {
        let mut min_v: Option<i64> = None;
        for &k in &self.coords(index) {
            if let Some(v) = self.coord_valuation(k) {
                min_v = Some(min_v.map_or(v, |m| m.min(v)));
            }
        }
        min_v.map(|v| self.support - v)
    }

    /// Index of the representative congruent to `-x_i` modulo `B_{-m}^N`.
    /// An involution.
    pub fn negate_index(&self, index: usize) -> usize {
        let coords: Vec<u64> = self
            .coords(index)
            .iter()
            .map(|&k| if k == 0 { 0 } else { self.axis_len - k })
            .collect();
        self.index_of(&coords)
    }

    /// Map `gamma -> representative indices` on shell `||x|| = p^gamma`;
    /// the origin cell is keyed by `None` in [`Lattice::origin_index`].
    pub fn shell_map(&self) -> BTreeMap<i64, Vec<usize>> {
        let mut map: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for i in 0..self.cells {
            if let Some(g) = self.norm_exponent(i) {
                map.entry(g).or_default().push(i);
            }
        }
        map
    }

    pub fn origin_index(&self) -> usize {
        0
    }

    /// Number of representatives with `||x|| = p^gamma`:
    /// `p^(N(gamma+m)) - p^(N(gamma-1+m))` for `-m < gamma <= M`.
    pub fn shell_count(&self, gamma: i64) -> u128 {
        if gamma > self.support || gamma + self.resolution <= 0 {
            return 0;
        }
        let p = self.prime as u128;
        let outer = p.pow((self.dim as i64 * (gamma + self.resolution)) as u32);
        let inner = p.pow((self.dim as i64 * (gamma - 1 + self.resolution)) as u32);
        outer - inner
    }

    /// Exponents of the nonempty shells, ascending.
    pub fn shell_exponents(&self) -> Vec<i64> {
        ((1 - self.resolution)..=self.support).collect()
    }
}

/// A complex- or real-valued step function on a lattice.
#[derive(Debug, Clone)]
pub struct LatticeField {
    lattice: Arc<Lattice>,
    side: Side,
    values: Vec<Complex64>,
}

impl LatticeField {
    pub fn from_values(lattice: Arc<Lattice>, side: Side, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), lattice.cells());
        LatticeField {
            lattice,
            side,
            values,
        }
    }

    pub fn zeros(lattice: Arc<Lattice>, side: Side) -> Self {
        let n = lattice.cells();
        LatticeField {
            lattice,
            side,
            values: vec![Complex64::zero(); n],
        }
    }

    pub fn constant(lattice: Arc<Lattice>, side: Side, value: f64) -> Self {
        let n = lattice.cells();
        LatticeField {
            lattice,
            side,
            values: vec![Complex64::new(value, 0.0); n],
        }
    }

    /// Evaluate a callable at each representative in index order.
    pub fn sample(
        lattice: Arc<Lattice>,
        side: Side,
        f: impl Fn(&[BigRational]) -> Complex64,
    ) -> Self {
        let values = (0..lattice.cells())
            .map(|i| f(&lattice.representative(i)))
            .collect();
        LatticeField {
            lattice,
            side,
            values,
        }
    }

    /// Fallible sampling; the first callable error aborts.
    pub fn try_sample(
        lattice: Arc<Lattice>,
        side: Side,
        f: impl Fn(&[BigRational]) -> Result<Complex64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(lattice.cells());
        for i in 0..lattice.cells() {
            values.push(f(&lattice.representative(i))?);
        }
        Ok(LatticeField {
            lattice,
            side,
            values,
        })
    }

    /// Sample a radial function of the norm exponent (`None` = origin cell).
    pub fn sample_radial(lattice: Arc<Lattice>, side: Side, f: impl Fn(Option<i64>) -> f64) -> Self {
        let values = (0..lattice.cells())
            .map(|i| Complex64::new(f(lattice.norm_exponent(i)), 0.0))
            .collect();
        LatticeField {
            lattice,
            side,
            values,
        }
    }

    /// Indicator of `Z_p^N` (`||x|| <= 1`).
    pub fn omega(lattice: Arc<Lattice>, side: Side) -> Self {
        Self::sample_radial(lattice, side, |g| match g {
            None => 1.0,
            Some(g) if g <= 0 => 1.0,
            _ => 0.0,
        })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn expect_side(&self, side: Side) -> Result<()> {
        if self.side != side {
            return Err(Error::SideMismatch {
                expected: side,
                found: self.side,
            });
        }
        Ok(())
    }

    pub fn same_lattice(&self, other: &LatticeField) -> Result<()> {
        if *self.lattice != *other.lattice || self.side != other.side {
            return Err(Error::LatticeMismatch);
        }
        Ok(())
    }

    /// `p^(-mN) * sum f(x)`: the Haar integral of the step function,
    /// exact for `(M, m)`-step functions supported in `B_M^N`.
    pub fn integrate(&self) -> Result<Complex64> {
        self.expect_side(Side::Position)?;
        let sum: Complex64 = self.values.iter().sum();
        Ok(sum * self.lattice.cell_volume())
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &LatticeField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `cell_index,digits,norm_exponent,re,im`; floats are
    /// written with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "cell_index,digits,norm_exponent,re,im")?;
        for (i, v) in self.values.iter().enumerate() {
            let g = match self.lattice.norm_exponent(i) {
                Some(g) => g.to_string(),
                None => "-inf".to_string(),
            };
            writeln!(
                w,
                "{},{},{},{:.16e},{:.16e}",
                i,
                self.lattice.digit_string(i),
                g,
                v.re,
                v.im
            )?;
        }
        Ok(())
    }
}

/// Haar volume of the shell `||x|| = p^gamma` in `Q_p^N`:
/// `p^(gamma N) (1 - p^(-N))`.
pub fn shell_volume(p: u32, dim: u32, gamma: i64) -> f64 {
    let pf = p as f64;
    pf.powi((gamma * dim as i64) as i32) * (1.0 - pf.powi(-(dim as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn enumeration_examples() {
        let l = Lattice::build(2, 1, 1, 1).unwrap();
        assert_eq!(l.cells(), 4);
        let reps: Vec<BigRational> = (0..4).map(|i| l.representative(i)[0].clone()).collect();
        assert_eq!(reps, vec![rat(0, 1), rat(1, 2), rat(1, 1), rat(3, 2)]);

        let l = Lattice::build(2, 1, 0, 1).unwrap();
        assert_eq!(l.cells(), 2);
        assert_eq!(l.representative(1)[0], rat(1, 1));
    }

    #[test]
    fn shell_counts() {
        let l = Lattice::build(3, 1, 1, 1).unwrap();
        assert_eq!(l.shell_count(1), 6); // 9 - 3
        assert_eq!(l.shell_count(0), 2);
        assert_eq!(l.shell_count(-1), 0);
        let map = l.shell_map();
        assert_eq!(map[&1].len(), 6);
        assert_eq!(map[&0].len(), 2);
        // shells plus origin partition the cells
        let total: usize = map.values().map(|v| v.len()).sum();
        assert_eq!(total + 1, l.cells());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Lattice::build(4, 1, 1, 1).is_err());
        assert!(Lattice::build(2, 1, 0, 0).is_err());
        assert!(matches!(
            Lattice::build_with_cap(2, 1, 10, 10, 1 << 10),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn integrate_omega_is_one() {
        let l = Lattice::build(2, 1, 2, 2).unwrap();
        let f = LatticeField::omega(l.clone(), Side::Position);
        let v = f.integrate().unwrap();
        assert!((v.re - 1.0).abs() < 1e-15 && v.im == 0.0);

        let ones = LatticeField::constant(l.clone(), Side::Position, 1.0);
        assert!((ones.integrate().unwrap().re - 4.0).abs() < 1e-12); // p^(MN) = 4

        // delta_n = p^(Nn) Omega(p^n ||x||) integrates to one for n <= m
        for n in 0..=2i64 {
            let pn = 2f64.powi(n as i32);
            let d = LatticeField::sample_radial(l.clone(), Side::Position, |g| match g {
                None => pn,
                Some(g) if g <= -n => pn,
                _ => 0.0,
            });
            assert!((d.integrate().unwrap().re - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn shell_indicator_integral_is_exact() {
        // integrate(indicator of shell gamma) = p^(gamma N)(1 - p^(-N)),
        // checked in exact rational arithmetic via the cell count.
        for (p, n, mm, m) in [(2u32, 1u32, 3i64, 2i64), (3, 2, 1, 1)] {
            let l = Lattice::build(p, n, mm, m).unwrap();
            for gamma in l.shell_exponents() {
                let count = l.shell_count(gamma);
                let got = BigRational::from_integer(BigInt::from(count))
                    * l.cell_volume_rational();
                let expect = pow_rational(p, gamma * n as i64)
                    * (BigRational::one() - pow_rational(p, -(n as i64)));
                assert_eq!(got, expect, "p={p} N={n} gamma={gamma}");
            }
        }
    }

    #[test]
    fn negate_involution_and_fixed_points() {
        let l = Lattice::build(3, 1, 0, 1).unwrap();
        // -1 = 2 mod 3
        assert_eq!(l.negate_index(1), 2);
        assert_eq!(l.negate_index(0), 0);

        for (p, n, mm, m) in [(3u32, 1u32, 1i64, 1i64), (2, 1, 2, 1), (2, 2, 1, 1), (5, 1, 1, 0)] {
            let l = Lattice::build(p, n, mm, m).unwrap();
            let mut fixed = 0usize;
            for i in 0..l.cells() {
                assert_eq!(l.negate_index(l.negate_index(i)), i);
                if l.negate_index(i) == i {
                    fixed += 1;
                }
            }
            let expect = if p == 2 { 1usize << n } else { 1 };
            assert_eq!(fixed, expect, "p={p} N={n}");
        }
    }

    #[test]
    fn deterministic_enumeration() {
        let a = Lattice::build(3, 2, 1, 1).unwrap();
        let b = Lattice::build(3, 2, 1, 1).unwrap();
        for i in 0..a.cells() {
            assert_eq!(a.representative(i), b.representative(i));
            assert_eq!(a.norm_exponent(i), b.norm_exponent(i));
        }
    }

    #[test]
    fn radial_sampling() {
        // ||x||^(1/2) on p=3, M=1, m=2: shell-constant values {0, 3^-1/2, 1, 3^1/2}
        // (the finest nonzero shell of an (M, m) lattice sits at gamma = 1-m)
        let l = Lattice::build(3, 1, 1, 2).unwrap();
        let f = LatticeField::sample_radial(l.clone(), Side::Position, |g| match g {
            None => 0.0,
            Some(g) => 3f64.powf(g as f64 / 2.0),
        });
        let mut seen: Vec<f64> = f.values().iter().map(|v| v.re).collect();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        let expect = [0.0, 3f64.powf(-0.5), 1.0, 3f64.powf(0.5)];
        assert_eq!(seen.len(), 4);
        for (a, b) in seen.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn descriptor_roundtrip_and_csv() {
        let l = Lattice::build(2, 1, 1, 1).unwrap();
        let d = l.descriptor();
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"{"p":2,"N":1,"M":1,"m":1}"#);
        let back: LatticeDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);

        let f = LatticeField::omega(l, Side::Position);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "cell_index,digits,norm_exponent,re,im");
        assert!(text.lines().count() == 5);
        assert!(text.contains("-inf"));
    }

    #[test]
    fn dual_swaps_exponents() {
        let l = Lattice::build(2, 1, 3, 1).unwrap();
        let d = l.dual();
        assert_eq!(d.support(), 1);
        assert_eq!(d.resolution(), 3);
        assert_eq!(d.cells(), l.cells());
    }
}
