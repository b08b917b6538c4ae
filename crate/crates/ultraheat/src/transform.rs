//! Fourier transform between a position lattice and its dual.
//!
//! With representatives `x = p^(-M) k` and dual representatives
//! `xi = p^(-m) j`, the character `chi_p(-xi . x)` reduces to the root of
//! unity `exp(-2 pi i (j . k mod S) / S)` with `S = p^(M+m)`, so the pair of
//! transforms
//!
//! ```text
//! (F f)(xi)  = p^(-mN) sum_x chi_p(-xi . x) f(x)
//! (F' g)(x)  = p^(-MN) sum_xi chi_p(xi . x) g(xi)
//! ```
//!
//! is a scaled DFT over `(Z/S)^N` and the two maps are mutually inverse.
//! The fast path is a radix-`p` decimation-in-time factorisation applied
//! axis by axis; twiddle factors come from tables generated once per plan
//! out of exact rational phases, so no trigonometric error accumulates
//! across butterfly stages. The naive double sum stays available as the
//! in-tree oracle for lattices small enough to afford it.

use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;

use crate::lattice::{Lattice, LatticeField, Side};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

/// Precomputed schedule and twiddle tables for one lattice pair.
#[derive(Debug)]
pub struct TransformPlan {
    position: Arc<Lattice>,
    frequency: Arc<Lattice>,
    axis_len: usize,
    levels: u32,
    radix: usize,
    /// Digit-reversal permutation base `p` of length `axis_len`.
    rev: Vec<u32>,
    /// `stage_tables[s-1][t] = exp(-2 pi i t / p^s)` for `t < p^(s-1)`.
    stage_tables: Vec<Vec<Complex64>>,
    /// `omega_p[r] = exp(-2 pi i r / p)`.
    omega_p: Vec<Complex64>,
}

fn unit_root(num: u64, den: u64) -> Complex64 {
    // exact rational phase num/den, reduced to [0, 1) by construction
    let theta = 2.0 * std::f64::consts::PI * (num as f64 / den as f64);
    let (s, c) = theta.sin_cos();
    Complex64::new(c, -s)
}

impl TransformPlan {
    pub fn new(position: &Arc<Lattice>) -> TransformPlan {
        let p = position.prime() as usize;
        let s = position.axis_len() as usize;
        let levels = (position.support() + position.resolution()) as u32;

        let mut rev = vec![0u32; s];
        for i in 1..s {
            rev[i] = rev[i / p] / p as u32 + ((i % p) as u32) * (s / p) as u32;
        }

        let mut stage_tables = Vec::with_capacity(levels as usize);
        let mut block = 1u64;
        for _ in 0..levels {
            let half = block; // p^(s-1)
            block *= p as u64; // p^s
            let table = (0..half).map(|t| unit_root(t, block)).collect();
            stage_tables.push(table);
        }

        let omega_p = (0..p as u64).map(|r| unit_root(r, p as u64)).collect();

        TransformPlan {
            position: position.clone(),
            frequency: position.dual(),
            axis_len: s,
            levels,
            radix: p,
            rev,
            stage_tables,
            omega_p,
        }
    }

    pub fn position_lattice(&self) -> &Arc<Lattice> {
        &self.position
    }

    pub fn frequency_lattice(&self) -> &Arc<Lattice> {
        &self.frequency
    }

    /// `F f` on the dual lattice. Requires a position-side field on the
    /// plan's lattice.
    pub fn forward(&self, f: &LatticeField) -> Result<LatticeField> {
        f.expect_side(Side::Position)?;
        if **f.lattice() != *self.position {
            return Err(Error::LatticeMismatch);
        }
        let mut values = f.values().to_vec();
        self.dft(&mut values, Direction::Forward);
        let scale = self.position.cell_volume();
        for v in &mut values {
            *v *= scale;
        }
        Ok(LatticeField::from_values(
            self.frequency.clone(),
            Side::Frequency,
            values,
        ))
    }

    /// Inverse transform, with conjugate characters and the frequency cell
    /// volume `p^(-MN)`.
    pub fn inverse(&self, g: &LatticeField) -> Result<LatticeField> {
        g.expect_side(Side::Frequency)?;
        if **g.lattice() != *self.frequency {
            return Err(Error::LatticeMismatch);
        }
        let mut values = g.values().to_vec();
        self.dft(&mut values, Direction::Inverse);
        let scale = self.frequency.cell_volume();
        for v in &mut values {
            *v *= scale;
        }
        Ok(LatticeField::from_values(
            self.position.clone(),
            Side::Position,
            values,
        ))
    }

    /// Discrete group convolution
    /// `(f * g)(x) = p^(-mN) sum_y f(x - y) g(y)`,
    /// realised as `F'(F f . F g)`. Exact for step functions whose true
    /// convolution is supported in `B_M^N`; cyclic aliasing otherwise.
    pub fn convolve(&self, f: &LatticeField, g: &LatticeField) -> Result<LatticeField> {
        f.same_lattice(g)?;
        let mut fh = self.forward(f)?;
        let gh = self.forward(g)?;
        for (a, b) in fh.values_mut().iter_mut().zip(gh.values()) {
            *a *= b;
        }
        self.inverse(&fh)
    }

    fn dft(&self, values: &mut [Complex64], dir: Direction) {
        let s = self.axis_len;
        let dim = self.position.dim() as usize;
        let cells = values.len();
        let mut scratch = vec![Complex64::zero(); s];
        // axis c has stride s^(dim-1-c); lines are gathered, transformed,
        // scattered back
        for axis in 0..dim {
            let stride = s.pow((dim - 1 - axis) as u32);
            let block = stride * s;
            for base in (0..cells).step_by(block) {
                for inner in 0..stride {
                    let start = base + inner;
                    // gather with the digit-reversal permutation applied
                    for i in 0..s {
                        scratch[i] = values[start + self.rev[i] as usize * stride];
                    }
                    self.fft_line(&mut scratch, dir);
                    for i in 0..s {
                        values[start + i * stride] = scratch[i];
                    }
                }
            }
        }
    }

    /// Iterative radix-p decimation in time on one digit-reversed line.
    fn fft_line(&self, buf: &mut [Complex64], dir: Direction) {
        let p = self.radix;
        let conj = dir == Direction::Inverse;
        let fetch = |w: Complex64| if conj { w.conj() } else { w };
        let mut half = 1usize;
        for stage in 0..self.levels as usize {
            let table = &self.stage_tables[stage];
            let block = half * p;
            match p {
                2 => {
                    for b in (0..buf.len()).step_by(block) {
                        for t in 0..half {
                            let w = fetch(table[t]);
                            let z0 = buf[b + t];
                            let z1 = buf[b + half + t] * w;
                            buf[b + t] = z0 + z1;
                            buf[b + half + t] = z0 - z1;
                        }
                    }
                }
                3 => {
                    let w3 = fetch(self.omega_p[1]);
                    let w3sq = fetch(self.omega_p[2]);
                    for b in (0..buf.len()).step_by(block) {
                        for t in 0..half {
                            let w = fetch(table[t]);
                            let z0 = buf[b + t];
                            let z1 = buf[b + half + t] * w;
                            let z2 = buf[b + 2 * half + t] * (w * w);
                            buf[b + t] = z0 + z1 + z2;
                            buf[b + half + t] = z0 + w3 * z1 + w3sq * z2;
                            buf[b + 2 * half + t] = z0 + w3sq * z1 + w3 * z2;
                        }
                    }
                }
                _ => {
                    let mut z = vec![Complex64::zero(); p];
                    for b in (0..buf.len()).step_by(block) {
                        for t in 0..half {
                            let w = fetch(table[t]);
                            let mut wr = Complex64::new(1.0, 0.0);
                            for (r, zr) in z.iter_mut().enumerate() {
                                *zr = buf[b + r * half + t] * wr;
                                wr *= w;
                            }
                            for u in 0..p {
                                let mut acc = Complex64::zero();
                                for (r, zr) in z.iter().enumerate() {
                                    acc += fetch(self.omega_p[r * u % p]) * zr;
                                }
                                buf[b + u * half + t] = acc;
                            }
                        }
                    }
                }
            }
            half = block;
        }
    }

    /// Reference transform: the literal character double sum with exact
    /// integer phase indices. Quadratic cost; the oracle the fast path is
    /// tested against.
    pub fn naive_forward(&self, f: &LatticeField) -> Result<LatticeField> {
        f.expect_side(Side::Position)?;
        if **f.lattice() != *self.position {
            return Err(Error::LatticeMismatch);
        }
        let values = self.naive_sum(f.values(), Direction::Forward);
        let scale = self.position.cell_volume();
        Ok(LatticeField::from_values(
            self.frequency.clone(),
            Side::Frequency,
            values.into_iter().map(|v| v * scale).collect(),
        ))
    }

    pub fn naive_inverse(&self, g: &LatticeField) -> Result<LatticeField> {
        g.expect_side(Side::Frequency)?;
        if **g.lattice() != *self.frequency {
            return Err(Error::LatticeMismatch);
        }
        let values = self.naive_sum(g.values(), Direction::Inverse);
        let scale = self.frequency.cell_volume();
        Ok(LatticeField::from_values(
            self.position.clone(),
            Side::Position,
            values.into_iter().map(|v| v * scale).collect(),
        ))
    }

    fn naive_sum(&self, input: &[Complex64], dir: Direction) -> Vec<Complex64> {
        let s = self.axis_len as u64;
        let dim = self.position.dim() as usize;
        let cells = input.len();
        let table: Vec<Complex64> = (0..s)
            .map(|r| {
                let w = unit_root(r, s);
                if dir == Direction::Inverse {
                    w.conj()
                } else {
                    w
                }
            })
            .collect();
        let coords: Vec<Vec<u64>> = (0..cells).map(|i| self.position.coords(i)).collect();
        let mut out = vec![Complex64::zero(); cells];
        for (j, out_j) in out.iter_mut().enumerate() {
            let cj = &coords[j];
            let mut acc = Complex64::zero();
            for (k, x) in input.iter().enumerate() {
                let ck = &coords[k];
                let mut phase = 0u64;
                for c in 0..dim {
                    phase = (phase + cj[c] * ck[c]) % s;
                }
                acc += table[phase as usize] * x;
            }
            *out_j = acc;
        }
        out
    }
}

/// Pointwise product of two fields on the same lattice and side.
pub fn pointwise_mul(f: &LatticeField, g: &LatticeField) -> Result<LatticeField> {
    f.same_lattice(g)?;
    let values = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b)
        .collect();
    Ok(LatticeField::from_values(
        f.lattice().clone(),
        f.side(),
        values,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_field(lattice: &Arc<Lattice>, side: Side, seed: u64) -> LatticeField {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let values = (0..lattice.cells())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        LatticeField::from_values(lattice.clone(), side, values)
    }

    #[test]
    fn omega_is_a_fixed_point() {
        for (p, n) in [(2u32, 1u32), (3, 1), (2, 2)] {
            let l = Lattice::build(p, n, 2, 2).unwrap();
            let plan = TransformPlan::new(&l);
            let f = LatticeField::omega(l.clone(), Side::Position);
            let fh = plan.forward(&f).unwrap();
            let expect = LatticeField::omega(plan.frequency_lattice().clone(), Side::Frequency);
            assert!(fh.max_diff(&expect) <= 1e-12, "p={p} N={n}");
        }
    }

    #[test]
    fn constant_transforms_to_point_mass() {
        // F(1 on B_M^N) = p^(MN) at xi = 0, zero on every other lattice cell
        let l = Lattice::build(2, 1, 2, 2).unwrap();
        let plan = TransformPlan::new(&l);
        let f = LatticeField::constant(l, Side::Position, 1.0);
        let fh = plan.forward(&f).unwrap();
        assert!((fh.values()[0].re - 4.0).abs() < 1e-12);
        for v in &fh.values()[1..] {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn linearity() {
        let l = Lattice::build(3, 1, 1, 2).unwrap();
        let plan = TransformPlan::new(&l);
        let f = random_field(&l, Side::Position, 1);
        let g = random_field(&l, Side::Position, 2);
        let (a, b) = (Complex64::new(0.3, -1.1), Complex64::new(2.0, 0.7));
        let combo = LatticeField::from_values(
            l.clone(),
            Side::Position,
            f.values()
                .iter()
                .zip(g.values())
                .map(|(x, y)| a * x + b * y)
                .collect(),
        );
        let lhs = plan.forward(&combo).unwrap();
        let fh = plan.forward(&f).unwrap();
        let gh = plan.forward(&g).unwrap();
        let rhs = LatticeField::from_values(
            plan.frequency_lattice().clone(),
            Side::Frequency,
            fh.values()
                .iter()
                .zip(gh.values())
                .map(|(x, y)| a * x + b * y)
                .collect(),
        );
        assert!(lhs.max_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn roundtrip_and_reflection() {
        for (p, n, mm, m) in [(2u32, 1u32, 3i64, 3i64), (3, 2, 1, 1), (5, 1, 1, 1)] {
            let l = Lattice::build(p, n, mm, m).unwrap();
            let plan = TransformPlan::new(&l);
            let f = random_field(&l, Side::Position, 7);
            let fh = plan.forward(&f).unwrap();
            let back = plan.inverse(&fh).unwrap();
            assert!(back.max_diff(&f) <= 1e-12, "roundtrip p={p} N={n}");

            // F(F f)(xi) = f(-xi) through negate_index
            let dual_plan = TransformPlan::new(plan.frequency_lattice());
            let reinterpreted = LatticeField::from_values(
                plan.frequency_lattice().clone(),
                Side::Position,
                fh.values().to_vec(),
            );
            let ffh = dual_plan.forward(&reinterpreted).unwrap();
            for i in 0..l.cells() {
                let d = (ffh.values()[i] - f.values()[l.negate_index(i)]).norm();
                assert!(d <= 1e-12, "reflection p={p} N={n} cell={i}");
            }
        }
    }

    #[test]
    fn parseval() {
        let l = Lattice::build(2, 1, 3, 2).unwrap();
        let plan = TransformPlan::new(&l);
        for seed in 0..5 {
            let f = random_field(&l, Side::Position, seed);
            let fh = plan.forward(&f).unwrap();
            let pos: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>()
                * l.cell_volume();
            let freq: f64 = fh.values().iter().map(|v| v.norm_sqr()).sum::<f64>()
                * plan.frequency_lattice().cell_volume();
            assert!((pos - freq).abs() <= 1e-12 * pos.max(1.0));
        }
    }

    #[test]
    fn fast_equals_naive() {
        for (p, n, mm, m) in [
            (2u32, 1u32, 3i64, 3i64),
            (2, 2, 2, 1),
            (3, 1, 2, 2),
            (3, 2, 1, 1),
            (5, 1, 2, 1),
            (7, 1, 1, 1),
        ] {
            let l = Lattice::build(p, n, mm, m).unwrap();
            let plan = TransformPlan::new(&l);
            let f = random_field(&l, Side::Position, 42);
            let fast = plan.forward(&f).unwrap();
            let naive = plan.naive_forward(&f).unwrap();
            assert!(
                fast.max_diff(&naive) <= 1e-12,
                "p={p} N={n} M={mm} m={m}: {}",
                fast.max_diff(&naive)
            );
            let g = random_field(plan.frequency_lattice(), Side::Frequency, 43);
            let fast_i = plan.inverse(&g).unwrap();
            let naive_i = plan.naive_inverse(&g).unwrap();
            assert!(fast_i.max_diff(&naive_i) <= 1e-12);
        }
    }

    #[test]
    fn convolution_theorem_and_commutativity() {
        let l = Lattice::build(3, 1, 2, 2).unwrap();
        let plan = TransformPlan::new(&l);
        let f = random_field(&l, Side::Position, 10);
        let g = random_field(&l, Side::Position, 11);

        let fg = plan.convolve(&f, &g).unwrap();
        let gf = plan.convolve(&g, &f).unwrap();
        assert!(fg.max_diff(&gf) <= 1e-12);

        let lhs = plan.forward(&fg).unwrap();
        let rhs = pointwise_mul(&plan.forward(&f).unwrap(), &plan.forward(&g).unwrap()).unwrap();
        assert!(lhs.max_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn convolving_with_delta_m_is_identity() {
        // delta_m = p^(mN) at the origin cell is the convolution identity
        let l = Lattice::build(2, 1, 2, 3).unwrap();
        let plan = TransformPlan::new(&l);
        let f = random_field(&l, Side::Position, 5);
        let mut delta = LatticeField::zeros(l.clone(), Side::Position);
        delta.values_mut()[0] = Complex64::new(l.cell_volume().recip(), 0.0);
        let conv = plan.convolve(&f, &delta).unwrap();
        assert!(conv.max_diff(&f) <= 1e-12);
    }

    #[test]
    fn hermitian_spectrum_gives_real_output() {
        let l = Lattice::build(2, 1, 3, 3).unwrap();
        let plan = TransformPlan::new(&l);
        let freq = plan.frequency_lattice().clone();
        let raw = random_field(&freq, Side::Frequency, 9);
        let mut values = raw.values().to_vec();
        for i in 0..freq.cells() {
            let ni = freq.negate_index(i);
            if ni > i {
                values[ni] = values[i].conj();
            } else if ni == i {
                values[i] = Complex64::new(values[i].re, 0.0);
            }
        }
        let g = LatticeField::from_values(freq, Side::Frequency, values);
        let out = plan.inverse(&g).unwrap();
        assert!(out.max_imag() <= 1e-12);
    }

    #[test]
    fn side_and_lattice_guards() {
        let l = Lattice::build(2, 1, 2, 2).unwrap();
        let plan = TransformPlan::new(&l);
        let wrong_side = LatticeField::constant(l.clone(), Side::Frequency, 1.0);
        assert!(matches!(
            plan.forward(&wrong_side),
            Err(Error::SideMismatch { .. })
        ));
        let other = Lattice::build(2, 1, 3, 2).unwrap();
        let foreign = LatticeField::constant(other, Side::Position, 1.0);
        assert!(matches!(plan.forward(&foreign), Err(Error::LatticeMismatch)));
    }
}
