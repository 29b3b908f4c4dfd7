//! The truncated Cauchy transform of an atomic measure and the Cauchy
//! operator on `L²(μ)`.
//!
//! For a measure `μ = Σ w_j δ_{z_j}` the operator acts on coefficient vectors by
//!
//! ```text
//! (C f)_i = Σ_{j ≠ i, |z_j − z_i| > ε}  w_j f_j / (z_j − z_i)
//! ```
//!
//! with inner product `⟨f, g⟩ = Σ f_i conj(g_i) w_i`. The diagonal is always
//! excluded. Because the kernel is antisymmetric, the adjoint is
//! `C* g = −conj(C conj(g))`, so the norm can be estimated by power iteration
//! on `C*C` without ever forming a matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::PlanePoint;
use crate::measures::DiscreteMeasure;

/// Summation block length used when reducing operator rows.
pub const DEFAULT_BLOCK: usize = 256;

#[derive(Debug, Clone)]
pub struct KernelOperator {
    xs: Vec<f64>,
    ys: Vec<f64>,
    weights: Vec<f64>,
    epsilon: f64,
    block: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Krylov engine used for the norm estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    /// Lanczos on `C*C` with full reorthogonalization and explicit restarts.
    #[default]
    Lanczos,
    /// Plain power iteration on `C*C`.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Relative change of successive estimates of `‖C‖²` that ends the
    /// iteration.
    pub tol: f64,
    /// Cap on operator applications of `C*C`.
    pub max_iter: usize,
    pub block: usize,
    pub method: NormMethod,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            tol: 1e-8,
            max_iter: 10_000,
            block: DEFAULT_BLOCK,
            method: NormMethod::Lanczos,
        }
    }
}

/// Krylov basis size before an explicit restart.
const LANCZOS_BASIS: usize = 120;

fn neumaier(sum: &mut Complex64, comp: &mut Complex64, v: Complex64) {
    fn step(s: &mut f64, c: &mut f64, v: f64) {
        let t = *s + v;
        if s.abs() >= v.abs() {
            *c += (*s - t) + v;
        } else {
            *c += (v - t) + *s;
        }
        *s = t;
    }
    step(&mut sum.re, &mut comp.re, v.re);
    step(&mut sum.im, &mut comp.im, v.im);
}

impl KernelOperator {
    pub fn new(measure: &DiscreteMeasure, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(invalid(format!("truncation radius must be nonnegative, got {epsilon}")));
        }
        Ok(KernelOperator {
            xs: measure.atoms().iter().map(|a| a.position.x).collect(),
            ys: measure.atoms().iter().map(|a| a.position.y).collect(),
            weights: measure.weights(),
            epsilon,
            block: DEFAULT_BLOCK,
        })
    }

    pub fn with_block(mut self, block: usize) -> Self {
        self.block = block.max(1);
        self
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(C f)_i`. Rows are reduced in index order: plain sums inside blocks,
    /// blocks combined by compensated summation.
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.len(), "coefficient vector length");
        let n = self.len();
        let gre: Vec<f64> = f.iter().zip(&self.weights).map(|(v, w)| v.re * w).collect();
        let gim: Vec<f64> = f.iter().zip(&self.weights).map(|(v, w)| v.im * w).collect();
        // the diagonal has d2 = 0 and is dropped by the same test as the
        // truncation, since eps2 >= 0
        let eps2 = self.epsilon * self.epsilon;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, slot) in out.iter_mut().enumerate() {
            let (xi, yi) = (self.xs[i], self.ys[i]);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut comp = Complex64::new(0.0, 0.0);
            for start in (0..n).step_by(self.block) {
                let end = (start + self.block).min(n);
                let (mut re, mut im) = (0.0f64, 0.0f64);
                let xs = &self.xs[start..end];
                let ys = &self.ys[start..end];
                let (gr, gi) = (&gre[start..end], &gim[start..end]);
                for j in 0..xs.len() {
                    let dx = xs[j] - xi;
                    let dy = ys[j] - yi;
                    let d2 = dx * dx + dy * dy;
                    let inv = if d2 > eps2 { 1.0 / d2 } else { 0.0 };
                    // g_j / (dx + i dy) = g_j (dx − i dy) / d2
                    re += (gr[j] * dx + gi[j] * dy) * inv;
                    im += (gi[j] * dx - gr[j] * dy) * inv;
                }
                neumaier(&mut sum, &mut comp, Complex64::new(re, im));
            }
            *slot = sum + comp;
        }
        out
    }

    /// Adjoint with respect to the weighted inner product.
    pub fn apply_adjoint(&self, g: &[Complex64]) -> Vec<Complex64> {
        let conj: Vec<Complex64> = g.iter().map(|v| v.conj()).collect();
        self.apply(&conj).into_iter().map(|v| -v.conj()).collect()
    }

    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        for ((a, b), w) in f.iter().zip(g).zip(&self.weights) {
            neumaier(&mut sum, &mut comp, a * b.conj() * w);
        }
        sum + comp
    }

    pub fn norm_sq(&self, f: &[Complex64]) -> f64 {
        crate::measures::compensated_sum(f.iter().zip(&self.weights).map(|(a, w)| a.norm_sqr() * w))
    }

    fn gram(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.apply_adjoint(&self.apply(f))
    }

    /// Largest singular value of `C` on `L²(μ)`.
    ///
    /// Starts from the constant vector; if that start is annihilated it
    /// restarts once from the alternating-sign vector. An operator that kills
    /// both starts reports norm zero.
    pub fn norm(&self, opts: &NormOptions) -> Result<NormEstimate> {
        if !(opts.tol > 0.0) {
            return Err(invalid("norm tolerance must be positive"));
        }
        let n = self.len();
        if n == 0 {
            return Err(invalid("operator norm of the empty measure"));
        }
        let starts: [fn(usize) -> f64; 2] = [|_| 1.0, |i| if i % 2 == 0 { 1.0 } else { -1.0 }];
        let mut spent = 0;
        for start in starts {
            let f: Vec<Complex64> = (0..n).map(|i| Complex64::new(start(i), 0.0)).collect();
            let outcome = match opts.method {
                NormMethod::Power => self.power(f, opts, &mut spent),
                NormMethod::Lanczos => self.lanczos(f, opts, &mut spent),
            };
            match outcome {
                Outcome::Annihilated => continue,
                Outcome::Converged(value, residual) => {
                    return Ok(NormEstimate {
                        value: value.sqrt(),
                        iterations: spent,
                        residual,
                    })
                }
                Outcome::Exhausted(best, residual) => {
                    return Err(Error::NonConvergence {
                        best: best.sqrt(),
                        iterations: spent,
                        residual,
                    })
                }
            }
        }
        Ok(NormEstimate {
            value: 0.0,
            iterations: spent,
            residual: 0.0,
        })
    }

    fn normalize(&self, f: &mut [Complex64]) -> f64 {
        let nf = self.norm_sq(f).sqrt();
        if nf > 0.0 {
            f.iter_mut().for_each(|v| *v /= nf);
        }
        nf
    }

    fn power(&self, mut f: Vec<Complex64>, opts: &NormOptions, spent: &mut usize) -> Outcome {
        self.normalize(&mut f);
        let mut prev = f64::NAN;
        let mut residual = f64::INFINITY;
        while *spent < opts.max_iter {
            *spent += 1;
            let u = self.apply(&f);
            let rq = self.norm_sq(&u);
            if rq == 0.0 {
                return Outcome::Annihilated;
            }
            if prev.is_finite() {
                residual = (rq - prev).abs() / rq;
                if residual < opts.tol {
                    return Outcome::Converged(rq, residual);
                }
            }
            prev = rq;
            // ⟨C*u, f⟩ = ‖u‖² > 0, so the adjoint image is nonzero
            f = self.apply_adjoint(&u);
            self.normalize(&mut f);
        }
        Outcome::Exhausted(prev, residual)
    }

    /// Lanczos on the self-adjoint operator `C*C`. The largest Ritz value is
    /// the maximal Rayleigh quotient over the Krylov space, so estimates
    /// increase monotonically towards `‖C‖²` from below.
    fn lanczos(&self, mut v: Vec<Complex64>, opts: &NormOptions, spent: &mut usize) -> Outcome {
        let n = self.len();
        let basis_cap = LANCZOS_BASIS.min(n);
        let mut best = f64::NAN;
        let mut residual = f64::INFINITY;
        self.normalize(&mut v);
        loop {
            let mut basis: Vec<Vec<Complex64>> = vec![v];
            let mut alpha: Vec<f64> = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            let mut theta_prev = f64::NAN;
            loop {
                if *spent >= opts.max_iter {
                    return Outcome::Exhausted(best, residual);
                }
                *spent += 1;
                let k = basis.len() - 1;
                let mut w = self.gram(&basis[k]);
                alpha.push(self.inner(&w, &basis[k]).re);
                // two passes of classical Gram-Schmidt against the whole basis
                for _ in 0..2 {
                    for b in &basis {
                        let c = self.inner(&w, b);
                        w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                    }
                }
                if k == 0 && alpha[0] <= 0.0 {
                    return Outcome::Annihilated;
                }
                let theta = largest_tridiagonal_eigenvalue(&alpha, &beta);
                let b_next = self.norm_sq(&w).sqrt();
                if theta_prev.is_finite() && theta > 0.0 {
                    residual = (theta - theta_prev).abs() / theta;
                }
                best = if best.is_finite() { best.max(theta) } else { theta };
                // invariant subspace: the Ritz value is exact
                let exhausted = basis.len() == n || b_next <= 1e-13 * theta;
                if exhausted || (theta_prev.is_finite() && residual < opts.tol) {
                    return Outcome::Converged(best, if exhausted { 0.0 } else { residual });
                }
                theta_prev = theta;
                if basis.len() == basis_cap {
                    // restart from the current Ritz vector
                    let s = tridiagonal_eigenvector(&alpha, &beta, theta);
                    let mut r = vec![Complex64::new(0.0, 0.0); n];
                    for (b, c) in basis.iter().zip(&s) {
                        r.iter_mut().zip(b).for_each(|(x, y)| *x += y * c);
                    }
                    self.normalize(&mut r);
                    v = r;
                    break;
                }
                beta.push(b_next);
                w.iter_mut().for_each(|x| *x /= b_next);
                basis.push(w);
            }
        }
    }
}

enum Outcome {
    Annihilated,
    Converged(f64, f64),
    Exhausted(f64, f64),
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, a) in alpha.iter().enumerate() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        q = a - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (a.abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn largest_tridiagonal_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let n = alpha.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i + 1 < n { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(alpha, beta, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Unit eigenvector for an eigenvalue `theta` of the tridiagonal matrix, by
/// inverse iteration with a slightly shifted pole.
fn tridiagonal_eigenvector(alpha: &[f64], beta: &[f64], theta: f64) -> Vec<f64> {
    let n = alpha.len();
    let shift = theta + 1e-10 * theta.abs().max(1e-300);
    let mut x = vec![1.0; n];
    for _ in 0..3 {
        // Thomas algorithm on (T − shift) y = x
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let sub = if i > 0 { beta[i - 1] } else { 0.0 };
            let sup = if i + 1 < n { beta[i] } else { 0.0 };
            let mut denom = alpha[i] - shift - if i > 0 { sub * c[i - 1] } else { 0.0 };
            if denom == 0.0 {
                denom = 1e-300;
            }
            c[i] = sup / denom;
            d[i] = (x[i] - if i > 0 { sub * d[i - 1] } else { 0.0 }) / denom;
        }
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            y[i] = d[i] - if i + 1 < n { c[i] * y[i + 1] } else { 0.0 };
        }
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y.into_iter().map(|v| v / ny).collect();
    }
    x
}

/// `‖C_{μ,ε}‖` on `L²(μ)` with the given tolerance and default cap.
pub fn operator_norm(measure: &DiscreteMeasure, epsilon: f64, tol: f64) -> Result<NormEstimate> {
    operator_norm_with(
        measure,
        epsilon,
        &NormOptions {
            tol,
            ..NormOptions::default()
        },
    )
}

pub fn operator_norm_with(measure: &DiscreteMeasure, epsilon: f64, opts: &NormOptions) -> Result<NormEstimate> {
    KernelOperator::new(measure, epsilon)?.with_block(opts.block).norm(opts)
}

/// `Σ_{|t − z| > ε} w / (t − z)`. With `ε = 0` an atom sitting at `z` is
/// skipped.
pub fn cauchy_transform(measure: &DiscreteMeasure, z: PlanePoint, epsilon: f64) -> Complex64 {
    let zc = z.to_complex();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    for a in measure.atoms() {
        let d = a.position.to_complex() - zc;
        let r = d.norm();
        if r > epsilon && r > 0.0 {
            neumaier(&mut sum, &mut comp, a.weight / d);
        }
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImaginaryBound {
    /// `|Im C μ(z)|`.
    pub value: f64,
    /// Poisson-integral majorant `ρ (π + 2 h_max / y)`, capped by `‖μ‖ / y`.
    pub majorant: f64,
}

/// Imaginary part of the Cauchy transform of a measure on the real axis,
/// against its Poisson-kernel majorant.
///
/// `ρ` is the largest atom weight per Voronoi cell length and `h_max` the
/// largest cell; the `2 h_max / y` term bounds the Riemann-sum excess of the
/// unimodal Poisson kernel `y / ((t − x)² + y²)`.
pub fn imaginary_part_bound(measure: &DiscreteMeasure, z: PlanePoint) -> Result<ImaginaryBound> {
    if !(z.y > 0.0) {
        return Err(invalid("imaginary part bound needs Im z > 0"));
    }
    if measure.atoms().iter().any(|a| a.position.y != 0.0) {
        return Err(invalid("imaginary part bound needs atoms on the real axis"));
    }
    let value = cauchy_transform(measure, z, 0.0).im.abs();
    let mut atoms: Vec<(f64, f64)> = measure.atoms().iter().map(|a| (a.position.x, a.weight)).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let trivial = measure.total_mass() / z.y;
    let majorant = if atoms.len() < 2 {
        trivial
    } else {
        let n = atoms.len();
        let gap = |i: usize| atoms[i + 1].0 - atoms[i].0;
        let mut rho = 0.0f64;
        let mut h_max = 0.0f64;
        for i in 0..n {
            let left = if i == 0 { gap(0) } else { gap(i - 1) };
            let right = if i == n - 1 { gap(n - 2) } else { gap(i) };
            let cell = 0.5 * (left + right);
            rho = rho.max(atoms[i].1 / cell);
            h_max = h_max.max(cell);
        }
        (rho * (std::f64::consts::PI + 2.0 * h_max / z.y)).min(trivial)
    };
    debug_assert!(value <= majorant * (1.0 + 1e-12));
    Ok(ImaginaryBound { value, majorant })
}

/// `r γ / dist²`: the far-field bound for the difference of two functions
/// with the same residue at infinity, with unit constant.
pub fn schwartz_tail_bound(radius: f64, gamma: f64, dist: f64) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(invalid("tail bound needs a positive distance"));
    }
    Ok(radius * gamma / (dist * dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Atom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn atoms(v: &[(f64, f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::new(v.iter().map(|&(x, y, w)| Atom {
            position: PlanePoint::new(x, y),
            weight: w,
        }))
        .unwrap()
    }

    fn uniform_segment(a: f64, b: f64, n: usize) -> DiscreteMeasure {
        let h = (b - a) / n as f64;
        DiscreteMeasure::new((0..n).map(|i| Atom {
            position: PlanePoint::new(a + (i as f64 + 0.5) * h, 0.0),
            weight: h,
        }))
        .unwrap()
    }

    /// Dense oracle: `‖A‖₂` for `A_ij = sqrt(w_i w_j) / (z_j − z_i)` by
    /// Jacobi eigenvalues of the Hermitian `A^H A`, written out directly.
    fn dense_norm(m: &DiscreteMeasure) -> f64 {
        let n = m.len();
        let z: Vec<Complex64> = m.positions().iter().map(|p| p.to_complex()).collect();
        let w = m.weights();
        let a = |i: usize, j: usize| {
            if i == j {
                Complex64::new(0.0, 0.0)
            } else {
                (w[i] * w[j]).sqrt() / (z[j] - z[i])
            }
        };
        // Gram matrix H = A^H A
        let mut h = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for p in 0..n {
            for q in 0..n {
                h[p][q] = (0..n).map(|k| a(k, p).conj() * a(k, q)).sum();
            }
        }
        // largest eigenvalue of H by many power steps from several starts
        let mut best = 0.0f64;
        for s in 0..n {
            let mut v: Vec<Complex64> = (0..n).map(|k| Complex64::new(((k + s) % 3) as f64 + 0.1, k as f64 * 0.01)).collect();
            let mut lam = 0.0;
            for _ in 0..2000 {
                let hv: Vec<Complex64> = (0..n).map(|p| (0..n).map(|q| h[p][q] * v[q]).sum()).collect();
                let nv = hv.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if nv == 0.0 {
                    break;
                }
                lam = nv;
                v = hv.into_iter().map(|c| c / nv).collect();
            }
            best = best.max(lam);
        }
        best.sqrt()
    }

    #[test]
    fn transform_examples() {
        let one = atoms(&[(0.0, 0.0, 1.0)]);
        let v = cauchy_transform(&one, PlanePoint::new(1.0, 0.0), 0.0);
        assert_eq!(v, Complex64::new(-1.0, 0.0));
        let pair = atoms(&[(-1.0, 0.0, 1.0), (1.0, 0.0, 1.0)]);
        assert!(cauchy_transform(&pair, PlanePoint::ORIGIN, 0.0).norm() < 1e-15);
        // atom at z is skipped, atoms within ε are dropped
        assert_eq!(cauchy_transform(&one, PlanePoint::ORIGIN, 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(cauchy_transform(&one, PlanePoint::new(0.5, 0.0), 0.6), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn transform_of_segment_matches_antiderivative() {
        // ∫_0^1 dt / (t − 2) = log(1) − log(2)... = log|t − 2| from 0 to 1 = −log 2
        let seg = uniform_segment(0.0, 1.0, 2000);
        let v = cauchy_transform(&seg, PlanePoint::new(2.0, 0.0), 0.0);
        assert!((v.re + std::f64::consts::LN_2).abs() < 1e-3);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn imaginary_part_examples() {
        let one = atoms(&[(0.7, 0.0, 1.0)]);
        let b = imaginary_part_bound(&one, PlanePoint::new(0.0, 1.0)).unwrap();
        assert!((b.value - 1.0 / (0.49 + 1.0)).abs() < 1e-15);
        assert!(b.value <= b.majorant && b.majorant <= 1.0);

        let line = uniform_segment(-10.0, 10.0, 4000);
        for &(x, y) in &[(0.0, 0.3), (3.0, 1.0), (9.9, 0.05), (0.0, 5.0), (-4.0, 0.01)] {
            let b = imaginary_part_bound(&line, PlanePoint::new(x, y)).unwrap();
            assert!(b.value <= b.majorant);
            assert!(b.value <= std::f64::consts::PI + 1e-2, "{x},{y}: {}", b.value);
        }
        let centre = imaginary_part_bound(&line, PlanePoint::new(0.0, 0.1)).unwrap();
        assert!((centre.value - std::f64::consts::PI).abs() < 0.02);

        let doubled = line.rescale(3.0).unwrap();
        let z = PlanePoint::new(1.0, 0.5);
        let a = imaginary_part_bound(&line, z).unwrap().value;
        let c = imaginary_part_bound(&doubled, z).unwrap().value;
        assert!((c - 3.0 * a).abs() < 1e-12 * c);

        assert!(imaginary_part_bound(&atoms(&[(0.0, 1.0, 1.0)]), PlanePoint::new(0.0, 2.0)).is_err());
        assert!(imaginary_part_bound(&one, PlanePoint::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn single_atom_norm_is_zero() {
        let est = operator_norm(&atoms(&[(0.2, 0.3, 5.0)]), 0.0, 1e-8).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(operator_norm(&DiscreteMeasure::empty(), 0.0, 1e-8).is_err());
    }

    #[test]
    fn two_atom_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let d: f64 = rng.gen_range(0.01..10.0);
            let w: f64 = rng.gen_range(0.01..10.0);
            let ang: f64 = rng.gen_range(0.0..6.28);
            let p = PlanePoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let q = p.polar_offset(d, ang);
            let m = atoms(&[(p.x, p.y, w), (q.x, q.y, w)]);
            let est = operator_norm(&m, 0.0, 1e-12).unwrap();
            let exact = w / p.dist(q);
            assert!((est.value - exact).abs() <= 1e-10 * exact, "{} vs {}", est.value, exact);
        }
    }

    #[test]
    fn power_iteration_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [3usize, 5, 9, 14] {
            let v: Vec<(f64, f64, f64)> = (0..n)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0)))
                .collect();
            let m = atoms(&v);
            let oracle = dense_norm(&m);
            for method in [NormMethod::Lanczos, NormMethod::Power] {
                let opts = NormOptions {
                    tol: 1e-12,
                    method,
                    ..NormOptions::default()
                };
                let est = operator_norm_with(&m, 0.0, &opts).unwrap();
                assert!((est.value - oracle).abs() < 1e-6 * oracle, "n={n}: {} vs {oracle}", est.value);
            }
        }
    }

    #[test]
    fn lanczos_agrees_with_power_iteration_past_restart() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<(f64, f64, f64)> = (0..400)
            .map(|_| (rng.gen_range(0.0..4.0), rng.gen_range(0.0..0.05), rng.gen_range(0.001..0.01)))
            .collect();
        let m = atoms(&v);
        let run = |method| {
            let opts = NormOptions {
                tol: 1e-11,
                method,
                ..NormOptions::default()
            };
            operator_norm_with(&m, 0.0, &opts).unwrap()
        };
        let (l, p) = (run(NormMethod::Lanczos), run(NormMethod::Power));
        assert!((l.value - p.value).abs() < 1e-4 * p.value, "{l:?} {p:?}");
        assert!(l.iterations < p.iterations);
    }

    #[test]
    fn adjoint_identity() {
        let m = atoms(&[(0.0, 0.0, 1.0), (1.0, 0.5, 0.3), (-0.4, 2.0, 2.0), (0.3, -1.0, 0.7)]);
        let op = KernelOperator::new(&m, 0.0).unwrap();
        let f: Vec<Complex64> = (0..4).map(|k| Complex64::new(k as f64 - 1.0, 0.5 * k as f64)).collect();
        let g: Vec<Complex64> = (0..4).map(|k| Complex64::new(0.3, 1.0 - k as f64)).collect();
        let lhs = op.inner(&op.apply(&f), &g);
        let rhs = op.inner(&f, &op.apply_adjoint(&g));
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn truncation_radius_drops_pairs() {
        let m = atoms(&[(0.0, 0.0, 1.0), (0.1, 0.0, 1.0), (5.0, 0.0, 1.0)]);
        let full = operator_norm(&m, 0.0, 1e-12).unwrap().value;
        let cut = operator_norm(&m, 0.5, 1e-12).unwrap().value;
        assert!(cut < full);
        // every pair dropped
        assert_eq!(operator_norm(&m, 100.0, 1e-12).unwrap().value, 0.0);
        // discarded-pairs operator: the close pair alone
        let close = atoms(&[(0.0, 0.0, 1.0), (0.1, 0.0, 1.0)]);
        let dropped = operator_norm(&close, 0.0, 1e-12).unwrap().value;
        assert!(full <= cut + dropped + 1e-9);
        assert!(cut <= full + dropped + 1e-9);
    }

    #[test]
    fn schwartz_bound_examples() {
        assert!((schwartz_tail_bound(1.0, 1.0, 10.0).unwrap() - 0.01).abs() < 1e-18);
        let a = schwartz_tail_bound(0.3, 0.7, 2.0).unwrap();
        let b = schwartz_tail_bound(0.3, 0.7, 4.0).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        assert!(schwartz_tail_bound(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn equal_mass_difference_obeys_tail_envelope() {
        // two different measures of equal mass in D(0, 1)
        let r = 1.0;
        let mass = 0.5;
        let seg = uniform_segment(-0.5, 0.5, 200).rescale(mass).unwrap();
        let n = 120;
        let circle = DiscreteMeasure::new((0..n).map(|k| Atom {
            position: PlanePoint::ORIGIN.polar_offset(0.8, 2.0 * std::f64::consts::PI * (k as f64 + 0.3) / n as f64),
            weight: mass / n as f64,
        }))
        .unwrap();
        let support: Vec<PlanePoint> = seg.positions().into_iter().chain(circle.positions()).collect();
        let mut worst = 0.0f64;
        for i in 0..60 {
            for j in 0..60 {
                let z = PlanePoint::new(-15.0 + 0.5 * i as f64, -15.0 + 0.5 * j as f64);
                let dist = support.iter().map(|p| p.dist(z)).fold(f64::INFINITY, f64::min);
                if z.norm() < 2.0 * r {
                    continue;
                }
                let diff = (cauchy_transform(&seg, z, 0.0) - cauchy_transform(&circle, z, 0.0)).norm();
                let bound = schwartz_tail_bound(r, mass, dist).unwrap();
                worst = worst.max(diff / bound);
            }
        }
        assert!(worst <= 40.0, "envelope {worst}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn measure() -> impl Strategy<Value = DiscreteMeasure> {
            proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.05f64..2.0), 2..24)
                .prop_map(|v| atoms(&v))
                .prop_filter("well separated atoms", |m| m.min_gap().map_or(false, |g| g > 1e-3))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn linearity(m in measure(), s in -2.0f64..2.0) {
                let op = KernelOperator::new(&m, 0.0).unwrap();
                let n = m.len();
                let f: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64 * s, 1.0)).collect();
                let g: Vec<Complex64> = (0..n).map(|k| Complex64::new(1.0, -(k as f64))).collect();
                let sum: Vec<Complex64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
                let lhs = op.apply(&sum);
                let (cf, cg) = (op.apply(&f), op.apply(&g));
                let scale = lhs.iter().map(|v| v.norm()).fold(1.0, f64::max);
                for k in 0..n {
                    prop_assert!((lhs[k] - cf[k] - cg[k]).norm() <= 1e-12 * scale);
                }
            }

            #[test]
            fn norm_scales_linearly(m in measure(), c in 0.1f64..10.0) {
                let a = operator_norm(&m, 0.0, 1e-10).unwrap().value;
                let b = operator_norm(&m.rescale(c).unwrap(), 0.0, 1e-10).unwrap().value;
                prop_assert!((b - c * a).abs() <= 1e-6 * c * a);
            }

            #[test]
            fn rigid_motion_invariance(m in measure(), ang in 0.0f64..6.283, dx in -10.0f64..10.0, dy in -10.0f64..10.0) {
                let a = operator_norm(&m, 0.0, 1e-13).unwrap().value;
                let moved = m.rigid_motion(ang, PlanePoint::new(dx, dy)).unwrap();
                let b = operator_norm(&moved, 0.0, 1e-13).unwrap().value;
                prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0), "{} vs {}", a, b);
            }
        }
    }
}
