//! Model parameters, bracket arithmetic, weight-vector combinatorics, and the
//! elementary product functions (weight `W`, cosh kernel `S`, bracket
//! polynomial `delta`).
//!
//! Conventions used across the crate:
//! - `q = exp(-i*pi/a)` and every power `q^z` is the principal exponential
//!   `exp(-i*pi*z/a)`; no root extraction anywhere, hence no branch issues.
//! - The bracket is `[z] = q^z - q^{-z} = -2i sin(pi z / a)`.
//! - `[n + i w] = 2 sinh(pi (w - i n)/a)` connects bracket products to the
//!   hyperbolic factors used by the integral formulas.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const PI: f64 = std::f64::consts::PI;

/// Relative pole tolerance: a denominator factor whose modulus falls below
/// `POLE_REL_TOL * local_scale` raises [`Error::PoleProximity`] instead of
/// silently producing a huge value. The local scale is the natural magnitude
/// of the factor away from its zero set (e.g. `exp(|Re(pi w/a)|)` for
/// `sinh(pi w/a)`), so the guard is meaningful for arguments of any size.
pub const POLE_REL_TOL: f64 = 1e-13;

/// Minimum pairwise separation of coordinate real parts accepted by the
/// residue-sum evaluator. Below this the nested contours of the recursion
/// can no longer be separated and the 0/0 removable forms are not resolved.
pub const MIN_RE_SEPARATION: f64 = 1e-6;

/// Validated model parameters.
///
/// `a` is the scale parameter, `m >= 1` the integer coupling, `p = m - 1`
/// the expansion integer, and `q = exp(-i*pi/a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub m: u32,
    pub p: u32,
    pub q: Complex64,
}

/// Validates `(a, m)` and computes `q`.
///
/// Requires `a > m - 1` (so the pole towers of every integral formula fit
/// strictly inside the fundamental strip) and `m >= 1`. The non-resonance
/// assumption (`q` not a root of unity in the operative sense
/// `sin(pi n / a) != 0` for `1 <= n <= m-1`) is not decidable in floating
/// point and is the caller's responsibility; fixtures use values like
/// `2.5`, `3.7` for which the relevant sines are safely nonzero.
pub fn build_params(a: f64, m: u32) -> Result<ModelParams> {
    if !a.is_finite() {
        return Err(Error::InvalidParameter(format!("a = {a} is not finite")));
    }
    if m < 1 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    if a <= (m - 1) as f64 {
        return Err(Error::InvalidParameter(format!(
            "a = {a} must exceed m - 1 = {}",
            m - 1
        )));
    }
    let q = (-Complex64::i() * PI / a).exp();
    Ok(ModelParams { a, m, p: m - 1, q })
}

impl ModelParams {
    /// `q^z = exp(-i*pi*z/a)` via the principal exponential.
    pub fn q_pow(&self, z: Complex64) -> Complex64 {
        (-Complex64::i() * PI * z / self.a).exp()
    }

    /// The sine product `P = prod_{n=1}^{m-1} 2 sin(pi n / a)`; empty for
    /// `m = 1`. Strictly positive because `a > m - 1` keeps every angle in
    /// `(0, pi)`.
    pub fn sin_prod(&self) -> f64 {
        (1..self.m)
            .map(|n| 2.0 * (PI * n as f64 / self.a).sin())
            .product()
    }

    /// The normalization constant `K = a (-i)^m / P` relating the
    /// residue-sum expansion to the absolutely normalized eigenfunction.
    pub fn k_const(&self) -> Complex64 {
        self.a * minus_i_pow(self.m) / self.sin_prod()
    }
}

/// `(-i)^m` computed exactly by quadrant.
pub fn minus_i_pow(m: u32) -> Complex64 {
    match m % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `i^m` computed exactly by quadrant.
pub fn i_pow(m: u32) -> Complex64 {
    match m % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// The bracket `[z] = q^z - q^{-z}`.
pub fn bracket(params: &ModelParams, z: Complex64) -> Complex64 {
    params.q_pow(z) - params.q_pow(-z)
}

/// `2 sinh(pi w / a)`.
pub fn two_sinh(a: f64, w: Complex64) -> Complex64 {
    2.0 * (PI * w / a).sinh()
}

/// `2 cosh(pi w / a)`.
pub fn two_cosh(a: f64, w: Complex64) -> Complex64 {
    2.0 * (PI * w / a).cosh()
}

/// `2 sin(pi w / a)` for real `w`.
pub fn two_sin(a: f64, w: f64) -> f64 {
    2.0 * (PI * w / a).sin()
}

/// `2 sinh(pi w / a)` with the pole guard: errors when the factor sits on
/// its zero set within [`POLE_REL_TOL`] relative to the local scale
/// `max(1, exp(|Re(pi w/a)|))`.
pub fn checked_two_sinh(a: f64, w: Complex64, context: &'static str) -> Result<Complex64> {
    let arg = PI * w / a;
    let f = 2.0 * arg.sinh();
    let scale = arg.re.abs().exp().max(1.0);
    if f.norm() < POLE_REL_TOL * scale {
        return Err(Error::PoleProximity {
            context,
            magnitude: f.norm(),
            tolerance: POLE_REL_TOL * scale,
        });
    }
    Ok(f)
}

/// `2 cosh(pi w / a)` with the pole guard (zeros on the imaginary lattice
/// `w in i a (1/2 + Z)`).
pub fn checked_two_cosh(a: f64, w: Complex64, context: &'static str) -> Result<Complex64> {
    let arg = PI * w / a;
    let f = 2.0 * arg.cosh();
    let scale = arg.re.abs().exp().max(1.0);
    if f.norm() < POLE_REL_TOL * scale {
        return Err(Error::PoleProximity {
            context,
            magnitude: f.norm(),
            tolerance: POLE_REL_TOL * scale,
        });
    }
    Ok(f)
}

/// Elementary symmetric function `e_r(t_1, ..., t_n)`: the sum over
/// r-subsets of products.
///
/// Computed by the stable product expansion `prod_j (1 + t_j y)` rather than
/// explicit subset enumeration; the two agree term by term (property-tested).
pub fn elementary_symmetric(r: usize, t: &[Complex64]) -> Result<Complex64> {
    if r < 1 || r > t.len() {
        return Err(Error::IndexOutOfRange(format!(
            "elementary_symmetric: r = {r} not in 1..={}",
            t.len()
        )));
    }
    let mut e = vec![Complex64::new(0.0, 0.0); r + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for &tj in t {
        for k in (1..=r).rev() {
            let prev = e[k - 1];
            e[k] += tj * prev;
        }
    }
    Ok(e[r])
}

/// Ordered pairs `(j, k)` with `j < k`, row-major: `(0,1), (0,2), ..., (n-2,n-1)`.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for j in 0..n {
        for k in (j + 1)..n {
            out.push((j, k));
        }
    }
    out
}

/// Index of pair `(j, k)` (0-based, `j < k`) in the [`pairs`] order.
pub fn pair_index(n: usize, j: usize, k: usize) -> usize {
    debug_assert!(j < k && k < n);
    // pairs before row j: sum_{r<j} (n-1-r), then offset inside row j
    j * n - j * (j + 1) / 2 + (k - j - 1)
}

/// All size-`r` subsets of `{0, ..., n-1}` in lexicographic order.
pub fn subsets_of_size(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        // advance the lexicographic odometer
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - r {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All permutations of `{0, ..., n-1}` with signs, via Heap's algorithm.
/// The identity comes first; each successive permutation differs by one
/// transposition, so signs alternate deterministically.
pub fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, i32)> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1i32;
    let mut c = vec![0usize; n];
    out.push((perm.clone(), sign));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            out.push((perm.clone(), sign));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// A term index of the expansion: labels `l_{jk} in {0, ..., p}` over pairs
/// `(j, k)`, `j < k`, in [`pairs`] order, together with the induced weight
/// `nu = sum_{j<k} (p/2 - l_{jk}) (e_j - e_k)` (half-integer entries, zero sum).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub labels: Vec<u32>,
    pub nu: Vec<f64>,
}

impl WeightVector {
    /// Builds the weight from its labels.
    pub fn from_labels(n: usize, p: u32, labels: Vec<u32>) -> Self {
        debug_assert_eq!(labels.len(), n * (n - 1) / 2);
        let mut nu = vec![0.0; n];
        for (idx, &(j, k)) in pairs(n).iter().enumerate() {
            let c = p as f64 / 2.0 - labels[idx] as f64;
            nu[j] += c;
            nu[k] -= c;
        }
        WeightVector { labels, nu }
    }

    /// `(nu, y) = sum_j nu_j y_j`.
    pub fn nu_dot(&self, y: &[Complex64]) -> Complex64 {
        self.nu.iter().zip(y).map(|(&nj, &yj)| nj * yj).sum()
    }
}

/// Exhaustive weight-vector enumeration: `(p+1)^{n(n-1)/2}` elements in
/// lexicographic label order (`l_{12}` most significant).
pub fn weight_vectors(n: usize, p: u32) -> Vec<WeightVector> {
    let np = n * (n - 1) / 2;
    let total = (p as usize + 1).pow(np as u32);
    let mut out = Vec::with_capacity(total);
    let mut labels = vec![0u32; np];
    loop {
        out.push(WeightVector::from_labels(n, p, labels.clone()));
        // increment the least-significant (last) position
        let mut pos = np;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if labels[pos] < p {
                labels[pos] += 1;
                for l in labels.iter_mut().skip(pos + 1) {
                    *l = 0;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
    }
}

/// The dominant weight: all labels zero; `nu_j = (p/2)(n - 2j + 1)` in
/// 1-based `j`.
pub fn rho(n: usize, p: u32) -> WeightVector {
    WeightVector::from_labels(n, p, vec![0; n * (n - 1) / 2])
}

/// Weight function `W(x) = prod_{j != k} prod_{n=0}^{mW-1}
/// 2 sinh(pi (x_j - x_k - i n)/a)`; empty products (`N = 1` or `mW = 0`)
/// return 1. `mW` is explicit because two call sites use `m` and `m + 1`.
pub fn weight_w(params: &ModelParams, x: &[Complex64], m_w: u32) -> Complex64 {
    let mut out = Complex64::new(1.0, 0.0);
    for j in 0..x.len() {
        for k in 0..x.len() {
            if j == k {
                continue;
            }
            for n in 0..m_w {
                out *= two_sinh(params.a, x[j] - x[k] - Complex64::i() * n as f64);
            }
        }
    }
    out
}

/// Cosh kernel `S(x, z) = prod_{j=1}^{N} prod_{k=1}^{N-1} prod_{n=0}^{m-1}
/// 1 / (2 cosh(pi (x_j - z_k + i(m - 2n - 1)/2)/a))` coupling level `N` to
/// level `N-1`.
pub fn kernel_s(params: &ModelParams, x: &[Complex64], z: &[Complex64]) -> Result<Complex64> {
    if x.len() != z.len() + 1 {
        return Err(Error::Precondition(format!(
            "kernel_s: expected len(x) = len(z) + 1, got {} and {}",
            x.len(),
            z.len()
        )));
    }
    let mut out = Complex64::new(1.0, 0.0);
    for &xj in x {
        for &zk in z {
            for n in 0..params.m {
                let off = Complex64::i() * ((params.m as f64 - 2.0 * n as f64 - 1.0) / 2.0);
                out /= checked_two_cosh(params.a, xj - zk + off, "kernel_s")?;
            }
        }
    }
    Ok(out)
}

/// Bracket polynomial `delta(x; mD) = prod_{j<k} prod_{n=-mD}^{mD}
/// [x_j - x_k + n]`.
pub fn delta_poly(params: &ModelParams, x: &[Complex64], m_d: u32) -> Complex64 {
    let mut out = Complex64::new(1.0, 0.0);
    for (j, k) in pairs(x.len()) {
        for n in -(m_d as i64)..=(m_d as i64) {
            out *= bracket(params, x[j] - x[k] + Complex64::new(n as f64, 0.0));
        }
    }
    out
}

/// Enforces the contour-separation precondition
/// `min_{j<k} |Re(x_j - x_k)| >= MIN_RE_SEPARATION`.
pub fn check_re_separation(x: &[Complex64]) -> Result<()> {
    for (j, k) in pairs(x.len()) {
        if (x[j].re - x[k].re).abs() < MIN_RE_SEPARATION {
            return Err(Error::Precondition(format!(
                "coordinates {j} and {k} have |Re difference| = {:.3e} < {MIN_RE_SEPARATION:.0e}",
                (x[j].re - x[k].re).abs()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn build_params_basic() {
        let p = build_params(2.5, 2).unwrap();
        assert_eq!(p.p, 1);
        // q = exp(-i pi / 2.5); oracle digits frozen from an independent source
        assert_relative_eq!(p.q.re, 0.3090169943749474, max_relative = 1e-15);
        assert_relative_eq!(p.q.im, -0.9510565162951535, max_relative = 1e-15);

        let p = build_params(3.3, 1).unwrap();
        assert_eq!(p.p, 0);
        assert_relative_eq!(p.q.re, (PI / 3.3).cos(), max_relative = 1e-15);

        assert!(build_params(1.0, 2).is_err());
        assert!(build_params(2.0, 0).is_err());
        assert!(build_params(f64::NAN, 1).is_err());
    }

    #[test]
    fn sin_prod_values() {
        let p2 = build_params(2.5, 2).unwrap();
        assert_relative_eq!(p2.sin_prod(), 1.902113032590307, max_relative = 1e-15);
        let p3 = build_params(2.5, 3).unwrap();
        assert_relative_eq!(p3.sin_prod(), 2.23606797749979, max_relative = 1e-15);
        let p1 = build_params(2.5, 1).unwrap();
        assert_eq!(p1.sin_prod(), 1.0);
    }

    #[test]
    fn bracket_examples() {
        let p = build_params(2.0, 1).unwrap();
        // z = 0 and z = a are exact zeros up to roundoff
        assert!(bracket(&p, c(0.0, 0.0)).norm() < 1e-15);
        assert!(bracket(&p, c(2.0, 0.0)).norm() < 1e-15);
        // a = 2, z = 1: q = -i, so [1] = -2i
        let b = bracket(&p, c(1.0, 0.0));
        assert_relative_eq!(b.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(b.im, -2.0, max_relative = 1e-14);
    }

    #[test]
    fn bracket_periodicity_and_antisymmetry() {
        let p = build_params(2.5, 2).unwrap();
        for &z in &[c(0.3, 0.1), c(-1.2, 0.7), c(4.0, -2.0)] {
            let b = bracket(&p, z);
            let b_shift = bracket(&p, z + c(2.0 * p.a, 0.0));
            assert!((b - b_shift).norm() <= 1e-12 * b.norm().max(1.0));
            let b_neg = bracket(&p, -z);
            assert!((b + b_neg).norm() <= 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn bracket_matches_hyperbolic_factor() {
        // [n + i w] = 2 sinh(pi (w - i n)/a): the identity that converts
        // bracket products into the hyperbolic factors.
        let p = build_params(2.5, 2).unwrap();
        let w = c(0.6, -0.3);
        for n in -2i32..=2 {
            let lhs = bracket(&p, Complex64::new(n as f64, 0.0) + Complex64::i() * w);
            let rhs = two_sinh(p.a, w - Complex64::i() * n as f64);
            assert!((lhs - rhs).norm() <= 1e-13 * rhs.norm());
        }
    }

    #[test]
    fn elementary_symmetric_examples() {
        let t = [c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)];
        assert_relative_eq!(elementary_symmetric(1, &t).unwrap().re, 9.0);
        assert_relative_eq!(elementary_symmetric(2, &t).unwrap().re, 26.0);
        assert_relative_eq!(elementary_symmetric(3, &t).unwrap().re, 24.0);
        assert!(elementary_symmetric(0, &t).is_err());
        assert!(elementary_symmetric(4, &t).is_err());
    }

    #[test]
    fn weight_vectors_enumeration() {
        let ws = weight_vectors(2, 2);
        assert_eq!(ws.len(), 3);
        // lexicographic: l12 = 0, 1, 2 -> nu = (1,-1), (0,0), (-1,1)
        assert_eq!(ws[0].nu, vec![1.0, -1.0]);
        assert_eq!(ws[1].nu, vec![0.0, 0.0]);
        assert_eq!(ws[2].nu, vec![-1.0, 1.0]);

        let ws = weight_vectors(3, 1);
        assert_eq!(ws.len(), 8);
        // first is rho, labels (0,0,0); second increments the last label l23
        assert_eq!(ws[0].labels, vec![0, 0, 0]);
        assert_eq!(ws[1].labels, vec![0, 0, 1]);
        assert_eq!(ws[7].labels, vec![1, 1, 1]);

        let ws = weight_vectors(4, 0);
        assert_eq!(ws.len(), 1);
        assert!(ws[0].nu.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rho_entries() {
        assert_eq!(rho(2, 1).nu, vec![0.5, -0.5]);
        assert_eq!(rho(3, 2).nu, vec![2.0, 0.0, -2.0]);
        assert_eq!(rho(3, 0).nu, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn pair_index_roundtrip() {
        for n in 1..=6 {
            for (idx, &(j, k)) in pairs(n).iter().enumerate() {
                assert_eq!(pair_index(n, j, k), idx);
            }
        }
    }

    #[test]
    fn subsets_enumeration() {
        assert_eq!(subsets_of_size(4, 2).len(), 6);
        assert_eq!(subsets_of_size(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(subsets_of_size(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(subsets_of_size(2, 3).len(), 0);
    }

    #[test]
    fn permutations_signs() {
        let ps = permutations_with_sign(3);
        assert_eq!(ps.len(), 6);
        assert_eq!(ps[0], ((0..3).collect::<Vec<_>>(), 1));
        // every sign equals the parity of the permutation
        for (perm, sign) in &ps {
            let mut inv = 0;
            for i in 0..perm.len() {
                for j in (i + 1)..perm.len() {
                    if perm[i] > perm[j] {
                        inv += 1;
                    }
                }
            }
            assert_eq!(*sign, if inv % 2 == 0 { 1 } else { -1 });
        }
    }

    #[test]
    fn weight_w_examples() {
        let p = build_params(2.5, 2).unwrap();
        assert_eq!(weight_w(&p, &[c(0.3, 0.0)], 2), c(1.0, 0.0));
        assert_eq!(weight_w(&p, &[c(0.3, 0.0), c(0.9, 0.0)], 0), c(1.0, 0.0));
        // coincident points vanish through the n = 0 factor
        assert!(weight_w(&p, &[c(0.3, 0.0), c(0.3, 0.0)], 1).norm() < 1e-15);
        // N = 2, mW = 1: -4 sinh^2(pi (x1 - x2)/a)
        let (x1, x2) = (c(0.7, 0.0), c(0.1, 0.0));
        let w = weight_w(&p, &[x1, x2], 1);
        let s = (PI * (x1 - x2) / p.a).sinh();
        assert!((w - (-4.0 * s * s)).norm() <= 1e-14 * w.norm());
    }

    #[test]
    fn weight_w_translation_invariance() {
        let p = build_params(2.5, 2).unwrap();
        let x = [c(0.7, 0.1), c(-0.2, 0.4), c(0.3, -0.6)];
        let t = c(0.37, -0.81);
        let shifted: Vec<_> = x.iter().map(|&xj| xj + t).collect();
        let w0 = weight_w(&p, &x, 2);
        let w1 = weight_w(&p, &shifted, 2);
        assert!((w0 - w1).norm() <= 1e-12 * w0.norm());
    }

    #[test]
    fn kernel_s_examples() {
        let p = build_params(2.5, 1).unwrap();
        assert_eq!(kernel_s(&p, &[c(0.3, 0.0)], &[]).unwrap(), c(1.0, 0.0));
        // N = 2, m = 1, z = x1: the j = 1 factor is 1/(2 cosh 0) = 1/2
        let (t0, t1) = (c(0.4, 0.0), c(-0.8, 0.0));
        let v = kernel_s(&p, &[t0, t1], &[t0]).unwrap();
        let expect = 1.0 / (2.0 * 2.0 * (PI * (t1 - t0) / p.a).cosh().re);
        assert_relative_eq!(v.re, expect, max_relative = 1e-13);
        assert!(v.im.abs() < 1e-15);
        assert!(kernel_s(&p, &[t0, t1], &[t0, t1]).is_err());
    }

    #[test]
    fn kernel_s_pole_guard() {
        // a cosh zero: x - z + i(m - 2n - 1)/2 = i a/2 at m = 2, n = 0 means
        // x - z = i(a - 1)/2
        let p = build_params(2.5, 2).unwrap();
        let z = c(0.1, 0.0);
        let x = z + Complex64::i() * ((p.a - 1.0) / 2.0);
        let err = kernel_s(&p, &[x, c(5.0, 0.0)], &[z]);
        assert!(matches!(err, Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn delta_poly_examples() {
        let p = build_params(2.5, 2).unwrap();
        assert_eq!(delta_poly(&p, &[c(0.3, 0.0)], 1), c(1.0, 0.0));
        let x = [c(0.9, 0.0), c(0.2, 0.0)];
        let d0 = delta_poly(&p, &x, 0);
        let b = bracket(&p, x[0] - x[1]);
        assert!((d0 - b).norm() <= 1e-14 * b.norm());
        // x1 - x2 = 1 with mD = 1 hits the n = -1 zero
        let x = [c(1.2, 0.0), c(0.2, 0.0)];
        assert!(delta_poly(&p, &x, 1).norm() < 1e-13);
    }

    #[test]
    fn re_separation_guard() {
        assert!(check_re_separation(&[c(0.0, 0.0), c(1e-7, 3.0)]).is_err());
        assert!(check_re_separation(&[c(0.0, 0.0), c(0.2, 0.0)]).is_ok());
    }
}
