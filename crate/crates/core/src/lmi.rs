//! Worst-case residual constraints as linear matrix inequalities.
//!
//! For a receive gain `g`, a precoding block `M` and a target column `k`,
//! the MSE at channel `h` is `‖g hᴴM − e_kᵀ‖² + |g|²σ²`. Requiring the
//! residual norm to stay below `τ` for every `h = ĥ + h̃`, `‖h̃‖ ≤ δ`, is
//! equivalent (single-ball S-procedure) to
//!
//! ```text
//!     ⎡ τ − λ   ψᴴ        0      ⎤
//!     ⎢ ψ       I     −δ Mᴴ ḡ    ⎥ ⪰ 0,     ψᴴ = g ĥᴴM − e_kᵀ,
//!     ⎣ 0     −δ g M     λ I     ⎦
//! ```
//!
//! which also forces `λ ≥ 0` through its last diagonal block. Exactly one
//! of `g` and `M` may be a decision variable; the other is held fixed.

use nalgebra::DMatrix;
use rsbeam_conic::{Cone, ConeBlock};

use crate::error::{Error, Result};
use crate::model::{CMat, CVec, C64};

/// Complex affine function of real decision variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CAff {
    pub constant: C64,
    pub terms: Vec<(usize, C64)>,
}

impl CAff {
    pub fn constant(c: C64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn real(c: f64) -> Self {
        Self::constant(C64::from(c))
    }

    /// The real variable `v` itself.
    pub fn var(v: usize) -> Self {
        Self {
            constant: C64::from(0.0),
            terms: vec![(v, C64::from(1.0))],
        }
    }

    pub fn complex(z: ComplexVar) -> Self {
        Self {
            constant: C64::from(0.0),
            terms: vec![(z.re, C64::from(1.0)), (z.im, C64::i())],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &CAff) -> CAff {
        let mut out = self.clone();
        out.constant += other.constant;
        out.terms.extend_from_slice(&other.terms);
        out
    }

    pub fn sub(&self, other: &CAff) -> CAff {
        self.add(&other.scale(C64::from(-1.0)))
    }

    pub fn scale(&self, c: C64) -> CAff {
        CAff {
            constant: self.constant * c,
            terms: self.terms.iter().map(|&(v, a)| (v, a * c)).collect(),
        }
    }

    pub fn conj(&self) -> CAff {
        CAff {
            constant: self.constant.conj(),
            terms: self.terms.iter().map(|&(v, a)| (v, a.conj())).collect(),
        }
    }

    /// Product of two expressions, at most one of which may be nonconstant.
    pub fn mul(&self, other: &CAff) -> Result<CAff> {
        match (self.is_constant(), other.is_constant()) {
            (true, _) => Ok(other.scale(self.constant)),
            (_, true) => Ok(self.scale(other.constant)),
            _ => Err(Error::Bilinear),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<C64> {
        let mut acc = self.constant;
        for &(v, a) in &self.terms {
            let xv = x.get(v).ok_or(Error::MissingVariable { var: v, len: x.len() })?;
            acc += a * *xv;
        }
        Ok(acc)
    }
}

/// A complex scalar decision variable `re + i·im`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexVar {
    pub re: usize,
    pub im: usize,
}

/// Complex matrix of decision variables, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixVar {
    pub rows: usize,
    pub cols: usize,
    pub vars: Vec<ComplexVar>,
}

impl MatrixVar {
    /// Allocates `rows × cols` fresh variables through `alloc`.
    pub fn new(rows: usize, cols: usize, mut alloc: impl FnMut(String) -> usize) -> Self {
        let mut vars = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                let re = alloc(format!("re_p[{i},{j}]"));
                let im = alloc(format!("im_p[{i},{j}]"));
                vars.push(ComplexVar { re, im });
            }
        }
        Self { rows, cols, vars }
    }

    pub fn get(&self, i: usize, j: usize) -> ComplexVar {
        self.vars[j * self.rows + i]
    }

    pub fn columns(&self, start: usize, n: usize) -> MatrixVar {
        MatrixVar {
            rows: self.rows,
            cols: n,
            vars: self.vars[start * self.rows..(start + n) * self.rows].to_vec(),
        }
    }

    /// Reads the matrix value out of a solution vector.
    pub fn value(&self, x: &[f64]) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| {
            let v = self.get(i, j);
            C64::new(x[v.re], x[v.im])
        })
    }
}

/// Scalar argument of a builder: held fixed or optimized.
#[derive(Clone, Copy, Debug)]
pub enum Scalar {
    Fixed(C64),
    Variable(ComplexVar),
}

impl Scalar {
    fn expr(&self) -> CAff {
        match *self {
            Scalar::Fixed(c) => CAff::constant(c),
            Scalar::Variable(z) => CAff::complex(z),
        }
    }
}

/// Matrix argument of a builder: held fixed or optimized.
#[derive(Clone, Copy, Debug)]
pub enum MatArg<'a> {
    Fixed(&'a CMat),
    Variable(&'a MatrixVar),
}

impl MatArg<'_> {
    fn shape(&self) -> (usize, usize) {
        match self {
            MatArg::Fixed(m) => m.shape(),
            MatArg::Variable(m) => (m.rows, m.cols),
        }
    }

    fn entry(&self, i: usize, j: usize) -> CAff {
        match self {
            MatArg::Fixed(m) => CAff::constant(m[(i, j)]),
            MatArg::Variable(m) => CAff::complex(m.get(i, j)),
        }
    }
}

/// Hermitian-affine matrix inequality `F₀ + Σ xⱼ Fⱼ ⪰ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LmiConstraint {
    pub label: String,
    pub constant: CMat,
    /// One coefficient matrix per real variable, variables sorted ascending.
    pub terms: Vec<(usize, CMat)>,
}

impl LmiConstraint {
    /// Assembles the LMI from a full `n × n` grid of entries (row-major).
    pub fn from_entries(label: impl Into<String>, n: usize, entries: &[CAff]) -> Result<Self> {
        assert_eq!(entries.len(), n * n);
        let at = |i: usize, j: usize| &entries[i * n + j];
        for i in 0..n {
            for j in i..n {
                let a = at(i, j);
                let b = at(j, i).conj();
                if !aff_eq(a, &b) {
                    return Err(Error::NotHermitian(i, j));
                }
            }
        }
        let mut constant = CMat::zeros(n, n);
        let mut terms: std::collections::BTreeMap<usize, CMat> = Default::default();
        for i in 0..n {
            for j in 0..n {
                let e = at(i, j);
                constant[(i, j)] = e.constant;
                for &(v, a) in &e.terms {
                    terms.entry(v).or_insert_with(|| CMat::zeros(n, n))[(i, j)] += a;
                }
            }
        }
        Ok(Self {
            label: label.into(),
            constant,
            terms: terms.into_iter().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn is_real(&self) -> bool {
        self.constant.iter().all(|c| c.im == 0.0)
            && self.terms.iter().all(|(_, m)| m.iter().all(|c| c.im == 0.0))
    }

    /// Real semidefinite block for the conic solver; Hermitian input is
    /// embedded through [`realify`] first.
    pub fn to_cone_block(&self) -> ConeBlock {
        let lmi = if self.is_real() { self.clone() } else { realify(self) };
        let re = |m: &CMat| m.map(|c| c.re);
        let terms: Vec<(usize, DMatrix<f64>)> = lmi.terms.iter().map(|(v, m)| (*v, re(m))).collect();
        ConeBlock::lmi(lmi.label.clone(), &re(&lmi.constant), &terms)
    }
}

fn aff_eq(a: &CAff, b: &CAff) -> bool {
    let close = |x: C64, y: C64| (x - y).norm() <= 1e-12 * (1.0 + x.norm().max(y.norm()));
    if !close(a.constant, b.constant) {
        return false;
    }
    let collect = |e: &CAff| {
        let mut m: std::collections::BTreeMap<usize, C64> = Default::default();
        for &(v, c) in &e.terms {
            *m.entry(v).or_default() += c;
        }
        m
    };
    let (ma, mb) = (collect(a), collect(b));
    let keys: std::collections::BTreeSet<usize> = ma.keys().chain(mb.keys()).copied().collect();
    let zero = C64::from(0.0);
    keys.into_iter()
        .all(|k| close(*ma.get(&k).unwrap_or(&zero), *mb.get(&k).unwrap_or(&zero)))
}

/// `H = A + iB  ↦  [[A, −B], [B, A]]`. The embedding has the spectrum of
/// `H` with every eigenvalue doubled.
pub fn realify(lmi: &LmiConstraint) -> LmiConstraint {
    let emb = |h: &CMat| {
        let n = h.nrows();
        CMat::from_fn(2 * n, 2 * n, |i, j| {
            let c = h[(i % n, j % n)];
            let v = match (i < n, j < n) {
                (true, true) | (false, false) => c.re,
                (true, false) => -c.im,
                (false, true) => c.im,
            };
            C64::from(v)
        })
    };
    LmiConstraint {
        label: lmi.label.clone(),
        constant: emb(&lmi.constant),
        terms: lmi.terms.iter().map(|(v, m)| (*v, emb(m))).collect(),
    }
}

/// Decision variables `τ` and `λ` of one residual LMI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LmiVars {
    pub tau: usize,
    pub lambda: usize,
}

/// Robust residual LMI for column `target` of `m` (see module docs).
pub fn build_residual_lmi(
    label: impl Into<String>,
    h_hat: &CVec,
    delta: f64,
    m: MatArg<'_>,
    g: Scalar,
    target: usize,
    vars: LmiVars,
) -> Result<LmiConstraint> {
    let (nt, cols) = m.shape();
    if h_hat.len() != nt {
        return Err(Error::Dimension(format!(
            "estimate has {} entries, precoding block has {nt} rows",
            h_hat.len()
        )));
    }
    if target >= cols {
        return Err(Error::Dimension(format!("target column {target} out of {cols}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("radius must be nonnegative, got {delta}")));
    }
    let n = 1 + cols + nt;
    let mut e = vec![CAff::default(); n * n];
    let ge = g.expr();
    let one = C64::from(1.0);
    e[0] = CAff::var(vars.tau).sub(&CAff::var(vars.lambda));
    for j in 0..cols {
        // ψᴴ_j = g Σᵢ conj(ĥᵢ) M_ij − [j = target]
        let mut hm = CAff::default();
        for i in 0..nt {
            hm = hm.add(&m.entry(i, j).scale(h_hat[i].conj()));
        }
        let mut psi_h = ge.mul(&hm)?;
        if j == target {
            psi_h.constant -= one;
        }
        e[1 + j] = psi_h.clone();
        e[(1 + j) * n] = psi_h.conj();
        e[(1 + j) * n + 1 + j] = CAff::real(1.0);
        for i in 0..nt {
            let gm = ge.mul(&m.entry(i, j))?.scale(C64::from(-delta));
            e[(1 + cols + i) * n + 1 + j] = gm.clone();
            e[(1 + j) * n + 1 + cols + i] = gm.conj();
        }
    }
    for i in 0..nt {
        e[(1 + cols + i) * n + 1 + cols + i] = CAff::var(vars.lambda);
    }
    LmiConstraint::from_entries(label, n, &e)
}

/// Private-stream LMI of user `k`; `pp` holds the K private precoders.
pub fn build_private_lmi(
    h_hat: &CVec,
    delta: f64,
    pp: MatArg<'_>,
    g: Scalar,
    k: usize,
    vars: LmiVars,
) -> Result<LmiConstraint> {
    build_residual_lmi(format!("private[{k}]"), h_hat, delta, pp, g, k, vars)
}

/// Common-stream LMI; `p` is `[p_c, p_1, …, p_K]` with the common column first.
pub fn build_common_lmi(
    h_hat: &CVec,
    delta: f64,
    p: MatArg<'_>,
    g_c: Scalar,
    vars: LmiVars,
) -> Result<LmiConstraint> {
    build_residual_lmi("common", h_hat, delta, p, g_c, 0, vars)
}

/// `[[s, ḡ], [g, 1]] ⪰ 0`, i.e. `s ≥ |g|²`.
pub fn build_scalar_square_epigraph(g: Scalar, s: usize) -> Result<LmiConstraint> {
    let ge = g.expr();
    let e = [CAff::var(s), ge.conj(), ge, CAff::real(1.0)];
    LmiConstraint::from_entries("square", 2, &e)
}

/// Right-hand side of `‖vec(P)‖ ≤ ·`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PowerBound {
    /// Fixed budget `P_t`; the cone bound is `√P_t`.
    Budget(f64),
    /// Epigraph variable `t` with `‖vec(P)‖ ≤ t`.
    Epigraph(usize),
}

pub fn build_power_constraint(p: &MatrixVar, bound: PowerBound) -> Result<ConeBlock> {
    let mut block = ConeBlock::new(Cone::SecondOrder(1 + 2 * p.vars.len()), "power");
    match bound {
        PowerBound::Budget(b) => {
            if !(b >= 0.0) {
                return Err(Error::Domain(format!("power budget must be nonnegative, got {b}")));
            }
            block.offset[0] = b.sqrt();
        }
        PowerBound::Epigraph(t) => block.push(0, t, 1.0),
    }
    for (i, z) in p.vars.iter().enumerate() {
        block.push(1 + 2 * i, z.re, 1.0);
        block.push(2 + 2 * i, z.im, 1.0);
    }
    Ok(block)
}

/// Concrete matrix at `x` and its smallest eigenvalue.
pub fn evaluate_lmi(lmi: &LmiConstraint, x: &[f64]) -> Result<(CMat, f64)> {
    let mut m = lmi.constant.clone();
    for (v, f) in &lmi.terms {
        let xv = x.get(*v).ok_or(Error::MissingVariable { var: *v, len: x.len() })?;
        m += f * C64::from(*xv);
    }
    let min = hermitian_eigenvalues(&m).min();
    Ok((m, min))
}

pub fn hermitian_eigenvalues(m: &CMat) -> nalgebra::DVector<f64> {
    let sym = (m + m.adjoint()) * C64::from(0.5);
    sym.symmetric_eigenvalues()
}

/// PSD test with tolerance relative to the spectral norm.
pub fn is_psd(m: &CMat, min_eig: f64) -> bool {
    let norm = hermitian_eigenvalues(m).amax();
    min_eig >= -1e-9 * (1.0 + norm)
}

/// Smallest feasible `(τ, λ)` of the residual LMI for fixed `g` and `M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauCertificate {
    pub tau: f64,
    pub lambda: f64,
}

/// Exact worst-case squared residual `max_{‖h̃‖≤δ} ‖g(ĥ+h̃)ᴴM − e_kᵀ‖²`
/// together with the multiplier that certifies it in the LMI.
///
/// With `a = ψ`, `B = ḡMᴴ`, `Q = δ²BᴴB = Σ qᵢvᵢvᵢᴴ` and `c = δBᴴa`, the
/// smallest `τ` for a given `λ > q_max` is
/// `f(λ) = λ + ‖a‖² + Σ |vᵢᴴc|² / (λ − qᵢ)`, which is convex; its minimizer
/// lies in `[q_max, q_max + ‖c‖]`.
pub fn certify_tau(h_hat: &CVec, delta: f64, m: &CMat, g: C64, target: usize) -> TauCertificate {
    let (nt, cols) = m.shape();
    let mut a = CVec::zeros(cols);
    for j in 0..cols {
        let hm: C64 = (0..nt).map(|i| h_hat[i].conj() * m[(i, j)]).sum();
        let psi_h = g * hm - if j == target { C64::from(1.0) } else { C64::from(0.0) };
        a[j] = psi_h.conj();
    }
    let a2 = a.norm_squared();
    let b = m.adjoint() * g.conj();
    let q = b.adjoint() * &b * C64::from(delta * delta);
    let c = b.adjoint() * &a * C64::from(delta);
    if q.iter().all(|z| *z == C64::from(0.0)) {
        return TauCertificate { tau: a2, lambda: 0.0 };
    }
    let eig = ((&q + q.adjoint()) * C64::from(0.5)).symmetric_eigen();
    let qs: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let w: Vec<f64> = (0..nt)
        .map(|i| eig.eigenvectors.column(i).dotc(&c).norm_sqr())
        .collect();
    let qmax = qs.iter().cloned().fold(0.0, f64::max);
    let f = |l: f64| {
        let mut s = l + a2;
        for i in 0..nt {
            if w[i] > 0.0 {
                s += w[i] / (l - qs[i]);
            }
        }
        s
    };
    let df = |l: f64| {
        let mut s = 1.0;
        for i in 0..nt {
            if w[i] > 0.0 {
                s -= w[i] / ((l - qs[i]) * (l - qs[i]));
            }
        }
        s
    };
    let wsum: f64 = w.iter().sum();
    let mut lo = qmax;
    let mut hi = qmax + wsum.sqrt();
    let lambda = if df(hi) <= 0.0 {
        hi
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if df(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let mut tau = f(lambda);
    if !tau.is_finite() {
        // Hard case at λ = q_max with no weight on the top eigenspace.
        tau = lambda + a2;
        for i in 0..nt {
            if qs[i] < qmax && w[i] > 0.0 {
                tau += w[i] / (qmax - qs[i]);
            }
        }
    }
    TauCertificate { tau, lambda }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_products_are_rejected() {
        let z = ComplexVar { re: 0, im: 1 };
        let a = CAff::complex(z);
        assert_eq!(a.mul(&CAff::var(2)), Err(Error::Bilinear));
        assert!(a.mul(&CAff::real(2.0)).is_ok());
        let pv = MatrixVar::new(2, 2, {
            let mut n = 0;
            move |_| {
                n += 1;
                n - 1
            }
        });
        let h = CVec::from_element(2, C64::from(1.0));
        let r = build_private_lmi(
            &h,
            0.1,
            MatArg::Variable(&pv),
            Scalar::Variable(ComplexVar { re: 8, im: 9 }),
            0,
            LmiVars { tau: 10, lambda: 11 },
        );
        assert_eq!(r, Err(Error::Bilinear));
    }

    #[test]
    fn non_hermitian_grid_is_rejected() {
        let e = [CAff::real(1.0), CAff::real(2.0), CAff::real(3.0), CAff::real(1.0)];
        assert_eq!(LmiConstraint::from_entries("x", 2, &e), Err(Error::NotHermitian(0, 1)));
    }

    #[test]
    fn epigraph_fixed_point() {
        let lmi = build_scalar_square_epigraph(Scalar::Fixed(C64::new(1.0, 1.0)), 0).unwrap();
        let (_, at2) = evaluate_lmi(&lmi, &[2.0]).unwrap();
        let (_, below) = evaluate_lmi(&lmi, &[1.99]).unwrap();
        assert!(at2.abs() < 1e-12);
        assert!(below < 0.0);
        assert!(matches!(evaluate_lmi(&lmi, &[]), Err(Error::MissingVariable { .. })));
    }

    #[test]
    fn realify_known_spectrum() {
        let h = CMat::from_row_slice(
            2,
            2,
            &[C64::from(1.0), C64::i(), -C64::i(), C64::from(1.0)],
        );
        let lmi = LmiConstraint {
            label: "h".into(),
            constant: h,
            terms: vec![],
        };
        let r = realify(&lmi);
        assert_eq!(r.dim(), 4);
        let (_, min) = evaluate_lmi(&r, &[]).unwrap();
        assert!(min.abs() < 1e-12);
    }

    #[test]
    fn power_constraint_rejects_negative_budget() {
        let pv = MatrixVar {
            rows: 1,
            cols: 1,
            vars: vec![ComplexVar { re: 0, im: 1 }],
        };
        assert!(build_power_constraint(&pv, PowerBound::Budget(-1.0)).is_err());
        let b = build_power_constraint(&pv, PowerBound::Budget(4.0)).unwrap();
        assert_eq!(b.slack(&[0.0, 0.0]), vec![2.0, 0.0, 0.0]);
    }
}
