//! Nesterov-Todd scalings and Jordan-algebra arithmetic for the symmetric
//! cones handled by the solver.
//!
//! For every cone block the scaling `W` satisfies `W z = W⁻ᵀ s = λ`. All
//! Newton-direction algebra happens in these scaled coordinates, where both
//! iterates coincide with `λ`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::problem::{smat_into, svec_into};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Kind {
    NonNeg(usize),
    Soc(usize),
    Psd(usize),
}

impl Kind {
    pub fn dim(&self) -> usize {
        match *self {
            Kind::NonNeg(n) | Kind::Soc(n) => n,
            Kind::Psd(s) => s * (s + 1) / 2,
        }
    }

    pub fn degree(&self) -> usize {
        match *self {
            Kind::NonNeg(n) => n,
            Kind::Soc(_) => 1,
            Kind::Psd(s) => s,
        }
    }

    /// Identity element `e` of the cone.
    pub fn unit(&self, out: &mut [f64]) {
        out.fill(0.0);
        match *self {
            Kind::NonNeg(_) => out.fill(1.0),
            Kind::Soc(_) => out[0] = 1.0,
            Kind::Psd(side) => {
                for j in 0..side {
                    out[diag_index(side, j)] = 1.0;
                }
            }
        }
    }

    /// `inf { a : v + a·e ∈ K }`; negative when `v` is interior.
    pub fn margin(&self, v: &[f64]) -> f64 {
        match *self {
            Kind::NonNeg(_) => -v.iter().cloned().fold(f64::INFINITY, f64::min),
            Kind::Soc(_) => norm(&v[1..]) - v[0],
            Kind::Psd(side) => {
                let mut m = DMatrix::zeros(side, side);
                smat_into(v, &mut m);
                -SymmetricEigen::new(m).eigenvalues.min()
            }
        }
    }

    /// Jordan product `u ∘ v`.
    pub fn jordan(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        match *self {
            Kind::NonNeg(_) => {
                for i in 0..u.len() {
                    out[i] = u[i] * v[i];
                }
            }
            Kind::Soc(_) => {
                out[0] = dot(u, v);
                for i in 1..u.len() {
                    out[i] = u[0] * v[i] + v[0] * u[i];
                }
            }
            Kind::Psd(side) => {
                let mut a = DMatrix::zeros(side, side);
                let mut b = DMatrix::zeros(side, side);
                smat_into(u, &mut a);
                smat_into(v, &mut b);
                let p = &a * &b;
                let sym = (&p + p.transpose()) * 0.5;
                svec_into(&sym, out);
            }
        }
    }
}

/// Position of diagonal entry `j` in `svec` coordinates.
fn diag_index(side: usize, j: usize) -> usize {
    j * side - j * j.saturating_sub(1) / 2
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scaling state of one cone block.
pub(crate) struct Scaling {
    /// `λ` in svec / vector coordinates.
    pub lambda: Vec<f64>,
    repr: Repr,
}

enum Repr {
    NonNeg {
        w: Vec<f64>,
    },
    Soc {
        w: DMatrix<f64>,
        winv: DMatrix<f64>,
    },
    Psd {
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        lam: Vec<f64>,
        work: DMatrix<f64>,
    },
}

impl Scaling {
    /// Identity scaling (`W = I`, `λ = e`).
    pub fn identity(kind: Kind) -> Self {
        let mut lambda = vec![0.0; kind.dim()];
        kind.unit(&mut lambda);
        let repr = match kind {
            Kind::NonNeg(n) => Repr::NonNeg { w: vec![1.0; n] },
            Kind::Soc(n) => Repr::Soc {
                w: DMatrix::identity(n, n),
                winv: DMatrix::identity(n, n),
            },
            Kind::Psd(side) => Repr::Psd {
                r: DMatrix::identity(side, side),
                rinv: DMatrix::identity(side, side),
                lam: vec![1.0; side],
                work: DMatrix::zeros(side, side),
            },
        };
        Self { lambda, repr }
    }

    /// Recomputes the NT scaling point for interior `s`, `z`. Returns `false`
    /// if either point is not strictly interior to working precision.
    pub fn update(&mut self, s: &[f64], z: &[f64]) -> bool {
        match &mut self.repr {
            Repr::NonNeg { w } => {
                for i in 0..s.len() {
                    if !(s[i] > 0.0 && z[i] > 0.0) {
                        return false;
                    }
                    w[i] = (s[i] / z[i]).sqrt();
                    self.lambda[i] = (s[i] * z[i]).sqrt();
                }
                true
            }
            Repr::Soc { w, winv } => {
                let sn2 = s[0] * s[0] - dot(&s[1..], &s[1..]);
                let zn2 = z[0] * z[0] - dot(&z[1..], &z[1..]);
                if !(s[0] > 0.0 && z[0] > 0.0 && sn2 > 0.0 && zn2 > 0.0) {
                    return false;
                }
                let (sn, zn) = (sn2.sqrt(), zn2.sqrt());
                let n = s.len();
                let sb: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / zn).collect();
                let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
                let mut wb = vec![0.0; n];
                wb[0] = (sb[0] + zb[0]) / (2.0 * gamma);
                for i in 1..n {
                    wb[i] = (sb[i] - zb[i]) / (2.0 * gamma);
                }
                let eta = (sn / zn).sqrt();
                let denom = 1.0 + wb[0];
                for i in 0..n {
                    for j in 0..n {
                        let (fw, fi) = match (i, j) {
                            (0, 0) => (wb[0], wb[0]),
                            (0, _) => (wb[j], -wb[j]),
                            (_, 0) => (wb[i], -wb[i]),
                            _ => {
                                let v = wb[i] * wb[j] / denom + if i == j { 1.0 } else { 0.0 };
                                (v, v)
                            }
                        };
                        w[(i, j)] = eta * fw;
                        winv[(i, j)] = fi / eta;
                    }
                }
                let lz = &*w * nalgebra::DVector::from_column_slice(z);
                self.lambda.copy_from_slice(lz.as_slice());
                true
            }
            Repr::Psd { r, rinv, lam, work } => {
                let side = r.nrows();
                smat_into(s, work);
                let ls = match work.clone().cholesky() {
                    Some(c) => c.unpack(),
                    None => return false,
                };
                smat_into(z, work);
                let lz = match work.clone().cholesky() {
                    Some(c) => c.unpack(),
                    None => return false,
                };
                let svd = (lz.transpose() * &ls).svd(true, true);
                let (u, vt) = match (svd.u, svd.v_t) {
                    (Some(u), Some(vt)) => (u, vt),
                    _ => return false,
                };
                let sv = svd.singular_values;
                if sv.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return false;
                }
                // R = Ls V Σ^{-1/2},  R⁻¹ = Σ^{-1/2} Uᵀ Lzᵀ
                let mut rv = ls * vt.transpose();
                for j in 0..side {
                    let f = 1.0 / sv[j].sqrt();
                    rv.column_mut(j).scale_mut(f);
                }
                let mut ri = u.transpose() * lz.transpose();
                for i in 0..side {
                    let f = 1.0 / sv[i].sqrt();
                    ri.row_mut(i).scale_mut(f);
                }
                *r = rv;
                *rinv = ri;
                self.lambda.fill(0.0);
                for j in 0..side {
                    lam[j] = sv[j];
                    self.lambda[diag_index(side, j)] = sv[j];
                }
                true
            }
        }
    }

    /// `out = W⁻ᵀ v`.
    pub fn w_inv_t(&mut self, v: &[f64], out: &mut [f64]) {
        match &mut self.repr {
            Repr::NonNeg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] / w[i];
                }
            }
            Repr::Soc { winv, .. } => mat_vec(winv, v, out),
            Repr::Psd { rinv, work, .. } => {
                smat_into(v, work);
                let t = &*rinv * &*work * rinv.transpose();
                svec_into(&t, out);
            }
        }
    }

    /// `out = W⁻¹ v`.
    pub fn w_inv(&mut self, v: &[f64], out: &mut [f64]) {
        match &mut self.repr {
            Repr::NonNeg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] / w[i];
                }
            }
            Repr::Soc { winv, .. } => mat_vec(winv, v, out),
            Repr::Psd { rinv, work, .. } => {
                smat_into(v, work);
                let t = rinv.transpose() * &*work * &*rinv;
                svec_into(&t, out);
            }
        }
    }

    /// `out = Wᵀ v`.
    pub fn w_t(&mut self, v: &[f64], out: &mut [f64]) {
        match &mut self.repr {
            Repr::NonNeg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] * w[i];
                }
            }
            Repr::Soc { w, .. } => mat_vec(w, v, out),
            Repr::Psd { r, work, .. } => {
                smat_into(v, work);
                let t = &*r * &*work * r.transpose();
                svec_into(&t, out);
            }
        }
    }

    /// Solves `λ ∘ x = r`.
    pub fn lambda_div(&self, r: &[f64], out: &mut [f64]) {
        let l = &self.lambda;
        match &self.repr {
            Repr::NonNeg { .. } => {
                for i in 0..r.len() {
                    out[i] = r[i] / l[i];
                }
            }
            Repr::Soc { .. } => {
                let det = l[0] * l[0] - dot(&l[1..], &l[1..]);
                let x0 = (l[0] * r[0] - dot(&l[1..], &r[1..])) / det;
                out[0] = x0;
                for i in 1..r.len() {
                    out[i] = (r[i] - x0 * l[i]) / l[0];
                }
            }
            Repr::Psd { lam, .. } => {
                let side = lam.len();
                let mut k = 0;
                for j in 0..side {
                    for i in j..side {
                        out[k] = 2.0 * r[k] / (lam[i] + lam[j]);
                        k += 1;
                    }
                }
            }
        }
    }

    /// Largest `a` with `λ + a·d` in the cone (`∞` if unbounded).
    pub fn max_step(&self, d: &[f64]) -> f64 {
        let l = &self.lambda;
        match &self.repr {
            Repr::NonNeg { .. } => {
                let mut a = f64::INFINITY;
                for i in 0..d.len() {
                    if d[i] < 0.0 {
                        a = a.min(-l[i] / d[i]);
                    }
                }
                a
            }
            Repr::Soc { .. } => soc_step(l, d),
            Repr::Psd { lam, .. } => {
                let side = lam.len();
                let mut m = DMatrix::zeros(side, side);
                smat_into(d, &mut m);
                for j in 0..side {
                    for i in 0..side {
                        m[(i, j)] /= (lam[i] * lam[j]).sqrt();
                    }
                }
                let min = SymmetricEigen::new(m).eigenvalues.min();
                if min < 0.0 {
                    -1.0 / min
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    let n = v.len();
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += m[(i, j)] * v[j];
        }
        out[i] = acc;
    }
}

/// Step to the boundary of the second-order cone from interior `l` along `d`.
fn soc_step(l: &[f64], d: &[f64]) -> f64 {
    let a = d[0] * d[0] - dot(&d[1..], &d[1..]);
    let b = 2.0 * (l[0] * d[0] - dot(&l[1..], &d[1..]));
    let c = l[0] * l[0] - dot(&l[1..], &l[1..]);
    // q(t) = a t² + b t + c, q(0) = c > 0; first positive root is the exit.
    let mut best = f64::INFINITY;
    let disc = b * b - 4.0 * a * c;
    if a.abs() < 1e-300 {
        if b < 0.0 {
            best = -c / b;
        }
    } else if disc >= 0.0 {
        let sq = disc.sqrt();
        let q = -0.5 * (b + b.signum() * sq);
        for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
            if root > 0.0 && root < best {
                best = root;
            }
        }
    }
    // Guard against crossing through the apex into the negative cone.
    if d[0] < 0.0 {
        best = best.min(-l[0] / d[0]);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_soc_point(seed: u64, n: usize) -> Vec<f64> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut v: Vec<f64> = (0..n).map(|_| next()).collect();
        v[0] = norm(&v[1..]) + 0.3 + next().abs();
        v
    }

    #[test]
    fn diag_index_matches_svec_layout() {
        for side in 1..6 {
            let mut m = DMatrix::zeros(side, side);
            for j in 0..side {
                m[(j, j)] = (j + 1) as f64;
            }
            let v = crate::problem::svec(&m);
            for j in 0..side {
                assert_eq!(v[diag_index(side, j)], (j + 1) as f64);
            }
        }
    }

    #[test]
    fn soc_scaling_maps_both_points_to_lambda() {
        let s = random_soc_point(1, 5);
        let z = random_soc_point(2, 5);
        let mut sc = Scaling::identity(Kind::Soc(5));
        assert!(sc.update(&s, &z));
        let mut a = vec![0.0; 5];
        sc.w_inv_t(&s, &mut a);
        for i in 0..5 {
            assert!((a[i] - sc.lambda[i]).abs() < 1e-12, "{a:?} vs {:?}", sc.lambda);
        }
        let mut b = vec![0.0; 5];
        sc.w_inv(&sc.lambda.clone(), &mut b);
        for i in 0..5 {
            assert!((b[i] - z[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn psd_scaling_maps_both_points_to_lambda() {
        let side = 3;
        let s_mat = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let z_mat = DMatrix::from_row_slice(3, 3, &[1.0, -0.3, 0.0, -0.3, 2.0, 0.4, 0.0, 0.4, 1.5]);
        let s = crate::problem::svec(&s_mat);
        let z = crate::problem::svec(&z_mat);
        let mut sc = Scaling::identity(Kind::Psd(side));
        assert!(sc.update(&s, &z));
        let mut a = vec![0.0; 6];
        sc.w_inv_t(&s, &mut a);
        let mut b = vec![0.0; 6];
        sc.w_inv(&sc.lambda.clone(), &mut b);
        for i in 0..6 {
            assert!((a[i] - sc.lambda[i]).abs() < 1e-10);
            assert!((b[i] - z[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn lambda_div_inverts_jordan_product() {
        for kind in [Kind::NonNeg(3), Kind::Soc(4), Kind::Psd(3)] {
            let dim = kind.dim();
            let s: Vec<f64> = match kind {
                Kind::Psd(_) => crate::problem::svec(&DMatrix::from_row_slice(
                    3,
                    3,
                    &[2.0, 0.3, 0.1, 0.3, 1.0, 0.0, 0.1, 0.0, 3.0],
                )),
                Kind::Soc(n) => random_soc_point(7, n),
                Kind::NonNeg(n) => (0..n).map(|i| 1.0 + i as f64).collect(),
            };
            let z = s.iter().map(|v| v * 0.5).collect::<Vec<_>>();
            let mut sc = Scaling::identity(kind);
            assert!(sc.update(&s, &z));
            let r: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.37).sin()).collect();
            let mut x = vec![0.0; dim];
            sc.lambda_div(&r, &mut x);
            let mut back = vec![0.0; dim];
            kind.jordan(&sc.lambda, &x, &mut back);
            for i in 0..dim {
                assert!((back[i] - r[i]).abs() < 1e-10, "{kind:?}");
            }
        }
    }

    #[test]
    fn soc_step_hits_boundary() {
        let l = [2.0, 1.0, 0.0];
        let d = [-1.0, 0.0, 1.0];
        let a = soc_step(&l, &d);
        let p: Vec<f64> = l.iter().zip(&d).map(|(x, y)| x + a * y).collect();
        assert!((p[0] - norm(&p[1..])).abs() < 1e-12);
    }
}
