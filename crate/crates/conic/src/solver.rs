//! Homogeneous self-dual interior-point iteration.
//!
//! Standard form used internally:
//!
//! ```text
//!     minimize cᵀx   s.t.  A x + s = b,  s ∈ K
//! ```
//!
//! with `A = -coef` and `b = offset` for every block. The embedding adds
//! `τ, κ ≥ 0` and drives the residuals
//!
//! ```text
//!     r_x = Aᵀz + cτ,   r_z = Ax + s − bτ,   r_τ = cᵀx + bᵀz + κ
//! ```
//!
//! to zero. At the limit either `τ > 0` (optimal pair `x/τ`, `z/τ`) or
//! `κ > 0` (a ray certifying primal or dual infeasibility).

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::cones::{Kind, Scaling};
use crate::error::ProblemError;
use crate::problem::{Cone, ConicProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    /// Stopped early, but the best iterate meets every tolerance relaxed by
    /// [`INACCURATE_FACTOR`].
    OptimalInaccurate,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalTrouble,
}

pub const INACCURATE_FACTOR: f64 = 100.0;

impl Status {
    /// `Optimal` or `OptimalInaccurate`.
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::OptimalInaccurate)
    }
}

#[derive(Clone, Debug)]
pub struct Settings {
    /// Duality gap tolerance (absolute or relative, whichever is met first).
    pub tol_gap: f64,
    /// Primal and dual residual tolerance, relative to `1 + ‖b‖∞` / `1 + ‖c‖∞`.
    pub tol_feas: f64,
    /// Tolerance on normalized infeasibility certificates.
    pub tol_infeas: f64,
    pub max_iter: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol_gap: 1e-7,
            tol_feas: 1e-9,
            tol_infeas: 1e-8,
            max_iter: 100,
        }
    }
}

impl Settings {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol_gap: tol,
            max_iter,
            ..Self::default()
        }
    }
}

/// Infeasibility certificate, in the block order of the input problem.
#[derive(Clone, Debug)]
pub enum Certificate {
    /// `z ∈ K*` with `Aᵀz = 0` and `bᵀz = -1`: no `x` satisfies the constraints.
    PrimalInfeasible { z: Vec<f64> },
    /// `x` with `cᵀx = -1` and `-A x ∈ K`: an improving ray.
    DualInfeasible { x: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct IterationLog {
    pub iter: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    /// Primal point (last iterate, normalized by `τ`).
    pub x: Vec<f64>,
    /// Dual multipliers per input row.
    pub z: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// Final duality gap `|cᵀx + bᵀz|`.
    pub gap: f64,
    pub iterations: usize,
    pub certificate: Option<Certificate>,
    pub history: Vec<IterationLog>,
}

/// Where an input block landed in the internal row order.
enum Placement {
    Zero(Range<usize>),
    Cone(Range<usize>),
}

struct Layout {
    n: usize,
    c: DVector<f64>,
    a0: DMatrix<f64>,
    b0: DVector<f64>,
    ac: DMatrix<f64>,
    bc: DVector<f64>,
    /// Cone blocks over the `ac` rows, with their nonzero column support.
    cones: Vec<(Range<usize>, Kind, Vec<usize>)>,
    placement: Vec<Placement>,
    degree: usize,
}

impl Layout {
    fn new(p: &ConicProblem) -> Self {
        let n = p.n_vars();
        let m0: usize = p
            .blocks
            .iter()
            .filter(|b| matches!(b.cone, Cone::Zero(_)))
            .map(|b| b.dim())
            .sum();
        let mc = p.n_rows() - m0;
        let mut a0 = DMatrix::zeros(m0, n);
        let mut b0 = DVector::zeros(m0);
        let mut ac = DMatrix::zeros(mc, n);
        let mut bc = DVector::zeros(mc);
        let (mut r0, mut rc) = (0, 0);
        let mut cones = Vec::new();
        let mut placement = Vec::new();
        let mut degree = 0;
        for block in &p.blocks {
            let dim = block.dim();
            let (a, b, start) = match block.cone {
                Cone::Zero(_) => {
                    placement.push(Placement::Zero(r0..r0 + dim));
                    r0 += dim;
                    (&mut a0, &mut b0, r0 - dim)
                }
                cone => {
                    let kind = match cone {
                        Cone::NonNeg(k) => Kind::NonNeg(k),
                        Cone::SecondOrder(k) => Kind::Soc(k),
                        Cone::Psd(k) => Kind::Psd(k),
                        Cone::Zero(_) => unreachable!(),
                    };
                    degree += kind.degree();
                    let mut support: Vec<usize> = block.coeffs.iter().map(|t| t.1).collect();
                    support.sort_unstable();
                    support.dedup();
                    cones.push((rc..rc + dim, kind, support));
                    placement.push(Placement::Cone(rc..rc + dim));
                    rc += dim;
                    (&mut ac, &mut bc, rc - dim)
                }
            };
            for (i, v) in block.offset.iter().enumerate() {
                b[start + i] = *v;
            }
            for &(row, var, v) in &block.coeffs {
                a[(start + row, var)] -= v;
            }
        }
        Self {
            n,
            c: DVector::from_column_slice(&p.objective),
            a0,
            b0,
            ac,
            bc,
            cones,
            placement,
            degree,
        }
    }

    fn m0(&self) -> usize {
        self.a0.nrows()
    }

    fn mc(&self) -> usize {
        self.ac.nrows()
    }

    /// Maps internal (zero, cone) vectors back to input block order.
    fn scatter(&self, v0: &DVector<f64>, vc: &DVector<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.m0() + self.mc());
        for p in &self.placement {
            match p {
                Placement::Zero(r) => out.extend_from_slice(&v0.as_slice()[r.clone()]),
                Placement::Cone(r) => out.extend_from_slice(&vc.as_slice()[r.clone()]),
            }
        }
        out
    }
}

/// Reduced KKT system `[[0, Aᵀ], [A, -WᵀW]]` with the cone rows eliminated.
struct Kkt {
    /// `G = W⁻ᵀ A_c`.
    g: DMatrix<f64>,
    method: KktMethod,
}

enum KktMethod {
    /// Thin QR of `G`, with `V = R⁻ᵀ A₀ᵀ` and `LU(VᵀV)` for the equality rows.
    /// Avoids squaring the condition number of `G`.
    Qr {
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        v: DMatrix<f64>,
        schur: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    },
    /// Regularized normal equations `[[GᵀG, A₀ᵀ], [A₀, 0]]`, used when `G`
    /// has deficient column rank.
    Normal {
        full: DMatrix<f64>,
        lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    },
}

impl Kkt {
    /// `(x, z₀)` with `GᵀG x + A₀ᵀ z₀ = r1 + Gᵀ w` and `A₀ x = r2`.
    fn solve_reduced(&self, r1: &DVector<f64>, r2: &DVector<f64>, w: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        match &self.method {
            KktMethod::Qr { q, r, v, schur } => {
                // R x = R⁻ᵀ (r1 − A₀ᵀ z₀) + Qᵀ w
                let base = r.tr_solve_upper_triangular(r1)? + q.transpose() * w;
                let z0 = match schur {
                    Some(lu) => lu.solve(&(v.transpose() * &base - r2))?,
                    None => DVector::zeros(0),
                };
                let y = base - v * &z0;
                Some((r.solve_upper_triangular(&y)?, z0))
            }
            KktMethod::Normal { full, lu } => {
                let n = r1.len();
                let m0 = r2.len();
                let mut rhs = DVector::zeros(n + m0);
                rhs.rows_mut(0, n).copy_from(&(r1 + self.g.transpose() * w));
                rhs.rows_mut(n, m0).copy_from(r2);
                let mut sol = lu.solve(&rhs)?;
                for _ in 0..3 {
                    let res = &rhs - full * &sol;
                    if res.amax() <= 1e-15 * (1.0 + rhs.amax()) {
                        break;
                    }
                    sol += lu.solve(&res)?;
                }
                Some((sol.rows(0, n).into_owned(), sol.rows(n, m0).into_owned()))
            }
        }
    }
}

struct Solver<'a> {
    lay: &'a Layout,
    scalings: Vec<Scaling>,
    settings: &'a Settings,
}

/// Newton direction. `zt` is `W Δz_c`, `st` is `W⁻ᵀ Δs_c`.
struct Direction {
    x: DVector<f64>,
    z0: DVector<f64>,
    zc: DVector<f64>,
    zt: DVector<f64>,
    sc: DVector<f64>,
    st: DVector<f64>,
    tau: f64,
    kappa: f64,
}

impl<'a> Solver<'a> {
    fn factor(&mut self) -> Option<Kkt> {
        let lay = self.lay;
        let (n, m0, mc) = (lay.n, lay.m0(), lay.mc());
        let mut g = DMatrix::zeros(mc, n);
        let mut col = Vec::new();
        let mut out = Vec::new();
        for (ci, (rows, _, support)) in lay.cones.iter().enumerate() {
            col.resize(rows.len(), 0.0);
            out.resize(rows.len(), 0.0);
            for &j in support {
                for (k, r) in rows.clone().enumerate() {
                    col[k] = lay.ac[(r, j)];
                }
                self.scalings[ci].w_inv_t(&col, &mut out);
                for (k, r) in rows.clone().enumerate() {
                    g[(r, j)] = out[k];
                }
            }
        }
        if n <= mc {
            let qr = g.clone().qr();
            let r = qr.r();
            let diag = r.diagonal().abs();
            if diag.min() > 1e-13 * diag.max() {
                let q = qr.q();
                let v = r.tr_solve_upper_triangular(&lay.a0.transpose())?;
                let schur = if m0 > 0 {
                    let lu = (v.transpose() * &v).lu();
                    if !lu.is_invertible() {
                        return None;
                    }
                    Some(lu)
                } else {
                    None
                };
                return Some(Kkt {
                    g,
                    method: KktMethod::Qr { q, r, v, schur },
                });
            }
        }
        let m = g.transpose() * &g;
        let dim = n + m0;
        let mut full = DMatrix::zeros(dim, dim);
        full.view_mut((0, 0), (n, n)).copy_from(&m);
        full.view_mut((n, 0), (m0, n)).copy_from(&lay.a0);
        full.view_mut((0, n), (n, m0)).copy_from(&lay.a0.transpose());
        let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1.0, f64::max);
        let reg = 1e-13 * scale;
        let mut regd = full.clone();
        for i in 0..n {
            regd[(i, i)] += reg;
        }
        for i in n..dim {
            regd[(i, i)] -= reg;
        }
        let lu = regd.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Kkt {
            g,
            method: KktMethod::Normal { full, lu },
        })
    }

    /// Solves `A_cᵀ z_c + A₀ᵀ z₀ = r1`, `A₀ x = r2_0`, `A_c x − WᵀW z_c = r2_c`
    /// given `wr2c = W⁻ᵀ r2_c`. Returns `(x, z₀, W z_c)`.
    fn solve_kkt(
        &self,
        kkt: &Kkt,
        r1: &DVector<f64>,
        r2_0: &DVector<f64>,
        wr2c: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let n = self.lay.n;
        let a0 = &self.lay.a0;
        let Some((mut x, mut z0)) = kkt.solve_reduced(r1, r2_0, wr2c) else {
            return (DVector::zeros(n), DVector::zeros(self.lay.m0()), -wr2c);
        };
        // One refinement step against the unsquared residual.
        let res1 = r1 - a0.transpose() * &z0 - kkt.g.transpose() * (&kkt.g * &x - wr2c);
        let res2 = r2_0 - a0 * &x;
        if res1.amax().max(res2.amax()) > 1e-15 * (1.0 + r1.amax().max(wr2c.amax())) {
            if let Some((dx, dz0)) = kkt.solve_reduced(&res1, &res2, &DVector::zeros(wr2c.len())) {
                x += dx;
                z0 += dz0;
            }
        }
        let zt = &kkt.g * &x - wr2c;
        (x, z0, zt)
    }

    fn apply_each(
        &mut self,
        v: &DVector<f64>,
        f: impl Fn(&mut Scaling, &[f64], &mut [f64]),
    ) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (ci, (rows, _, _)) in self.lay.cones.iter().enumerate() {
            let r = rows.clone();
            f(&mut self.scalings[ci], &v.as_slice()[r.clone()], &mut out.as_mut_slice()[r]);
        }
        out
    }

    fn w_inv_t(&mut self, v: &DVector<f64>) -> DVector<f64> {
        self.apply_each(v, |s, a, b| s.w_inv_t(a, b))
    }

    fn w_inv(&mut self, v: &DVector<f64>) -> DVector<f64> {
        self.apply_each(v, |s, a, b| s.w_inv(a, b))
    }

    fn w_t(&mut self, v: &DVector<f64>) -> DVector<f64> {
        self.apply_each(v, |s, a, b| s.w_t(a, b))
    }

    fn lambda_div(&mut self, v: &DVector<f64>) -> DVector<f64> {
        self.apply_each(v, |s, a, b| s.lambda_div(a, b))
    }

    fn lambda(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.lay.mc());
        for (ci, (rows, _, _)) in self.lay.cones.iter().enumerate() {
            out.as_mut_slice()[rows.clone()].copy_from_slice(&self.scalings[ci].lambda);
        }
        out
    }

    fn jordan(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(u.len());
        for (rows, kind, _) in &self.lay.cones {
            let r = rows.clone();
            kind.jordan(
                &u.as_slice()[r.clone()],
                &v.as_slice()[r.clone()],
                &mut out.as_mut_slice()[r],
            );
        }
        out
    }

    fn unit(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.lay.mc());
        for (rows, kind, _) in &self.lay.cones {
            kind.unit(&mut out.as_mut_slice()[rows.clone()]);
        }
        out
    }

    /// Largest step keeping `λ + a·st` and `λ + a·zt` in the cone, capped by τ, κ.
    fn max_step(&self, d: &Direction, tau: f64, kappa: f64) -> f64 {
        let mut a = f64::INFINITY;
        for (ci, (rows, _, _)) in self.lay.cones.iter().enumerate() {
            let r = rows.clone();
            a = a.min(self.scalings[ci].max_step(&d.st.as_slice()[r.clone()]));
            a = a.min(self.scalings[ci].max_step(&d.zt.as_slice()[r]));
        }
        if d.tau < 0.0 {
            a = a.min(-tau / d.tau);
        }
        if d.kappa < 0.0 {
            a = a.min(-kappa / d.kappa);
        }
        a
    }
}

fn shift_into_cone(lay: &Layout, v: &mut DVector<f64>) {
    let mut margin = f64::NEG_INFINITY;
    for (rows, kind, _) in &lay.cones {
        margin = margin.max(kind.margin(&v.as_slice()[rows.clone()]));
    }
    if margin >= -1e-8 {
        let mut e = vec![0.0; lay.mc()];
        for (rows, kind, _) in &lay.cones {
            kind.unit(&mut e[rows.clone()]);
        }
        for (vi, ei) in v.iter_mut().zip(e) {
            *vi += (1.0 + margin) * ei;
        }
    }
}

/// Solves `problem` with the given settings.
pub fn solve(problem: &ConicProblem, settings: &Settings) -> Result<Solution, ProblemError> {
    problem.validate()?;
    let lay = Layout::new(problem);
    let n = lay.n;
    let mut solver = Solver {
        lay: &lay,
        scalings: lay
            .cones
            .iter()
            .map(|(_, kind, _)| Scaling::identity(*kind))
            .collect(),
        settings,
    };
    let settings = solver.settings;

    let fail = |status, iterations, history| Solution {
        status,
        x: vec![0.0; n],
        z: vec![0.0; problem.n_rows()],
        objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        iterations,
        certificate: None,
        history,
    };

    // Initial point: least-squares primal and minimum-norm dual, shifted
    // into the cone interior.
    let kkt = match solver.factor() {
        Some(k) => k,
        None => return Ok(fail(Status::NumericalTrouble, 0, Vec::new())),
    };
    let (mut x, _, zt) = solver.solve_kkt(&kkt, &DVector::zeros(n), &lay.b0, &lay.bc);
    let mut sc = -zt;
    let (_, mut z0, mut zc) = solver.solve_kkt(
        &kkt,
        &(-&lay.c),
        &DVector::zeros(lay.m0()),
        &DVector::zeros(lay.mc()),
    );
    shift_into_cone(&lay, &mut sc);
    shift_into_cone(&lay, &mut zc);
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let bnorm = 1.0 + lay.b0.amax().max(lay.bc.amax());
    let cnorm = 1.0 + lay.c.amax();
    let mut history = Vec::new();
    let mut last_step = 0.0;
    // (score, x, z, pobj, dobj, gap) of the iterate closest to convergence
    let mut best: Option<(f64, DVector<f64>, Vec<f64>, f64, f64, f64)> = None;
    let fallback = |status: Status, best: Option<(f64, DVector<f64>, Vec<f64>, f64, f64, f64)>, iter: usize, history: Vec<IterationLog>, x_last: DVector<f64>| {
        match best {
            Some((score, bx, bz, pobj, dobj, gap)) if score <= INACCURATE_FACTOR => Solution {
                status: Status::OptimalInaccurate,
                x: bx.as_slice().to_vec(),
                z: bz,
                objective: pobj,
                dual_objective: dobj,
                gap,
                iterations: iter,
                certificate: None,
                history,
            },
            _ => {
                let mut sol = fail(status, iter, history);
                sol.x = x_last.as_slice().to_vec();
                sol
            }
        }
    };

    for iter in 0..=settings.max_iter {
        for (ci, (rows, _, _)) in lay.cones.iter().enumerate() {
            let r = rows.clone();
            if !solver.scalings[ci].update(&sc.as_slice()[r.clone()], &zc.as_slice()[r]) {
                return Ok(fallback(Status::NumericalTrouble, best, iter, history, &x / tau));
            }
        }

        let rx = lay.a0.transpose() * &z0 + lay.ac.transpose() * &zc + &lay.c * tau;
        let rz0 = &lay.a0 * &x - &lay.b0 * tau;
        let rzc = &lay.ac * &x + &sc - &lay.bc * tau;
        let ctx = lay.c.dot(&x);
        let btz = lay.b0.dot(&z0) + lay.bc.dot(&zc);
        let rtau = ctx + btz + kappa;
        let mu = (sc.dot(&zc) + tau * kappa) / (lay.degree as f64 + 1.0);

        let pobj = ctx / tau;
        let dobj = -btz / tau;
        let pres = rz0.amax().max(rzc.amax()) / tau;
        let dres = rx.amax() / tau;
        let gap = (pobj - dobj).abs();
        history.push(IterationLog {
            iter,
            primal_objective: pobj,
            dual_objective: dobj,
            primal_residual: pres,
            dual_residual: dres,
            mu,
            tau,
            kappa,
            step: last_step,
        });

        let converged = pres <= settings.tol_feas * bnorm
            && dres <= settings.tol_feas * cnorm
            && (gap <= settings.tol_gap || gap <= settings.tol_gap * pobj.abs().min(dobj.abs()));
        let score = (pres / (settings.tol_feas * bnorm))
            .max(dres / (settings.tol_feas * cnorm))
            .max((gap / settings.tol_gap).min(gap / (settings.tol_gap * pobj.abs().min(dobj.abs()))));
        if score.is_finite() && best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((
                score,
                &x / tau,
                lay.scatter(&(&z0 / tau), &(&zc / tau)),
                pobj,
                dobj,
                gap,
            ));
        }
        if converged {
            return Ok(Solution {
                status: Status::Optimal,
                x: (&x / tau).as_slice().to_vec(),
                z: lay.scatter(&(&z0 / tau), &(&zc / tau)),
                objective: pobj,
                dual_objective: dobj,
                gap,
                iterations: iter,
                certificate: None,
                history,
            });
        }

        // Infeasibility certificates on the unnormalized iterate.
        if btz < 0.0 {
            let aty = lay.a0.transpose() * &z0 + lay.ac.transpose() * &zc;
            if aty.amax() / -btz <= settings.tol_infeas * cnorm.max(1.0) {
                let scale = -1.0 / btz;
                return Ok(Solution {
                    status: Status::Infeasible,
                    x: vec![f64::NAN; n],
                    z: lay.scatter(&(&z0 * scale), &(&zc * scale)),
                    objective: f64::INFINITY,
                    dual_objective: f64::INFINITY,
                    gap: f64::NAN,
                    iterations: iter,
                    certificate: Some(Certificate::PrimalInfeasible {
                        z: lay.scatter(&(&z0 * scale), &(&zc * scale)),
                    }),
                    history,
                });
            }
        }
        if ctx < 0.0 {
            let ax = (&lay.a0 * &x).amax().max((&lay.ac * &x + &sc).amax());
            if ax / -ctx <= settings.tol_infeas * bnorm {
                let ray = (&x * (-1.0 / ctx)).as_slice().to_vec();
                return Ok(Solution {
                    status: Status::Unbounded,
                    x: ray.clone(),
                    z: vec![f64::NAN; problem.n_rows()],
                    objective: f64::NEG_INFINITY,
                    dual_objective: f64::NEG_INFINITY,
                    gap: f64::NAN,
                    iterations: iter,
                    certificate: Some(Certificate::DualInfeasible { x: ray }),
                    history,
                });
            }
        }
        if iter == settings.max_iter {
            break;
        }

        let kkt = match solver.factor() {
            Some(k) => k,
            None => return Ok(fallback(Status::NumericalTrouble, best, iter, history, &x / tau)),
        };
        let wbc = solver.w_inv_t(&lay.bc);
        let (x1, z1_0, zt1) = solver.solve_kkt(&kkt, &(-&lay.c), &lay.b0, &wbc);
        let z1_c = solver.w_inv(&zt1);
        let denom1 = lay.c.dot(&x1) + lay.b0.dot(&z1_0) + lay.bc.dot(&z1_c) - kappa / tau;

        let lambda = solver.lambda();
        let wrzc = solver.w_inv_t(&rzc);

        let direction = |solver: &mut Solver, sigma: f64, rc: &DVector<f64>, rk: f64| {
            let f = -(1.0 - sigma);
            let dx = &rx * f;
            let dz0 = &rz0 * f;
            let ldiv = solver.lambda_div(rc);
            let wr2c = &wrzc * f - &ldiv;
            let (x2, z2_0, zt2) = solver.solve_kkt(&kkt, &dx, &dz0, &wr2c);
            let z2_c = solver.w_inv(&zt2);
            let dtau_num = rtau * f - lay.c.dot(&x2) - lay.b0.dot(&z2_0) - lay.bc.dot(&z2_c) - rk / tau;
            let dtau = dtau_num / denom1;
            let zt = &zt2 + &zt1 * dtau;
            let st = &ldiv - &zt;
            let sc_dir = solver.w_t(&st);
            Direction {
                x: &x2 + &x1 * dtau,
                z0: &z2_0 + &z1_0 * dtau,
                zc: &z2_c + &z1_c * dtau,
                zt,
                sc: sc_dir,
                st,
                tau: dtau,
                kappa: (rk - kappa * dtau) / tau,
            }
        };

        // Predictor.
        let lam_sq = solver.jordan(&lambda, &lambda);
        let aff = direction(&mut solver, 0.0, &(-&lam_sq), -tau * kappa);
        let alpha_aff = solver.max_step(&aff, tau, kappa).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let cross = solver.jordan(&aff.st, &aff.zt);
        let e = solver.unit();
        let rc = -&lam_sq - &cross + &e * (sigma * mu);
        let rk = -tau * kappa - aff.tau * aff.kappa + sigma * mu;
        let d = direction(&mut solver, sigma, &rc, rk);
        let alpha = (0.99 * solver.max_step(&d, tau, kappa)).min(1.0);
        if !(alpha > 1e-12) || !alpha.is_finite() {
            return Ok(fallback(Status::NumericalTrouble, best, iter, history, &x / tau));
        }
        last_step = alpha;

        x += &d.x * alpha;
        sc += &d.sc * alpha;
        z0 += &d.z0 * alpha;
        zc += &d.zc * alpha;
        tau += d.tau * alpha;
        kappa += d.kappa * alpha;
    }

    if best.as_ref().is_some_and(|b| b.0 <= INACCURATE_FACTOR) {
        return Ok(fallback(Status::MaxIterations, best, settings.max_iter, history, &x / tau));
    }
    let mut sol = fail(Status::MaxIterations, settings.max_iter, history);
    sol.x = (&x / tau).as_slice().to_vec();
    sol.z = lay.scatter(&(&z0 / tau), &(&zc / tau));
    sol.objective = lay.c.dot(&x) / tau;
    Ok(sol)
}
