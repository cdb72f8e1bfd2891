//! Alternating optimization of robust precoders.
//!
//! Each iteration fixes the precoder and solves one small SDP per stream
//! for the receive gain that minimizes the worst-case MSE over the region,
//! sets the weights to the reciprocal MSEs, and then solves one SDP for the
//! precoder with gains and weights fixed.
//!
//! The objective recorded for a precoder `P` is always recomputed from
//! scratch: optimal gains from the equalizer SDPs, the exact worst-case
//! residual for those gains (see [`certify_tau`]), the resulting
//! conservative rates `R̂ = −log₂ ε̂`, and the best split of the common rate.
//! A new precoder is only accepted when this certified objective improves,
//! so traces are monotone by construction.

use rsbeam_conic::{solve, Cone, ConeBlock, ConicProblem, Settings};

use crate::dof::zf_directions;
use crate::error::{Error, Result};
use crate::lmi::{
    build_common_lmi, build_power_constraint, build_private_lmi, build_scalar_square_epigraph,
    certify_tau, ComplexVar, LmiVars, MatArg, MatrixVar, PowerBound, Scalar,
};
use crate::model::{CMat, CVec, Precoder, RateSplit, C64};
use crate::uncertainty::{Stream, UncertaintyRegion};
use crate::wmse::WmseState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    NoRs,
    Rs,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitStrategy {
    MrtEqualSplit,
    ZfEqualSplit,
    WarmStart(Precoder),
}

#[derive(Clone, Debug)]
pub struct AoConfig {
    pub tol_rel: f64,
    pub max_iter: usize,
    pub bootstrap_max: usize,
    pub init: InitStrategy,
    pub solver: Settings,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self {
            tol_rel: 1e-4,
            max_iter: 200,
            bootstrap_max: 10,
            init: InitStrategy::MrtEqualSplit,
            solver: Settings::default(),
        }
    }
}

impl AoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_rel > 0.0) || self.max_iter == 0 {
            return Err(Error::Domain("AO needs tol_rel > 0 and max_iter >= 1".into()));
        }
        Ok(())
    }

    pub fn with_init(&self, init: InitStrategy) -> Self {
        Self {
            init,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemKind {
    MaxMinRate { pt: f64 },
    MinPower { target: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesignStatus {
    Converged,
    IterationCap,
    Infeasible,
}

/// Regions of all users, noise level and transmission scheme.
#[derive(Clone, Debug)]
pub struct Design<'a> {
    pub regions: &'a [UncertaintyRegion],
    pub sigma2: f64,
    pub scheme: Scheme,
}

impl<'a> Design<'a> {
    pub fn new(regions: &'a [UncertaintyRegion], sigma2: f64, scheme: Scheme) -> Result<Self> {
        let k = regions.len();
        if k == 0 {
            return Err(Error::Domain("no users".into()));
        }
        let nt = regions[0].h_hat.len();
        if regions.iter().any(|r| r.h_hat.len() != nt) {
            return Err(Error::Dimension("estimates of different lengths".into()));
        }
        if k > nt {
            return Err(Error::Domain(format!("K={k} exceeds Nt={nt}")));
        }
        if scheme == Scheme::Rs && k < 2 {
            return Err(Error::Domain("rate splitting needs K >= 2".into()));
        }
        if !(sigma2 > 0.0) {
            return Err(Error::Domain("sigma2 must be positive".into()));
        }
        Ok(Self {
            regions,
            sigma2,
            scheme,
        })
    }

    pub fn k(&self) -> usize {
        self.regions.len()
    }

    pub fn nt(&self) -> usize {
        self.regions[0].h_hat.len()
    }

    /// The same design without a common stream.
    pub fn restrict_nors(&self) -> Design<'a> {
        Design {
            scheme: Scheme::NoRs,
            ..self.clone()
        }
    }
}

/// Optimal equalizer of one stream and its certified worst-case MSE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EqualizerOutcome {
    pub g: C64,
    /// `τ + |g|²σ²` with `τ` the exact worst-case squared residual at `g`.
    pub eps_cons: f64,
    pub tau: f64,
    pub lambda: f64,
}

/// Solves `min τ + s σ²` over `(g, τ, λ, s)` subject to the residual LMI of
/// the stream (precoder fixed) and `s ≥ |g|²`.
pub fn equalizer_step(
    region: &UncertaintyRegion,
    p: &Precoder,
    sigma2: f64,
    k: usize,
    stream: Stream,
    settings: &Settings,
) -> Result<EqualizerOutcome> {
    let full;
    let (m, target) = match stream {
        Stream::Private => (&p.pp, k),
        Stream::Common => {
            full = p.full();
            (&full, 0)
        }
    };
    let mut prob = ConicProblem::new();
    let g = ComplexVar {
        re: prob.add_var("re_g"),
        im: prob.add_var("im_g"),
    };
    let vars = LmiVars {
        tau: prob.add_var("tau"),
        lambda: prob.add_var("lambda"),
    };
    let s = prob.add_var("s");
    prob.set_objective(vars.tau, 1.0);
    prob.set_objective(s, sigma2);
    let lmi = match stream {
        Stream::Private => build_private_lmi(&region.h_hat, region.delta, MatArg::Fixed(m), Scalar::Variable(g), k, vars)?,
        Stream::Common => build_common_lmi(&region.h_hat, region.delta, MatArg::Fixed(m), Scalar::Variable(g), vars)?,
    };
    prob.add_block(lmi.to_cone_block());
    prob.add_block(build_scalar_square_epigraph(Scalar::Variable(g), s)?.to_cone_block());
    let sol = solve(&prob, settings)?;
    if !sol.status.has_solution() {
        return Err(Error::Solver(sol.status));
    }
    let gv = C64::new(sol.x[g.re], sol.x[g.im]);
    let cert = certify_tau(&region.h_hat, region.delta, m, gv, target);
    Ok(EqualizerOutcome {
        g: gv,
        eps_cons: cert.tau + gv.norm_sqr() * sigma2,
        tau: cert.tau,
        lambda: cert.lambda,
    })
}

pub fn weight_step(eps_cons: f64) -> Result<f64> {
    crate::wmse::optimal_weight(eps_cons)
}

/// `max_c min_k (r_k + c_k)` over `c ≥ 0`, `Σ c_k = r_c`: raise the lowest
/// private rates to a common level.
pub fn water_fill(private: &[f64], r_c: f64) -> (RateSplit, f64) {
    let k = private.len();
    let r_c = r_c.max(0.0);
    let mut sorted: Vec<f64> = private.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut level = sorted[0] + r_c;
    let mut prefix = 0.0;
    for j in 0..k {
        prefix += sorted[j];
        let l = (r_c + prefix) / (j + 1) as f64;
        if j + 1 == k || l <= sorted[j + 1] {
            level = l;
            break;
        }
    }
    let mut c: Vec<f64> = private.iter().map(|r| (level - r).max(0.0)).collect();
    // Absorb rounding so the portions sum to r_c.
    let sum: f64 = c.iter().sum();
    if sum > 0.0 {
        let f = r_c / sum;
        c.iter_mut().for_each(|v| *v *= f);
    }
    (RateSplit { c, r_c }, level)
}

/// Certified state of one precoder.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub state: WmseState,
    pub eps: Vec<f64>,
    pub eps_c: Vec<f64>,
    pub taus: Vec<f64>,
    pub taus_c: Vec<f64>,
    pub private_rates: Vec<f64>,
    pub common_rates: Vec<f64>,
    pub split: RateSplit,
    /// `min_k (R̂_k + Ĉ_k)`.
    pub level: f64,
}

fn rate_of(eps: f64) -> f64 {
    -eps.min(1.0).log2()
}

/// Equalizer and weight steps for every user, then the certified objective.
pub fn evaluate(design: &Design<'_>, p: &Precoder, settings: &Settings) -> Result<Evaluation> {
    let k = design.k();
    let mut state = WmseState {
        g_c: vec![C64::from(0.0); k],
        g: vec![C64::from(0.0); k],
        u_c: vec![1.0; k],
        u: vec![1.0; k],
    };
    let mut eps = vec![1.0; k];
    let mut eps_c = vec![1.0; k];
    let mut taus = vec![1.0; k];
    let mut taus_c = vec![1.0; k];
    for (i, region) in design.regions.iter().enumerate() {
        let o = equalizer_step(region, p, design.sigma2, i, Stream::Private, settings)?;
        state.g[i] = o.g;
        state.u[i] = weight_step(o.eps_cons.min(1.0))?;
        eps[i] = o.eps_cons;
        taus[i] = o.tau;
        if design.scheme == Scheme::Rs {
            let o = equalizer_step(region, p, design.sigma2, i, Stream::Common, settings)?;
            state.g_c[i] = o.g;
            state.u_c[i] = weight_step(o.eps_cons.min(1.0))?;
            eps_c[i] = o.eps_cons;
            taus_c[i] = o.tau;
        }
    }
    let private_rates: Vec<f64> = eps.iter().map(|e| rate_of(*e)).collect();
    let common_rates: Vec<f64> = match design.scheme {
        Scheme::Rs => eps_c.iter().map(|e| rate_of(*e)).collect(),
        Scheme::NoRs => vec![0.0; k],
    };
    let r_c = common_rates.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    let (split, level) = water_fill(&private_rates, r_c);
    Ok(Evaluation {
        state,
        eps,
        eps_c,
        taus,
        taus_c,
        private_rates,
        common_rates,
        split,
        level,
    })
}

/// Output of one precoder SDP.
#[derive(Clone, Debug)]
pub struct PrecoderStep {
    pub precoder: Precoder,
    pub split: RateSplit,
    /// `R̂_t` for the rate problem, `tr(PPᴴ)` for the power problem.
    pub objective: f64,
    pub taus: Vec<f64>,
    pub taus_c: Vec<f64>,
}

enum StepMode {
    Rate(f64),
    Power(f64),
}

struct StepVars {
    p: MatrixVar,
    tau: Vec<usize>,
    tau_c: Vec<usize>,
    c: Vec<usize>,
    r_t: Option<usize>,
}

fn precoder_problem(design: &Design<'_>, state: &WmseState, mode: &StepMode) -> Result<(ConicProblem, StepVars)> {
    state.validate()?;
    let (k, nt) = (design.k(), design.nt());
    let rs = design.scheme == Scheme::Rs;
    let cols = if rs { k + 1 } else { k };
    let mut prob = ConicProblem::new();
    let p = MatrixVar::new(nt, cols, |name| prob.add_var(name));
    let pp = if rs { p.columns(1, k) } else { p.clone() };
    let mut vars = StepVars {
        p,
        tau: Vec::new(),
        tau_c: Vec::new(),
        c: Vec::new(),
        r_t: None,
    };
    let r_t = match mode {
        StepMode::Rate(_) => {
            let v = prob.add_var("R_t");
            prob.set_objective(v, -1.0);
            vars.r_t = Some(v);
            Some(v)
        }
        StepMode::Power(_) => None,
    };
    let r_c = if rs { Some(prob.add_var("R_c")) } else { None };
    let sigma2 = design.sigma2;

    let mut lin = ConeBlock::new(Cone::NonNeg(if rs { 3 * k } else { k }), "rates");
    for (i, region) in design.regions.iter().enumerate() {
        let lv = LmiVars {
            tau: prob.add_var(format!("tau[{i}]")),
            lambda: prob.add_var(format!("lambda[{i}]")),
        };
        vars.tau.push(lv.tau);
        let g = state.g[i];
        let lmi = build_private_lmi(&region.h_hat, region.delta, MatArg::Variable(&pp), Scalar::Fixed(g), i, lv)?;
        prob.add_block(lmi.to_cone_block());
        // 1 + C_k − R_t − u(τ + |g|²σ²) + log₂u ≥ 0
        let u = state.u[i];
        lin.offset[i] = 1.0 - u * g.norm_sqr() * sigma2 + u.log2();
        lin.push(i, lv.tau, -u);
        match (r_t, mode) {
            (Some(v), _) => lin.push(i, v, -1.0),
            (None, StepMode::Power(target)) => lin.offset[i] -= target,
            (None, StepMode::Rate(_)) => unreachable!(),
        }
        if rs {
            let c = prob.add_var(format!("C[{i}]"));
            vars.c.push(c);
            lin.push(i, c, 1.0);
            lin.push(k + i, c, 1.0);

            let lv = LmiVars {
                tau: prob.add_var(format!("tau_c[{i}]")),
                lambda: prob.add_var(format!("lambda_c[{i}]")),
            };
            vars.tau_c.push(lv.tau);
            let gc = state.g_c[i];
            let lmi = build_common_lmi(&region.h_hat, region.delta, MatArg::Variable(&vars.p), Scalar::Fixed(gc), lv)?;
            prob.add_block(lmi.to_cone_block());
            let uc = state.u_c[i];
            let row = 2 * k + i;
            lin.offset[row] = 1.0 - uc * gc.norm_sqr() * sigma2 + uc.log2();
            lin.push(row, lv.tau, -uc);
            lin.push(row, r_c.unwrap(), -1.0);
        }
    }
    prob.add_block(lin);
    if let Some(rc) = r_c {
        let mut eq = ConeBlock::new(Cone::Zero(1), "split");
        for &c in &vars.c {
            eq.push(0, c, 1.0);
        }
        eq.push(0, rc, -1.0);
        prob.add_block(eq);
    }
    let bound = match mode {
        StepMode::Rate(pt) => PowerBound::Budget(*pt),
        StepMode::Power(_) => {
            let t = prob.add_var("t");
            prob.set_objective(t, 1.0);
            PowerBound::Epigraph(t)
        }
    };
    prob.add_block(build_power_constraint(&vars.p, bound)?);
    Ok((prob, vars))
}

fn finish_step(design: &Design<'_>, vars: &StepVars, x: &[f64]) -> (Precoder, RateSplit, Vec<f64>, Vec<f64>) {
    let pm = vars.p.value(x);
    let precoder = match design.scheme {
        Scheme::Rs => Precoder::from_full(&pm),
        Scheme::NoRs => Precoder {
            pc: CVec::zeros(design.nt()),
            pp: pm,
        },
    };
    let split = if vars.c.is_empty() {
        RateSplit::zero(design.k())
    } else {
        let c: Vec<f64> = vars.c.iter().map(|&v| x[v].max(0.0)).collect();
        let r_c = c.iter().sum();
        RateSplit { c, r_c }
    };
    let taus = vars.tau.iter().map(|&v| x[v]).collect();
    let taus_c = vars.tau_c.iter().map(|&v| x[v]).collect();
    (precoder, split, taus, taus_c)
}

/// Precoder SDP of the max-min rate problem with gains and weights fixed.
pub fn precoder_step_rate(design: &Design<'_>, state: &WmseState, pt: f64, settings: &Settings) -> Result<PrecoderStep> {
    let (prob, vars) = precoder_problem(design, state, &StepMode::Rate(pt))?;
    let sol = solve(&prob, settings)?;
    if !sol.status.has_solution() {
        return Err(Error::Solver(sol.status));
    }
    let (mut precoder, split, taus, taus_c) = finish_step(design, &vars, &sol.x);
    let power = precoder.power();
    if power > pt {
        precoder = precoder.scaled((pt / power).sqrt());
    }
    Ok(PrecoderStep {
        precoder,
        split,
        objective: sol.x[vars.r_t.unwrap()],
        taus,
        taus_c,
    })
}

/// Precoder SDP of the power problem: minimum `‖vec P‖` with every total
/// rate constraint held at `target`.
pub fn precoder_step_power(design: &Design<'_>, state: &WmseState, target: f64, settings: &Settings) -> Result<PrecoderStep> {
    let (prob, vars) = precoder_problem(design, state, &StepMode::Power(target))?;
    let sol = solve(&prob, settings)?;
    if !sol.status.has_solution() {
        return Err(Error::Solver(sol.status));
    }
    let (precoder, split, taus, taus_c) = finish_step(design, &vars, &sol.x);
    Ok(PrecoderStep {
        objective: precoder.power(),
        precoder,
        split,
        taus,
        taus_c,
    })
}

#[derive(Clone, Debug)]
pub struct DesignResult {
    pub scheme: Scheme,
    pub precoder: Precoder,
    pub split: RateSplit,
    pub wmse_state: WmseState,
    /// `R̂_t` for the rate problem, `tr(PPᴴ)` for the power problem.
    pub objective: f64,
    /// `R̂_k + Ĉ_k`.
    pub per_user_conservative_rates: Vec<f64>,
    pub private_rates: Vec<f64>,
    /// Per-user conservative common rates (zero for NoRS).
    pub common_rates: Vec<f64>,
    pub taus: Vec<f64>,
    pub taus_c: Vec<f64>,
    /// Certified `min_k (R̂_k + Ĉ_k)` of the final precoder.
    pub level: f64,
    pub power: f64,
    pub trace: Vec<f64>,
    pub status: DesignStatus,
    pub iterations: usize,
    /// Precoder SDPs that ended without an optimal status.
    pub solver_failures: usize,
}

impl DesignResult {
    fn from_eval(scheme: Scheme, precoder: Precoder, ev: Evaluation, objective: f64) -> Self {
        let per_user = ev
            .private_rates
            .iter()
            .zip(&ev.split.c)
            .map(|(r, c)| r + c)
            .collect();
        Self {
            scheme,
            power: precoder.power(),
            precoder,
            split: ev.split,
            wmse_state: ev.state,
            objective,
            per_user_conservative_rates: per_user,
            private_rates: ev.private_rates,
            common_rates: ev.common_rates,
            taus: ev.taus,
            taus_c: ev.taus_c,
            level: ev.level,
            trace: Vec::new(),
            status: DesignStatus::Converged,
            iterations: 0,
            solver_failures: 0,
        }
    }

    fn infeasible(design: &Design<'_>) -> Self {
        let k = design.k();
        Self {
            scheme: design.scheme,
            precoder: Precoder::zeros(design.nt(), k),
            split: RateSplit::zero(k),
            wmse_state: WmseState {
                g_c: vec![C64::from(0.0); k],
                g: vec![C64::from(0.0); k],
                u_c: vec![1.0; k],
                u: vec![1.0; k],
            },
            objective: f64::INFINITY,
            per_user_conservative_rates: vec![0.0; k],
            private_rates: vec![0.0; k],
            common_rates: vec![0.0; k],
            taus: vec![1.0; k],
            taus_c: vec![1.0; k],
            level: 0.0,
            power: f64::INFINITY,
            trace: Vec::new(),
            status: DesignStatus::Infeasible,
            iterations: 0,
            solver_failures: 0,
        }
    }
}

/// Dominant left singular vector of `[ĥ₁ … ĥ_K]`.
pub fn dominant_direction(regions: &[UncertaintyRegion]) -> CVec {
    let h = estimate_matrix(regions);
    let svd = h.svd(true, false);
    let u = svd.u.expect("requested");
    let (i, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, v)| if *v > b.1 { (i, *v) } else { b });
    u.column(i).into_owned()
}

pub fn estimate_matrix(regions: &[UncertaintyRegion]) -> CMat {
    let cols: Vec<CVec> = regions.iter().map(|r| r.h_hat.clone()).collect();
    CMat::from_columns(&cols)
}

fn unit_columns(m: &CMat) -> CMat {
    let mut out = m.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= C64::from(n);
        }
    }
    out
}

/// Starting precoder at budget `pt`. RS splits the budget evenly between
/// the common stream and the private streams; NoRS gives all of it to the
/// private streams.
pub fn initial_precoder(design: &Design<'_>, init: &InitStrategy, pt: f64) -> Result<Precoder> {
    let k = design.k();
    let private_dirs = match init {
        InitStrategy::WarmStart(p) => {
            if p.nt() != design.nt() || p.k() != k {
                return Err(Error::Dimension("warm start has the wrong shape".into()));
            }
            let mut p = p.clone();
            if design.scheme == Scheme::NoRs {
                p = p.without_common();
            }
            let power = p.power();
            if power > pt {
                p = p.scaled((pt / power).sqrt());
            }
            return Ok(p);
        }
        InitStrategy::MrtEqualSplit => unit_columns(&estimate_matrix(design.regions)),
        InitStrategy::ZfEqualSplit => zf_directions(&estimate_matrix(design.regions))?,
    };
    let private_total = match design.scheme {
        Scheme::Rs => pt / 2.0,
        Scheme::NoRs => pt,
    };
    let pp = private_dirs * C64::from((private_total / k as f64).sqrt());
    let pc = match design.scheme {
        Scheme::Rs => dominant_direction(design.regions) * C64::from((pt / 2.0).sqrt()),
        Scheme::NoRs => CVec::zeros(design.nt()),
    };
    Precoder::new(pc, pp)
}

/// Step fractions tried between the current precoder and the SDP output.
const BACKTRACK: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

/// First point `(1 − t) P + t P_new` that `accept` admits.
///
/// With weights `1/ε̂` the fixed-weight surrogate is tight only at the
/// current point, so a full step can lower the certified objective.
fn backtrack(
    design: &Design<'_>,
    p: &Precoder,
    p_new: &Precoder,
    settings: &Settings,
    accept: impl Fn(&Precoder, &Evaluation) -> bool,
) -> Result<Option<(Precoder, Evaluation)>> {
    for t in BACKTRACK {
        let cand = if t == 1.0 {
            p_new.clone()
        } else {
            Precoder {
                pc: &p.pc * C64::from(1.0 - t) + &p_new.pc * C64::from(t),
                pp: &p.pp * C64::from(1.0 - t) + &p_new.pp * C64::from(t),
            }
        };
        let ev = evaluate(design, &cand, settings)?;
        if accept(&cand, &ev) {
            return Ok(Some((cand, ev)));
        }
    }
    Ok(None)
}

fn rel_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / new.abs().max(1.0)
}

fn run_rate(design: &Design<'_>, pt: f64, start: Precoder, config: &AoConfig) -> Result<DesignResult> {
    let settings = &config.solver;
    let mut p = start;
    let mut ev = evaluate(design, &p, settings)?;
    let mut trace = vec![ev.level];
    let mut status = DesignStatus::IterationCap;
    let mut failures = 0;
    let mut iterations = 0;
    for _ in 0..config.max_iter {
        iterations += 1;
        let step = match precoder_step_rate(design, &ev.state, pt, settings) {
            Ok(s) => s,
            Err(Error::Solver(_)) => {
                failures += 1;
                break;
            }
            Err(e) => return Err(e),
        };
        let old = ev.level;
        let Some((next_p, next)) = backtrack(design, &p, &step.precoder, settings, |_, e| e.level >= old)? else {
            status = DesignStatus::Converged;
            break;
        };
        let change = rel_change(next.level, ev.level);
        p = next_p;
        ev = next;
        trace.push(ev.level);
        if change < config.tol_rel {
            status = DesignStatus::Converged;
            break;
        }
    }
    let level = ev.level;
    let mut out = DesignResult::from_eval(design.scheme, p, ev, level);
    out.trace = trace;
    out.status = status;
    out.iterations = iterations;
    out.solver_failures = failures;
    Ok(out)
}

/// Slack allowed between the certified level and the power-problem target.
pub const TARGET_SLACK: f64 = 1e-7;

fn run_power(design: &Design<'_>, target: f64, start: Precoder, start_ev: Evaluation, config: &AoConfig) -> Result<DesignResult> {
    let settings = &config.solver;
    let mut p = start;
    let mut ev = start_ev;
    let mut trace = vec![p.power()];
    let mut status = DesignStatus::IterationCap;
    let mut failures = 0;
    let mut iterations = 0;
    for _ in 0..config.max_iter {
        iterations += 1;
        let step = match precoder_step_power(design, &ev.state, target, settings) {
            Ok(s) => s,
            Err(Error::Solver(_)) => {
                failures += 1;
                break;
            }
            Err(e) => return Err(e),
        };
        let old_power = p.power();
        let accept = |c: &Precoder, e: &Evaluation| e.level >= target - TARGET_SLACK && c.power() <= old_power;
        let Some((next_p, next)) = backtrack(design, &p, &step.precoder, settings, accept)? else {
            status = DesignStatus::Converged;
            break;
        };
        let new_power = next_p.power();
        let change = rel_change(new_power, old_power);
        p = next_p;
        ev = next;
        trace.push(new_power);
        if change < config.tol_rel {
            status = DesignStatus::Converged;
            break;
        }
    }
    let power = p.power();
    let mut out = DesignResult::from_eval(design.scheme, p, ev, power);
    out.trace = trace;
    out.status = status;
    out.iterations = iterations;
    out.solver_failures = failures;
    Ok(out)
}

/// Outcome of [`bootstrap_power_problem`].
#[derive(Clone, Debug)]
pub struct Bootstrap {
    pub precoder: Precoder,
    pub evaluation: Evaluation,
    /// Index `j` of the budget `P₀·2^j` that first met the target.
    pub round: usize,
    pub budget: f64,
}

/// Runs short rate optimizations at budgets `P₀·2^j`, `j = 0..=bootstrap_max`,
/// until the certified max-min rate reaches `target`. `P₀` defaults to
/// `σ²(2^target − 1)`, the power a lone interference-free user would need.
pub fn bootstrap_power_problem(
    design: &Design<'_>,
    target: f64,
    config: &AoConfig,
    p0: Option<f64>,
) -> Result<Option<Bootstrap>> {
    let p0 = p0.unwrap_or(design.sigma2 * (target.exp2() - 1.0));
    let short = AoConfig {
        max_iter: 5,
        ..config.clone()
    };
    let mut carry: Option<Precoder> = None;
    for j in 0..=config.bootstrap_max {
        let budget = p0 * 2f64.powi(j as i32);
        if !(budget > 0.0) {
            let p = Precoder::zeros(design.nt(), design.k());
            let ev = evaluate(design, &p, &config.solver)?;
            if ev.level >= target - TARGET_SLACK {
                return Ok(Some(Bootstrap {
                    precoder: p,
                    evaluation: ev,
                    round: j,
                    budget,
                }));
            }
            continue;
        }
        let start = match &carry {
            Some(p) if p.power() > 0.0 => p.scaled((budget / p.power()).sqrt()),
            _ => initial_precoder(design, &config.init, budget)?,
        };
        let start = if start.power() > budget {
            start.scaled((budget / start.power()).sqrt())
        } else {
            start
        };
        let res = run_rate(design, budget, start, &short)?;
        if res.level >= target - TARGET_SLACK {
            let ev = evaluate(design, &res.precoder, &config.solver)?;
            return Ok(Some(Bootstrap {
                precoder: res.precoder,
                evaluation: ev,
                round: j,
                budget,
            }));
        }
        carry = Some(res.precoder);
    }
    Ok(None)
}

/// Alternating optimization for either problem.
pub fn run_ao(kind: ProblemKind, design: &Design<'_>, config: &AoConfig) -> Result<DesignResult> {
    config.validate()?;
    match kind {
        ProblemKind::MaxMinRate { pt } => {
            if !(pt > 0.0) {
                return Err(Error::Domain("power budget must be positive".into()));
            }
            let start = initial_precoder(design, &config.init, pt)?;
            run_rate(design, pt, start, config)
        }
        ProblemKind::MinPower { target } => {
            if target <= 0.0 {
                let p = Precoder::zeros(design.nt(), design.k());
                let ev = evaluate(design, &p, &config.solver)?;
                let mut out = DesignResult::from_eval(design.scheme, p, ev, 0.0);
                out.trace = vec![0.0];
                return Ok(out);
            }
            // A warm start that already meets the target skips the bootstrap.
            if let InitStrategy::WarmStart(w) = &config.init {
                let start = initial_precoder(design, &config.init, w.power().max(f64::MIN_POSITIVE))?;
                let ev = evaluate(design, &start, &config.solver)?;
                if ev.level >= target - TARGET_SLACK {
                    return run_power(design, target, start, ev, config);
                }
            }
            match bootstrap_power_problem(design, target, config, None)? {
                Some(b) => {
                    let mut out = run_power(design, target, b.precoder, b.evaluation, config)?;
                    out.iterations += b.round;
                    Ok(out)
                }
                None => Ok(DesignResult::infeasible(design)),
            }
        }
    }
}

/// RS warm start derived from a NoRS design: the NoRS precoders plus a
/// common stream along the dominant estimate direction.
///
/// For the rate problem the private part is scaled to 99% of `budget` and
/// the common stream takes the remaining 1%. For the power problem pass
/// `budget = None`; the private part is kept and the common stream gets 1%
/// of its power on top.
pub fn rs_warm_start(nors: &Precoder, regions: &[UncertaintyRegion], budget: Option<f64>) -> Precoder {
    let dir = dominant_direction(regions);
    match budget {
        Some(pt) => Precoder {
            pc: dir * C64::from((0.01 * pt).sqrt()),
            pp: &nors.pp * C64::from(0.99f64.sqrt()),
        },
        None => Precoder {
            pc: dir * C64::from((0.01 * nors.pp.norm_squared()).sqrt()),
            pp: nors.pp.clone(),
        },
    }
}

/// RS design that never falls behind the given NoRS design: RS is
/// warm-started from the NoRS precoder, and the NoRS precoder itself (a
/// valid RS design with no common stream) is returned if RS ends up worse.
/// For the rate problem the better of the warm-started run and a run from
/// `config.init` is kept.
pub fn run_rs_dominant(kind: ProblemKind, design: &Design<'_>, nors: &DesignResult, config: &AoConfig) -> Result<DesignResult> {
    if design.scheme != Scheme::Rs {
        return Err(Error::Domain("dominant run needs an RS design".into()));
    }
    let nors_ok = nors.status != DesignStatus::Infeasible;
    let init = match kind {
        ProblemKind::MaxMinRate { pt } => InitStrategy::WarmStart(rs_warm_start(&nors.precoder, design.regions, Some(pt))),
        ProblemKind::MinPower { .. } if nors_ok => InitStrategy::WarmStart(rs_warm_start(&nors.precoder, design.regions, None)),
        ProblemKind::MinPower { .. } => config.init.clone(),
    };
    let mut rs = run_ao(kind, design, &config.with_init(init))?;
    // The warm start often stalls near the NoRS point; a cold start from
    // the configured strategy is tried as well for the rate problem.
    if let ProblemKind::MaxMinRate { .. } = kind {
        if !matches!(config.init, InitStrategy::WarmStart(_)) {
            let cold = run_ao(kind, design, config)?;
            if cold.level > rs.level {
                rs = cold;
            }
        }
    }
    if !nors_ok {
        return Ok(rs);
    }
    let rs_worse = match kind {
        ProblemKind::MaxMinRate { .. } => rs.level < nors.level,
        ProblemKind::MinPower { .. } => rs.status == DesignStatus::Infeasible || rs.power > nors.power,
    };
    if !rs_worse {
        return Ok(rs);
    }
    let p = nors.precoder.without_common();
    let ev = evaluate(design, &p, &config.solver)?;
    let objective = match kind {
        ProblemKind::MaxMinRate { .. } => ev.level,
        ProblemKind::MinPower { .. } => p.power(),
    };
    let mut out = DesignResult::from_eval(Scheme::Rs, p, ev, objective);
    out.trace = nors.trace.clone();
    out.status = nors.status;
    out.iterations = rs.iterations;
    out.solver_failures = rs.solver_failures;
    Ok(out)
}
