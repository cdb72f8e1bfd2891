//! Conic program representation.
//!
//! A problem is `minimize cᵀx` subject to a list of blocks, each of the form
//!
//! ```text
//!     s = offset + Σⱼ xⱼ·coefⱼ  ∈  K
//! ```
//!
//! where `K` is the zero cone (equalities), the nonnegative orthant, a
//! second-order cone `{(t, v) : ‖v‖ ≤ t}` or the cone of positive
//! semidefinite matrices. PSD blocks live in `svec` coordinates: the lower
//! triangle stored column by column with off-diagonal entries scaled by √2,
//! so the Euclidean inner product matches the trace inner product.

use nalgebra::DMatrix;

use crate::error::ProblemError;

/// Cone attached to a constraint block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// `s = 0`, i.e. linear equalities.
    Zero(usize),
    /// `s ≥ 0` elementwise.
    NonNeg(usize),
    /// `s₀ ≥ ‖s₁..‖`.
    SecondOrder(usize),
    /// `smat(s) ⪰ 0` for a `side × side` symmetric matrix.
    Psd(usize),
}

impl Cone {
    /// Length of the block's slack vector.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(n) | Cone::NonNeg(n) | Cone::SecondOrder(n) => n,
            Cone::Psd(side) => side * (side + 1) / 2,
        }
    }

    fn keyword(&self) -> &'static str {
        match self {
            Cone::Zero(_) => "zero",
            Cone::NonNeg(_) => "nonneg",
            Cone::SecondOrder(_) => "soc",
            Cone::Psd(_) => "psd",
        }
    }

    /// The size parameter as written in the dump format (side length for PSD).
    fn size_param(&self) -> usize {
        match *self {
            Cone::Zero(n) | Cone::NonNeg(n) | Cone::SecondOrder(n) | Cone::Psd(n) => n,
        }
    }
}

/// One affine constraint block `offset + Σ xⱼ coefⱼ ∈ cone`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeBlock {
    pub cone: Cone,
    pub label: String,
    pub offset: Vec<f64>,
    /// Sparse coefficient triplets `(row, var, value)`; duplicates are summed.
    pub coeffs: Vec<(usize, usize, f64)>,
}

impl ConeBlock {
    pub fn new(cone: Cone, label: impl Into<String>) -> Self {
        Self {
            cone,
            label: label.into(),
            offset: vec![0.0; cone.dim()],
            coeffs: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.cone.dim()
    }

    /// Adds `value·x[var]` to row `row`. Zero values are skipped.
    pub fn push(&mut self, row: usize, var: usize, value: f64) {
        if value != 0.0 {
            self.coeffs.push((row, var, value));
        }
    }

    /// `F₀ + Σ xⱼ Fⱼ ⪰ 0` for real symmetric matrices.
    pub fn lmi(
        label: impl Into<String>,
        constant: &DMatrix<f64>,
        terms: &[(usize, DMatrix<f64>)],
    ) -> Self {
        let side = constant.nrows();
        let mut block = ConeBlock::new(Cone::Psd(side), label);
        block.offset = svec(constant);
        for (var, mat) in terms {
            debug_assert_eq!(mat.nrows(), side);
            for (row, v) in svec(mat).into_iter().enumerate() {
                block.push(row, *var, v);
            }
        }
        block
    }

    /// Evaluates the slack `offset + Σ xⱼ coefⱼ` at `x`.
    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.offset.clone();
        for &(row, var, v) in &self.coeffs {
            s[row] += v * x[var];
        }
        s
    }
}

/// `minimize cᵀx` over the declared blocks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConicProblem {
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub blocks: Vec<ConeBlock>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    /// Declares a new real variable with objective coefficient 0.
    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.var_names.push(name.into());
        self.objective.push(0.0);
        self.var_names.len() - 1
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    pub fn add_block(&mut self, block: ConeBlock) {
        self.blocks.push(block);
    }

    /// Total slack length over all blocks.
    pub fn n_rows(&self) -> usize {
        self.blocks.iter().map(ConeBlock::dim).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let n = self.n_vars();
        if self.objective.len() != n {
            return Err(ProblemError::ObjectiveLength {
                expected: n,
                found: self.objective.len(),
            });
        }
        if let Some(i) = self.objective.iter().position(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite(format!("objective[{i}]")));
        }
        for (b, block) in self.blocks.iter().enumerate() {
            let dim = block.dim();
            if dim == 0 {
                return Err(ProblemError::EmptyBlock(b));
            }
            if block.offset.len() != dim {
                return Err(ProblemError::OffsetLength {
                    block: b,
                    expected: dim,
                    found: block.offset.len(),
                });
            }
            if block.offset.iter().any(|v| !v.is_finite()) {
                return Err(ProblemError::NonFinite(format!("block {b} offset")));
            }
            for &(row, var, v) in &block.coeffs {
                if row >= dim {
                    return Err(ProblemError::RowOutOfRange { block: b, row, dim });
                }
                if var >= n {
                    return Err(ProblemError::UnknownVariable { block: b, var });
                }
                if !v.is_finite() {
                    return Err(ProblemError::NonFinite(format!("block {b} coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Writes the plain-text debug dump.
    ///
    /// ```text
    /// conic-problem v1
    /// var <name>                  (one line per variable, in index order)
    /// obj <var> <coef>            (nonzero objective entries)
    /// block <zero|nonneg|soc|psd> <size> <label>
    /// off <row> <value>           (nonzero offset entries)
    /// coef <row> <var> <value>
    /// end
    /// ```
    ///
    /// `size` is the vector length, or the side length for `psd`. Values are
    /// printed in shortest round-trip form, so [`ConicProblem::parse_dump`]
    /// restores the problem exactly.
    pub fn to_dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("conic-problem v1\n");
        for name in &self.var_names {
            writeln!(out, "var {name}").unwrap();
        }
        for (i, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                writeln!(out, "obj {i} {c:e}").unwrap();
            }
        }
        for block in &self.blocks {
            writeln!(
                out,
                "block {} {} {}",
                block.cone.keyword(),
                block.cone.size_param(),
                block.label
            )
            .unwrap();
            for (row, v) in block.offset.iter().enumerate() {
                if *v != 0.0 {
                    writeln!(out, "off {row} {v:e}").unwrap();
                }
            }
            for (row, var, v) in &block.coeffs {
                writeln!(out, "coef {row} {var} {v:e}").unwrap();
            }
            out.push_str("end\n");
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self, ProblemError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, "conic-problem v1")) => {}
            _ => return Err(ProblemError::parse(1, "missing `conic-problem v1` header")),
        }
        let mut problem = ConicProblem::new();
        let mut objective = Vec::new();
        let mut current: Option<ConeBlock> = None;
        for (lineno, line) in lines {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (keyword, rest) = line.split_once(' ').unwrap_or((line, ""));
            match (keyword, current.as_mut()) {
                ("var", None) => {
                    problem.add_var(rest);
                }
                ("obj", None) => {
                    let [var, val] = fields::<2>(rest, lineno)?;
                    objective.push((parse_usize(var, lineno)?, parse_f64(val, lineno)?));
                }
                ("block", None) => {
                    let mut parts = rest.splitn(3, ' ');
                    let kind = parts.next().unwrap_or("");
                    let size = parse_usize(parts.next().unwrap_or(""), lineno)?;
                    let label = parts.next().unwrap_or("");
                    let cone = match kind {
                        "zero" => Cone::Zero(size),
                        "nonneg" => Cone::NonNeg(size),
                        "soc" => Cone::SecondOrder(size),
                        "psd" => Cone::Psd(size),
                        other => {
                            return Err(ProblemError::parse(lineno, format!("unknown cone `{other}`")))
                        }
                    };
                    current = Some(ConeBlock::new(cone, label));
                }
                ("off", Some(block)) => {
                    let [row, val] = fields::<2>(rest, lineno)?;
                    let row = parse_usize(row, lineno)?;
                    if row >= block.dim() {
                        return Err(ProblemError::parse(lineno, "offset row out of range"));
                    }
                    block.offset[row] = parse_f64(val, lineno)?;
                }
                ("coef", Some(block)) => {
                    let [row, var, val] = fields::<3>(rest, lineno)?;
                    block.coeffs.push((
                        parse_usize(row, lineno)?,
                        parse_usize(var, lineno)?,
                        parse_f64(val, lineno)?,
                    ));
                }
                ("end", Some(_)) => problem.blocks.push(current.take().unwrap()),
                (kw, _) => {
                    return Err(ProblemError::parse(lineno, format!("unexpected `{kw}`")));
                }
            }
        }
        if current.is_some() {
            return Err(ProblemError::parse(0, "unterminated block"));
        }
        for (var, val) in objective {
            if var >= problem.n_vars() {
                return Err(ProblemError::UnknownVariable { block: usize::MAX, var });
            }
            problem.objective[var] = val;
        }
        problem.validate()?;
        Ok(problem)
    }
}

fn fields<const N: usize>(rest: &str, line: usize) -> Result<[&str; N], ProblemError> {
    let parts: Vec<&str> = rest.split_whitespace().collect();
    parts
        .try_into()
        .map_err(|_| ProblemError::parse(line, format!("expected {N} fields")))
}

fn parse_usize(s: &str, line: usize) -> Result<usize, ProblemError> {
    s.parse()
        .map_err(|_| ProblemError::parse(line, format!("bad integer `{s}`")))
}

fn parse_f64(s: &str, line: usize) -> Result<f64, ProblemError> {
    s.parse()
        .map_err(|_| ProblemError::parse(line, format!("bad number `{s}`")))
}

/// Symmetric matrix to `svec` coordinates (lower triangle, column-major,
/// off-diagonals scaled by √2). Only the lower triangle of `m` is read.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        out.push(m[(j, j)]);
        for i in j + 1..n {
            out.push(m[(i, j)] * std::f64::consts::SQRT_2);
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], side: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(side, side);
    let mut k = 0;
    for j in 0..side {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..side {
            let x = v[k] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

/// Writes `svec(m)` into `out` without allocating.
pub(crate) fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for j in 0..n {
        out[k] = m[(j, j)];
        k += 1;
        for i in j + 1..n {
            out[k] = m[(i, j)] * std::f64::consts::SQRT_2;
            k += 1;
        }
    }
}

/// Reads `smat(v)` into a preallocated matrix.
pub(crate) fn smat_into(v: &[f64], m: &mut DMatrix<f64>) {
    let side = m.nrows();
    let mut k = 0;
    for j in 0..side {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..side {
            let x = v[k] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_preserves_inner_product() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let b = DMatrix::from_row_slice(3, 3, &[0.5, -1.0, 0.0, -1.0, 2.0, 1.5, 0.0, 1.5, -3.0]);
        let trace = (&a * &b).trace();
        let dot: f64 = svec(&a).iter().zip(svec(&b)).map(|(x, y)| x * y).sum();
        assert!((trace - dot).abs() < 1e-12);
        assert!((smat(&svec(&a), 3) - a).amax() < 1e-14);
    }

    #[test]
    fn dump_round_trip() {
        let mut p = ConicProblem::new();
        let t = p.add_var("t");
        let y = p.add_var("y");
        p.set_objective(t, 1.0);
        p.set_objective(y, -0.1);
        let f0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
        let ft = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        p.add_block(ConeBlock::lmi("schur", &f0, &[(t, ft)]));
        let mut nn = ConeBlock::new(Cone::NonNeg(1), "y bound");
        nn.offset[0] = 3.0;
        nn.push(0, y, -1.0 / 3.0);
        p.add_block(nn);
        let text = p.to_dump();
        let back = ConicProblem::parse_dump(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn parse_rejects_unknown_variable() {
        let text = "conic-problem v1\nvar a\nblock nonneg 1 x\ncoef 0 3 1e0\nend\n";
        assert!(matches!(
            ConicProblem::parse_dump(text),
            Err(ProblemError::UnknownVariable { var: 3, .. })
        ));
    }

    #[test]
    fn validate_catches_bad_offset() {
        let mut p = ConicProblem::new();
        p.add_var("x");
        let mut b = ConeBlock::new(Cone::NonNeg(2), "b");
        b.offset.pop();
        p.add_block(b);
        assert!(matches!(p.validate(), Err(ProblemError::OffsetLength { .. })));
    }
}
