//! Independent feasibility check of a candidate point.

use nalgebra::SymmetricEigen;

use crate::problem::{smat, Cone, ConicProblem};

/// Worst violation of one block. Zero means the block holds exactly.
#[derive(Clone, Debug)]
pub struct BlockViolation {
    pub label: String,
    pub violation: f64,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub objective: f64,
    pub blocks: Vec<BlockViolation>,
}

impl CheckReport {
    pub fn max_violation(&self) -> f64 {
        self.blocks.iter().map(|b| b.violation).fold(0.0, f64::max)
    }
}

/// Evaluates every block at `x`.
///
/// Violations: `max |s|` for equalities, `-min s` for the orthant,
/// `‖s₁..‖ − s₀` for second-order cones and `-λ_min` for PSD blocks, each
/// clamped below at 0.
pub fn check_solution(problem: &ConicProblem, x: &[f64]) -> CheckReport {
    let blocks = problem
        .blocks
        .iter()
        .map(|block| {
            let s = block.slack(x);
            let v = match block.cone {
                Cone::Zero(_) => s.iter().map(|v| v.abs()).fold(0.0, f64::max),
                Cone::NonNeg(_) => -s.iter().cloned().fold(f64::INFINITY, f64::min),
                Cone::SecondOrder(_) => s[1..].iter().map(|v| v * v).sum::<f64>().sqrt() - s[0],
                Cone::Psd(side) => -SymmetricEigen::new(smat(&s, side)).eigenvalues.min(),
            };
            BlockViolation {
                label: block.label.clone(),
                violation: v.max(0.0),
            }
        })
        .collect();
    CheckReport {
        objective: problem.objective_value(x),
        blocks,
    }
}
