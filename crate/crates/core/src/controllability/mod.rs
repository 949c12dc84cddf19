//! Controllability decisions for linear systems, clause by clause, with barrier
//! certificates backing every negative verdict that passes the LARC.

mod certificate;
mod projection;

pub use certificate::{barrier_certificate, BarrierCertificate, CertificateError, CertificateKind, CertificateParams};
pub use projection::{plane_f, projected_system, ProjectedSystem, ProjectionError, Space};

use crate::algebra::{GroupKind, Vec2};
use crate::derivation::{decompose, structural_predicates, Decomposition, StructuralPredicates};
use crate::system::{distribution_info, in_span, normalize, DistributionInfo, LinearSystem};
use crate::algebra::AlgebraElement;
use serde::{Deserialize, Serialize};

/// Frozen clause identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Clause {
    #[serde(rename = "LARC-FAIL")]
    LarcFail,
    #[serde(rename = "DIM3-TRIVIAL")]
    Dim3Trivial,
    #[serde(rename = "T1.R2")]
    T1R2,
    #[serde(rename = "T1.R2Tilde")]
    T1R2Tilde,
    #[serde(rename = "T1.E")]
    T1E,
    #[serde(rename = "T1.R3")]
    T1R3,
    #[serde(rename = "T1.R3Lambda")]
    T1R3Lambda,
    #[serde(rename = "T1.R3Lambda.NILPOTENT")]
    T1R3LambdaNilpotent,
    #[serde(rename = "T1.R3Prime")]
    T1R3Prime,
    #[serde(rename = "T2.R2")]
    T2R2,
    #[serde(rename = "T2.R2Tilde")]
    T2R2Tilde,
    #[serde(rename = "T2.E")]
    T2E,
    #[serde(rename = "T2.R3Prime")]
    T2R3Prime,
    #[serde(rename = "T2.R3")]
    T2R3,
    #[serde(rename = "T2.R3Lambda")]
    T2R3Lambda,
    #[serde(rename = "T2.R3Lambda.NILPOTENT")]
    T2R3LambdaNilpotent,
    #[serde(rename = "T2.R3Lambda.NON-INVARIANT")]
    T2R3LambdaNonInvariant,
}

impl Clause {
    pub const ALL: [Clause; 17] = [
        Clause::LarcFail,
        Clause::Dim3Trivial,
        Clause::T1R2,
        Clause::T1R2Tilde,
        Clause::T1E,
        Clause::T1R3,
        Clause::T1R3Lambda,
        Clause::T1R3LambdaNilpotent,
        Clause::T1R3Prime,
        Clause::T2R2,
        Clause::T2R2Tilde,
        Clause::T2E,
        Clause::T2R3Prime,
        Clause::T2R3,
        Clause::T2R3Lambda,
        Clause::T2R3LambdaNilpotent,
        Clause::T2R3LambdaNonInvariant,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Clause::LarcFail => "LARC-FAIL",
            Clause::Dim3Trivial => "DIM3-TRIVIAL",
            Clause::T1R2 => "T1.R2",
            Clause::T1R2Tilde => "T1.R2Tilde",
            Clause::T1E => "T1.E",
            Clause::T1R3 => "T1.R3",
            Clause::T1R3Lambda => "T1.R3Lambda",
            Clause::T1R3LambdaNilpotent => "T1.R3Lambda.NILPOTENT",
            Clause::T1R3Prime => "T1.R3Prime",
            Clause::T2R2 => "T2.R2",
            Clause::T2R2Tilde => "T2.R2Tilde",
            Clause::T2E => "T2.E",
            Clause::T2R3Prime => "T2.R3Prime",
            Clause::T2R3 => "T2.R3",
            Clause::T2R3Lambda => "T2.R3Lambda",
            Clause::T2R3LambdaNilpotent => "T2.R3Lambda.NILPOTENT",
            Clause::T2R3LambdaNonInvariant => "T2.R3Lambda.NON-INVARIANT",
        }
    }
}

impl std::fmt::Display for Clause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Everything the clause table reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClauseInputs {
    pub kind: GroupKind,
    pub lambda_is_one: bool,
    pub larc: bool,
    pub delta_dim: usize,
    pub gzero_dim: usize,
    pub g0_is_aff: bool,
    pub dstar_zero: bool,
    pub complex_pair: bool,
    pub delta_is_aff: bool,
    pub ker_in_delta: bool,
    /// Δ ∩ R² is D*-invariant (only read for R3_1 with dim Δ = 2).
    pub nil_part_invariant: bool,
}

pub fn clause_table(x: &ClauseInputs) -> (bool, Clause) {
    use GroupKind::*;
    if !x.larc {
        return (false, Clause::LarcFail);
    }
    let g_is_g0 = x.gzero_dim == 3;
    match x.delta_dim {
        3 => (true, Clause::Dim3Trivial),
        1 => match x.kind {
            R2 => (x.g0_is_aff || g_is_g0, Clause::T1R2),
            R2Tilde => (x.g0_is_aff, Clause::T1R2Tilde),
            ETilde | En => (g_is_g0 && !x.dstar_zero, Clause::T1E),
            R3 => (g_is_g0 && !x.dstar_zero, Clause::T1R3),
            R3Lambda => {
                if x.lambda_is_one && x.complex_pair {
                    (true, Clause::T1R3Lambda)
                } else if x.lambda_is_one && g_is_g0 && !x.dstar_zero {
                    (true, Clause::T1R3LambdaNilpotent)
                } else {
                    (false, Clause::T1R3Lambda)
                }
            }
            R3PrimeLambda => (true, Clause::T1R3Prime),
        },
        _ => match x.kind {
            R2 => (x.gzero_dim > 1 || (x.gzero_dim == 1 && x.delta_is_aff), Clause::T2R2),
            R2Tilde => (x.gzero_dim > 1 || (x.gzero_dim == 1 && x.delta_is_aff), Clause::T2R2Tilde),
            ETilde | En => (true, Clause::T2E),
            R3PrimeLambda => (true, Clause::T2R3Prime),
            R3 => (g_is_g0, Clause::T2R3),
            R3Lambda => {
                if !x.ker_in_delta || x.complex_pair {
                    (true, Clause::T2R3Lambda)
                } else if x.lambda_is_one && g_is_g0 {
                    (true, Clause::T2R3LambdaNilpotent)
                } else if x.lambda_is_one && !x.nil_part_invariant {
                    (true, Clause::T2R3LambdaNonInvariant)
                } else {
                    (false, Clause::T2R3Lambda)
                }
            }
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub info: DistributionInfo,
    pub predicates: StructuralPredicates,
    pub decomposition: Decomposition,
    pub inputs: ClauseInputs,
}

pub fn analyze(system: &LinearSystem) -> Analysis {
    let info = distribution_info(system);
    let predicates = structural_predicates(&system.deriv);
    let decomposition = decompose(&system.deriv);
    let ker_in_delta = predicates
        .ker_dstar_basis
        .iter()
        .all(|k| in_span(&info.delta_basis, &AlgebraElement { a: 0.0, w: *k }));
    let nil_part_invariant = nil_part(&info.delta_basis).is_none_or(|w| {
        let dw = system.deriv.dstar * w;
        (w.x * dw.y - w.y * dw.x).abs() <= 1e-10 * w.norm() * dw.norm().max(1e-300)
    });
    let inputs = ClauseInputs {
        kind: system.class.kind(),
        lambda_is_one: system.class.is_r3_one(),
        larc: info.larc,
        delta_dim: info.delta_dim,
        gzero_dim: decomposition.gzero_dim,
        g0_is_aff: predicates.g0_is_aff,
        dstar_zero: predicates.dstar_zero,
        complex_pair: predicates.complex_pair,
        delta_is_aff: info.delta_is_aff,
        ker_in_delta,
        nil_part_invariant,
    };
    Analysis { info, predicates, decomposition, inputs }
}

/// Direction of Δ ∩ ({0} x R²) for a two-dimensional Δ not inside R².
fn nil_part(basis: &[AlgebraElement]) -> Option<Vec2> {
    if basis.len() != 2 {
        return None;
    }
    let (p, q) = if basis[0].a.abs() >= basis[1].a.abs() { (basis[0], basis[1]) } else { (basis[1], basis[0]) };
    if p.a == 0.0 {
        return None;
    }
    let w = q.w - p.w * (q.a / p.a);
    (w.norm() > 0.0).then_some(w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub controllable: bool,
    pub clause: Clause,
    pub explanation: String,
    pub certificate: Option<BarrierCertificate>,
    pub analysis: Analysis,
}

fn explain(clause: Clause, controllable: bool, a: &Analysis) -> String {
    let p = &a.inputs;
    let verdict = if controllable { "controllable" } else { "not controllable" };
    let why = match clause {
        Clause::LarcFail => "the smallest D-invariant subalgebra containing the controls is proper".to_string(),
        Clause::Dim3Trivial => "the controls generate all of g".to_string(),
        Clause::T1R3LambdaNilpotent | Clause::T2R3LambdaNilpotent => {
            "theta = I and D is nilpotent, so g = g0 and the ad-rank condition holds".to_string()
        }
        Clause::T2R3LambdaNonInvariant => {
            "theta = I and the nilradical control direction is not a D* eigenvector".to_string()
        }
        _ => format!(
            "dim delta = {}, dim g0 = {}, g0 aff = {}, delta aff = {}, D* zero = {}, complex pair = {}, ker D* in delta = {}",
            p.delta_dim, p.gzero_dim, p.g0_is_aff, p.delta_is_aff, p.dstar_zero, p.complex_pair, p.ker_in_delta
        ),
    };
    format!("{}: {} ({})", clause, verdict, why)
}

pub fn decide(system: &LinearSystem) -> Verdict {
    let analysis = analyze(system);
    let (controllable, clause) = clause_table(&analysis.inputs);
    let mut explanation = explain(clause, controllable, &analysis);
    let certificate = if !controllable && analysis.inputs.larc {
        let n = normalize(system);
        match certificate::find_certificate(system, &n) {
            Ok(c) => Some(c),
            Err(e) => {
                explanation.push_str(&format!("; {}", e));
                None
            }
        }
    } else {
        None
    };
    Verdict { controllable, clause, explanation, certificate, analysis }
}
