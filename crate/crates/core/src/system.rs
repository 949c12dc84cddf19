//! Linear control systems Σ = (X, Δ): closure of the control distribution, LARC,
//! ad-rank, and normalization to the canonical control shapes.

use crate::algebra::{bracket, AlgebraElement, GroupClass, Vec2};
use crate::derivation::{apply_derivation, Derivation, BRACKET_TOL};
use nalgebra::{DMatrix, Vector3};
use thiserror::Error;

/// Singular values below RANK_TOL * σ_max count as zero.
pub const RANK_TOL: f64 = 1e-10;
const MAX_ROUNDS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("control list is empty")]
    EmptyControls,
    #[error("derivation class {deriv} differs from system class {system}")]
    ClassMismatch { system: GroupClass, deriv: GroupClass },
    #[error("non-finite control vector")]
    NonFinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub class: GroupClass,
    pub deriv: Derivation,
    pub controls: Vec<AlgebraElement>,
}

impl LinearSystem {
    pub fn new(class: GroupClass, deriv: Derivation, controls: Vec<AlgebraElement>) -> Result<Self, SystemError> {
        if controls.is_empty() {
            return Err(SystemError::EmptyControls);
        }
        if deriv.class != class {
            return Err(SystemError::ClassMismatch { system: class, deriv: deriv.class });
        }
        if controls.iter().any(|c| !c.to_vec3().iter().all(|x| x.is_finite())) {
            return Err(SystemError::NonFinite);
        }
        Ok(LinearSystem { class, deriv, controls })
    }
}

/// Orthonormal basis of span(vectors), rank decided by relative singular values.
pub fn span_basis(vectors: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let big = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    // roundoff-sized columns would become spurious unit directions below
    let nz: Vec<&Vector3<f64>> = vectors.iter().filter(|v| v.norm() > RANK_TOL * big).collect();
    if nz.is_empty() || big == 0.0 {
        return Vec::new();
    }
    // unit columns so that one large generator does not mask the others
    let m = DMatrix::from_fn(3, nz.len(), |i, j| nz[j][i] / nz[j].norm());
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let smax = svd.singular_values.max();
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    idx.into_iter()
        .filter(|&i| svd.singular_values[i] > RANK_TOL * smax)
        .map(|i| Vector3::new(u[(0, i)], u[(1, i)], u[(2, i)]))
        .collect()
}

pub fn rank(vectors: &[Vector3<f64>]) -> usize {
    span_basis(vectors).len()
}

fn to3(xs: &[AlgebraElement]) -> Vec<Vector3<f64>> {
    xs.iter().map(|x| x.to_vec3()).collect()
}

fn from3(xs: &[Vector3<f64>]) -> Vec<AlgebraElement> {
    xs.iter().map(AlgebraElement::from_vec3).collect()
}

/// Whether x lies in span(basis) (basis orthonormal).
pub fn in_span(basis: &[AlgebraElement], x: &AlgebraElement) -> bool {
    let mut v = to3(basis);
    v.push(x.to_vec3());
    rank(&v) == basis.len()
}

fn close(class: GroupClass, start: &[AlgebraElement], deriv: Option<&Derivation>) -> Vec<AlgebraElement> {
    let mut basis = span_basis(&to3(start));
    for _ in 0..MAX_ROUNDS {
        let b = from3(&basis);
        let mut gen = to3(&b);
        for i in 0..b.len() {
            for j in (i + 1)..b.len() {
                gen.push(bracket(class, &b[i], &b[j]).to_vec3());
            }
            if let Some(d) = deriv {
                gen.push(apply_derivation(d, &b[i]).to_vec3());
            }
        }
        let next = span_basis(&gen);
        if next.len() == basis.len() {
            break;
        }
        basis = next;
    }
    from3(&basis)
}

/// Lie subalgebra generated by the vectors: orthonormal basis.
pub fn generated_subalgebra(class: GroupClass, vectors: &[AlgebraElement]) -> Vec<AlgebraElement> {
    close(class, vectors, None)
}

/// Smallest D-invariant subalgebra containing the controls.
pub fn larc_closure(system: &LinearSystem) -> Vec<AlgebraElement> {
    close(system.class, &system.controls, Some(&system.deriv))
}

pub fn larc(system: &LinearSystem) -> bool {
    larc_closure(system).len() == 3
}

/// span{D^k Y : Y in Δ, k = 0, 1, 2} has dimension 3, with Δ the generated subalgebra.
pub fn ad_rank(system: &LinearSystem) -> bool {
    let delta = generated_subalgebra(system.class, &system.controls);
    let mut gen = Vec::new();
    for y in delta {
        let dy = apply_derivation(&system.deriv, &y);
        let ddy = apply_derivation(&system.deriv, &dy);
        gen.extend([y.to_vec3(), dy.to_vec3(), ddy.to_vec3()]);
    }
    rank(&gen) == 3
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionInfo {
    pub delta_basis: Vec<AlgebraElement>,
    pub delta_dim: usize,
    pub delta_is_aff: bool,
    pub larc: bool,
    pub ad_rank: bool,
}

pub fn distribution_info(system: &LinearSystem) -> DistributionInfo {
    let delta_basis = generated_subalgebra(system.class, &system.controls);
    let delta_dim = delta_basis.len();
    let delta_is_aff = delta_dim == 2 && bracket(system.class, &delta_basis[0], &delta_basis[1]).norm() > BRACKET_TOL;
    DistributionInfo { delta_dim, delta_is_aff, larc: larc(system), ad_rank: ad_rank(system), delta_basis }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub system: LinearSystem,
    /// ψ(t, v) = (t, v − Λ_t v0) maps the input system to `system`.
    pub offset: Vec2,
    /// False when LARC fails and the input was returned unchanged.
    pub larc: bool,
}

/// Conjugate by ψ(t,v) = (t, v − Λ_t v0) so that Δ takes the shape {(1,0)} or {(1,0),(0,w)}.
pub fn normalize(system: &LinearSystem) -> Normalized {
    let info = distribution_info(system);
    if !info.larc || info.delta_dim == 3 {
        return Normalized { system: system.clone(), offset: Vec2::zeros(), larc: info.larc };
    }
    let p = system
        .controls
        .iter()
        .max_by(|x, y| x.a.abs().total_cmp(&y.a.abs()))
        .expect("nonempty controls");
    let v0 = p.w / p.a;
    let mut controls = vec![AlgebraElement::new(1.0, 0.0, 0.0)];
    if info.delta_dim == 2 {
        let w = system
            .controls
            .iter()
            .map(|q| q.w - v0 * q.a)
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .expect("nonempty controls");
        controls.push(AlgebraElement { a: 0.0, w });
    }
    let d = &system.deriv;
    let deriv = Derivation { class: d.class, dstar: d.dstar, xi: d.xi + d.dstar * v0 };
    Normalized {
        system: LinearSystem { class: system.class, deriv, controls },
        offset: v0,
        larc: true,
    }
}
