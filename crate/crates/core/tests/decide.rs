mod common;

use common::{Entry, Expect};
use lincontrol::algebra::{AlgebraElement, GroupClass, GroupKind, Mat2, Vec2};
use lincontrol::controllability::{barrier_certificate, clause_table, decide, CertificateKind, ClauseInputs};
use lincontrol::derivation::make_derivation;
use lincontrol::system::LinearSystem;
use lincontrol::Clause;

fn sys(class: GroupClass, dstar: Mat2, xi: Vec2, controls: &[[f64; 3]]) -> LinearSystem {
    let d = make_derivation(class, dstar, xi).unwrap();
    LinearSystem::new(class, d, controls.iter().map(|c| AlgebraElement::new(c[0], c[1], c[2])).collect()).unwrap()
}

const KINDS: [GroupKind; 7] = [
    GroupKind::R2Tilde,
    GroupKind::R2,
    GroupKind::R3,
    GroupKind::R3Lambda,
    GroupKind::R3PrimeLambda,
    GroupKind::ETilde,
    GroupKind::En,
];

fn family(k: GroupKind) -> &'static str {
    match k {
        GroupKind::R2Tilde => "R2Tilde",
        GroupKind::R2 => "R2",
        GroupKind::R3 => "R3",
        GroupKind::R3Lambda => "R3Lambda",
        GroupKind::R3PrimeLambda => "R3Prime",
        GroupKind::ETilde | GroupKind::En => "E",
    }
}

#[test]
fn clause_table_is_total() {
    let b = [false, true];
    let mut seen = std::collections::BTreeSet::new();
    let mut count = 0;
    for kind in KINDS {
        for lambda_is_one in b {
            for larc in b {
                for delta_dim in 1..=3 {
                    for gzero_dim in 1..=3 {
                        for bits in 0..64u32 {
                            let bit = |i: u32| bits >> i & 1 == 1;
                            let x = ClauseInputs {
                                kind,
                                lambda_is_one,
                                larc,
                                delta_dim,
                                gzero_dim,
                                g0_is_aff: bit(0),
                                dstar_zero: bit(1),
                                complex_pair: bit(2),
                                delta_is_aff: bit(3),
                                ker_in_delta: bit(4),
                                nil_part_invariant: bit(5),
                            };
                            let (ok, clause) = clause_table(&x);
                            count += 1;
                            seen.insert(clause.id());
                            if !larc {
                                assert_eq!((ok, clause), (false, Clause::LarcFail));
                            } else if delta_dim == 3 {
                                assert_eq!((ok, clause), (true, Clause::Dim3Trivial));
                            } else {
                                let id = clause.id();
                                let prefix = if delta_dim == 1 { "T1." } else { "T2." };
                                assert!(id.starts_with(prefix), "{:?} -> {}", x, id);
                                let fam = id[3..].split('.').next().unwrap();
                                assert_eq!(fam, family(kind), "{:?}", x);
                                if clause == Clause::T1R3Prime || clause == Clause::T2E || clause == Clause::T2R3Prime {
                                    assert!(ok);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    assert_eq!(count, 7 * 2 * 2 * 3 * 3 * 64);
    assert_eq!(seen.len(), Clause::ALL.len());
}

#[test]
fn documented_examples() {
    let e0 = [[1.0, 0.0, 0.0]];
    let v = decide(&sys(GroupClass::r3_prime(2.0).unwrap(), Mat2::identity(), Vec2::new(1.0, 0.0), &e0));
    assert!(v.controllable);
    assert_eq!(v.clause.id(), "T1.R3Prime");

    for c in [1.0, -0.5, 3.0] {
        let v = decide(&sys(GroupClass::r3_lambda(0.5).unwrap(), Mat2::new(1.0, 0.0, 0.0, 2.0) * c, Vec2::new(1.0, 1.0), &e0));
        assert!(!v.controllable, "scale {}", c);
        assert_eq!(v.clause.id(), "T1.R3Lambda");
    }

    let v = decide(&sys(GroupClass::e_n(1).unwrap(), Mat2::new(0.0, -1.0, 1.0, 0.0), Vec2::new(1.0, 0.0), &e0));
    assert!(v.controllable);
    assert_eq!(v.clause.id(), "T1.E");

    let v = decide(&sys(GroupClass::R3, Mat2::new(-1.0, 1.0, 0.0, -1.0), Vec2::new(1.0, 1.0), &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]));
    assert!(!v.controllable);
    assert_eq!(v.clause.id(), "T2.R3");

    let v = decide(&sys(GroupClass::ETILDE, Mat2::new(1.0, -1.0, 1.0, 1.0), Vec2::new(1.0, 0.0), &[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]));
    assert!(!v.controllable);
    assert_eq!(v.clause.id(), "LARC-FAIL");
    assert!(v.certificate.is_none());
}

#[test]
fn certificate_examples() {
    let e0 = [[1.0, 0.0, 0.0]];
    let c = barrier_certificate(&sys(GroupClass::r3_lambda(0.5).unwrap(), Mat2::new(1.0, 0.0, 0.0, -1.0), Vec2::new(1.0, 1.0), &e0)).unwrap();
    assert_eq!(c.kind, CertificateKind::HalfPlaneF);
    // line p2 = ξ2/λ, where the θ-weighted field component ℓ·(θp − ξ) vanishes
    assert_eq!(c.params.ell.map(|l| [l[0].abs(), l[1].abs()]), Some([0.0, 1.0]));
    assert!((c.level.abs() - 2.0).abs() < 1e-12);

    let c = barrier_certificate(&sys(GroupClass::ETILDE, Mat2::identity(), Vec2::new(1.0, 0.5), &e0)).unwrap();
    assert_eq!(c.kind, CertificateKind::ExpandingDisk);
    assert_eq!(c.direction, 1.0);
    assert_eq!((c.params.alpha, c.params.beta), (Some(1.0), Some(0.0)));

    let c = barrier_certificate(&sys(GroupClass::R2TILDE, Mat2::zeros(), Vec2::new(1.0, 1.0), &e0)).unwrap();
    assert_eq!(c.kind, CertificateKind::MonotoneCoordinate);

    assert!(barrier_certificate(&sys(GroupClass::r3_prime(1.0).unwrap(), Mat2::zeros(), Vec2::new(1.0, 0.0), &e0)).is_err());
}

#[test]
fn matrix_verdict_invariants() {
    for e in common::matrix() {
        let Ok(s) = e.system() else {
            assert_eq!(e.expect, Expect::Rejected, "{}", e.name);
            continue;
        };
        let v = decide(&s);
        let larc = v.analysis.info.larc;
        assert_eq!(v.certificate.is_some(), !v.controllable && larc, "{}", e.name);
        if !larc {
            assert_eq!(v.clause, Clause::LarcFail);
        }
        assert!(!v.explanation.is_empty());
    }
}

/// Covering R2Tilde -> R2: controllability on the cover forces it on the quotient.
#[test]
fn quotient_consistency_over_matrix() {
    let mut checked = 0;
    for e in common::matrix().into_iter().filter(|e| e.class == GroupClass::R2TILDE) {
        let q = Entry { class: GroupClass::R2, ..e.clone() };
        let (Ok(cover), Ok(quot)) = (e.system(), q.system()) else { continue };
        checked += 1;
        if decide(&cover).controllable {
            assert!(decide(&quot).controllable, "{}", e.name);
        }
    }
    assert!(checked >= 3);
}

#[test]
fn euclidean_verdict_ignores_n() {
    for e in common::matrix().into_iter().filter(|e| e.class.kind().is_euclidean()) {
        let base = decide(&e.system().unwrap());
        for class in [GroupClass::ETILDE, GroupClass::e_n(1).unwrap(), GroupClass::e_n(4).unwrap()] {
            let v = decide(&Entry { class, ..e.clone() }.system().unwrap());
            assert_eq!((v.controllable, v.clause), (base.controllable, base.clause), "{}", e.name);
        }
    }
}
