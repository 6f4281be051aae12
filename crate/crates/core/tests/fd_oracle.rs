mod common;

use std::f64::consts::PI;

use common::rel;
use ratiolab_core::fd::{self, MeshProblem};
use ratiolab_core::step_exact::exact_eigenvalues;
use ratiolab_core::{BoundaryKind, BoundarySpec, Coefficient, CoefficientSet, Density, FamilyKind};

fn uniform() -> CoefficientSet {
    CoefficientSet::string(Density::constant(1.0).unwrap())
}

#[test]
fn uniform_dirichlet_examples() {
    let ev = fd::oracle_eigenvalues(&uniform(), BoundarySpec::dirichlet(), 3, 4096).unwrap();
    let rich = fd::oracle_eigenvalues_richardson(&uniform(), BoundarySpec::dirichlet(), 3, 4096).unwrap();
    for n in 1..=3 {
        let exact = (n as f64 * PI).powi(2);
        assert!(rel(ev[n - 1], exact) < 1e-5);
        assert!(rel(rich[n - 1], exact) < 1e-8);
    }
}

#[test]
fn quarter_wave_on_half_interval() {
    let ev = fd::oracle_eigenvalues_richardson(&uniform(), BoundarySpec::hat(), 1, 2048).unwrap();
    assert!(rel(ev[0], PI * PI) < 1e-8);
    let ev = fd::oracle_eigenvalues_richardson(&uniform(), BoundarySpec::tilde(), 1, 2048).unwrap();
    assert!(rel(ev[0], PI * PI) < 1e-8);
}

#[test]
fn step_density_matches_transfer_matrix() {
    let rho = Density::step(vec![0.5], vec![4.0, 1.0]).unwrap();
    let exact = exact_eigenvalues(&rho, 4).unwrap();
    let ev = fd::oracle_eigenvalues(&CoefficientSet::string(rho), BoundarySpec::dirichlet(), 4, 8192).unwrap();
    for (a, b) in ev.iter().zip(&exact) {
        assert!(rel(*a, *b) < 1e-5);
    }
}

#[test]
fn second_order_convergence() {
    for n in 1..=3usize {
        let exact = (n as f64 * PI).powi(2);
        let e1 = fd::oracle_eigenvalues(&uniform(), BoundarySpec::dirichlet(), n, 512).unwrap()[n - 1] - exact;
        let e2 = fd::oracle_eigenvalues(&uniform(), BoundarySpec::dirichlet(), n, 1024).unwrap()[n - 1] - exact;
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.05, "n={n}: ratio {ratio}");
    }
}

#[test]
fn sturm_count_is_monotone() {
    let set = CoefficientSet {
        p: Density::family(FamilyKind::Linear, vec![1.0, 0.5]).unwrap(),
        q: Coefficient::family(FamilyKind::Sine, vec![1.0, 2.0, 1.0, 0.0]).unwrap(),
        rho: Density::step(vec![0.4], vec![2.0, 0.7]).unwrap(),
    };
    let mesh = MeshProblem::new(&set, BoundarySpec::dirichlet(), 256).unwrap();
    let mut last = 0;
    for i in 0..400 {
        let c = mesh.count_below(-50.0 + i as f64 * 5.0);
        assert!(c >= last);
        last = c;
    }
    assert!(last > 0);
}

#[test]
fn mesh_precondition_and_cap() {
    assert!(fd::oracle_eigenvalues(&uniform(), BoundarySpec::dirichlet(), 4, 32).is_err());
    assert!(fd::oracle_eigenvalues(&uniform(), BoundarySpec::dirichlet(), 0, 32).is_err());
    assert!(fd::oracle_eigenvalues(&uniform(), BoundarySpec::dirichlet(), 2, 32).is_ok());
}

#[test]
fn neumann_spectrum_of_uniform_half() {
    let b = BoundarySpec::new(BoundaryKind::NeumannNeumann, 0.0, 0.5).unwrap();
    let ev = fd::oracle_eigenvalues_richardson(&uniform(), b, 3, 2048).unwrap();
    assert!(ev[0].abs() < 1e-6);
    assert!(rel(ev[1], 4.0 * PI * PI) < 1e-8);
    assert!(rel(ev[2], 16.0 * PI * PI) < 1e-8);
}

#[test]
fn eigenvector_has_expected_sign_changes() {
    let mesh = MeshProblem::new(&uniform(), BoundarySpec::dirichlet(), 1024).unwrap();
    for k in 1..=4 {
        let v = mesh.eigenvector(k).unwrap();
        let zeros = fd::nodal_sign_changes(&mesh.nodes, &v);
        assert_eq!(zeros.len(), k - 1);
        for (i, z) in zeros.iter().enumerate() {
            assert!((z - (i + 1) as f64 / k as f64).abs() < 1e-6);
        }
    }
}
