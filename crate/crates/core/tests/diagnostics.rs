//! Cross-module diagnostics: decomposition fits against radial ground
//! truth, and the Dirichlet solver validated against the radial oracle.

use std::sync::Arc;

use malab_core::asymptotics::{fit_decomposition, AnnulusSpec};
use malab_core::density::{sample_radial_on_box, PeriodicDensitySpec, RadialDensitySpec};
use malab_core::field_core::{BoxGrid, Grid, GridRef};
use malab_core::ma_dirichlet::{newton_solve, BoundaryData, Provenance, SolverOptions};
use malab_core::radial_oracle::RadialSolution;

fn box_grid(dim: usize, l: f64, m: usize) -> GridRef<f64> {
    Arc::new(Grid::Box(BoxGrid::new(dim, l, m).unwrap()))
}

/// Sampling the (n = 3, beta = 4) radial solution on a large box and
/// fitting the decomposition recovers the decay exponent near 1. The fit
/// annulus must sit far outside the sigma-annuli, otherwise the fitted
/// constant absorbs the local remainder and biases the slope.
#[test]
fn fit_sigma_matches_radial_oracle() {
    let spec = RadialDensitySpec::<f64>::new(0.1, 4.0).unwrap();
    let l = 512.0;
    let g = box_grid(3, l, 257);
    let corner = l * 3.0f64.sqrt();
    let sol = RadialSolution::new(spec, 3, corner + 1.0).unwrap();
    let u = sol.sample_on_box(g.clone()).unwrap();
    let anns = vec![
        AnnulusSpec::new(&g, 11.0, 17.0).unwrap(),
        AnnulusSpec::new(&g, 22.0, 34.0).unwrap(),
        AnnulusSpec::new(&g, 44.0, 68.0).unwrap(),
        AnnulusSpec::new(&g, 420.0, 505.0).unwrap(),
    ];
    let fp = PeriodicDensitySpec::constant(3, 1.0).unwrap();
    let fit = fit_decomposition(&u, &anns, &fp, 0).unwrap();
    assert!(fit.a_spd);
    assert!((fit.a.get(0, 0) - 1.0).abs() < 1e-3);
    assert!(
        (0.85..=1.15).contains(&fit.sigma_hat),
        "sigma_hat {} (stderr {})",
        fit.sigma_hat,
        fit.sigma_stderr
    );
}

/// Box solve with boundary data taken from the radial oracle reproduces
/// the oracle in the interior at discretization accuracy.
#[test]
fn solver_matches_radial_oracle_interior() {
    let spec = RadialDensitySpec::<f64>::new(0.25, 3.0).unwrap();
    let n = 3;
    let l = 4.0;
    let g = box_grid(n, l, 33);
    let corner = l * 3.0f64.sqrt();
    let sol = RadialSolution::new(spec.clone(), n, corner + 1.0).unwrap();
    let f = sample_radial_on_box(&spec, g.clone()).unwrap();
    let bd = BoundaryData::from_fn(g.clone(), Provenance::RadialOracle, |x| {
        let r = x.iter().fold(0.0f64, |acc, &v| acc + v * v).sqrt();
        sol.u_from_table(r)
    })
    .unwrap();
    let (u, rep) = newton_solve(&f, &bd, None, &SolverOptions::default()).unwrap();
    assert_eq!(rep.convexity_violations, 0);
    let mut worst: f64 = 0.0;
    for fi in 0..g.node_count() {
        let x = g.coords(&g.unflat(fi));
        let r = x.iter().fold(0.0f64, |acc, &v| acc + v * v).sqrt();
        worst = worst.max((u.values()[fi] - sol.u_from_table(r)).abs());
    }
    // h = 0.25: second-order accuracy leaves ~1e-3 against the continuum
    assert!(worst < 5e-3, "sup gap to the radial oracle {worst}");
}
