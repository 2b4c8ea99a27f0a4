//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values. Run with
//! `cargo test -p malab-core --test acceptance -- --nocapture`.

use std::sync::Arc;
use std::time::Instant;

use malab_core::asymptotics::{
    abp_ratio, check_det_a, fit_decomposition, green_decay, hessian_eig_range, level_sets,
    quotient_scan, AnnulusSpec,
};
use malab_core::cell_corrector::{
    corrector_residual, normalize_periodic, separable_oracle, solve_corrector, CorrectorOptions,
};
use malab_core::density::{
    verify_assumptions, DensitySpec, PeriodicDensitySpec, RadialDensitySpec, TrigTerm,
};
use malab_core::field_core::{
    cofactor_divergence, hessian, BoxGrid, Grid, GridRef, LatticeVector, PeriodicGrid, ScalarField,
    SymMat,
};
use malab_core::ma_dirichlet::{
    boundary_from_profile, manufactured, newton_solve, BoundaryData, Provenance, QuadraticProfile,
    SolverOptions,
};
use malab_core::radial_oracle::{parabola_deviation, radial_u, theorem_sigma};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn box_grid(dim: usize, l: f64, m: usize) -> GridRef<f64> {
    Arc::new(Grid::Box(BoxGrid::new(dim, l, m).unwrap()))
}

fn periodic_grid(periods: &[f64], nodes: &[usize]) -> GridRef<f64> {
    Arc::new(Grid::Periodic(PeriodicGrid::new(periods, nodes).unwrap()))
}

#[test]
fn criterion_1_radial_exactness() {
    let t0 = Instant::now();
    let spec = RadialDensitySpec::<f64>::flat();
    let mut worst: f64 = 0.0;
    for n in 2..=6 {
        for k in 0..=40 {
            let r = k as f64 * 0.25;
            let u = radial_u(&spec, n, r).unwrap();
            worst = worst.max((u - 0.5 * r * r).abs());
        }
    }
    let elapsed = t0.elapsed();
    assert!(worst < 1e-10, "max deviation {worst}");
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?}");
    println!(
        "ACCEPTANCE 1 PASS — flat radial solutions: max |u - r^2/2| = {worst:.2e} over n in 2..=6, r <= 10 ({elapsed:?})"
    );
}

#[test]
fn criterion_2_sharpness_counterexample() {
    let t0 = Instant::now();
    let spec = RadialDensitySpec::<f64>::new(1.0, 2.0).unwrap();
    let radii = [1e3, 3e3, 1e4, 3e4, 6e4, 8e4, 1e5];
    let mut drifts = Vec::new();
    for n in [3usize, 5] {
        let dev = parabola_deviation(&spec, n, &radii).unwrap();
        let first = dev.series[0].1 / radii[0].ln();
        let last = dev.series.last().unwrap().1 / radii.last().unwrap().ln();
        let drift = ((first - last) / last).abs();
        assert!(drift < 0.10, "n = {n}: drift {drift}");
        drifts.push(drift);
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?}");
    println!(
        "ACCEPTANCE 2 PASS — counterexample grows like log r: (u - r^2/2 - c*)/log r drifts {:.2e} (n=3), {:.2e} (n=5) between r=1e3 and 1e5 ({elapsed:?})",
        drifts[0], drifts[1]
    );
}

#[test]
fn criterion_3_radial_decay_exponents() {
    let t0 = Instant::now();
    let radii: Vec<f64> = (0..=12)
        .map(|k| 300.0 * 10f64.powf(k as f64 / 4.0))
        .chain([7e5, 8.5e5, 1e6])
        .collect();

    let spec34 = RadialDensitySpec::<f64>::new(0.1, 4.0).unwrap();
    let dev34 = parabola_deviation(&spec34, 3, &radii).unwrap();
    let (slope34, _) = dev34.log_log_slope(3);
    assert!(
        (-1.15..=-0.85).contains(&slope34),
        "(n,beta)=(3,4) slope {slope34}"
    );

    let spec53 = RadialDensitySpec::<f64>::new(0.1, 3.0).unwrap();
    let dev53 = parabola_deviation(&spec53, 5, &radii).unwrap();
    let (slope53, _) = dev53.log_log_slope(3);
    assert!(
        (-1.15..=-0.85).contains(&slope53),
        "(n,beta)=(5,3) slope {slope53}"
    );
    let oracle53 = malab_core::radial_oracle::radial_sigma::<f64>(5, 3.0).unwrap();
    let theorem53 = theorem_sigma::<f64>(5, 3.0);
    let elapsed = t0.elapsed();
    println!(
        "ACCEPTANCE 3 PASS — radial decay: (3,4) slope {slope34:.3}; (5,3) slope {slope53:.3} matches the quadrature oracle min(beta-2, n-2) = {oracle53}; the classification statement gives sigma = {theorem53} for (5,3) — reported, not asserted ({elapsed:?})"
    );
}

#[test]
fn criterion_4_manufactured_dirichlet_convergence() {
    let t0 = Instant::now();
    let amp = 0.01;
    let opts = SolverOptions::default();
    let mut errors = Vec::new();
    for m in [65usize, 129] {
        let g = box_grid(2, 0.5, m);
        let ustar = manufactured::solution(amp);
        let f = ScalarField::from_fn(g.clone(), manufactured::density(amp)).unwrap();
        let bd = BoundaryData::from_fn(g.clone(), Provenance::Custom, ustar).unwrap();
        let (u, rep) = newton_solve(&f, &bd, None, &opts).unwrap();
        assert!(
            rep.newton_iterations <= 6,
            "newton {}",
            rep.newton_iterations
        );
        assert_eq!(rep.convexity_violations, 0);
        assert!(rep.amgm_min >= -10.0 * opts.tol, "amgm {}", rep.amgm_min);
        let mut worst: f64 = 0.0;
        for fi in 0..g.node_count() {
            let x = g.coords(&g.unflat(fi));
            worst = worst.max((u.values()[fi] - ustar(&x[..2])).abs());
        }
        errors.push(worst);
    }
    let ratio = errors[0] / errors[1];
    let elapsed = t0.elapsed();
    assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?}");
    println!(
        "ACCEPTANCE 4 PASS — manufactured solution: sup errors {:.3e} (m=65) / {:.3e} (m=129), ratio {ratio:.2} in [3.2, 4.8] ({elapsed:?})",
        errors[0], errors[1]
    );
}

#[test]
fn criterion_5_corrector_separable_oracle() {
    let t0 = Instant::now();
    let m = 128usize;
    let cases: Vec<(&str, Box<dyn Fn(f64) -> f64 + Sync>)> = vec![
        (
            "1+0.1cos(2pix)",
            Box::new(|x: f64| 1.0 + 0.1 * (2.0 * std::f64::consts::PI * x).cos()),
        ),
        (
            "1+0.05cos(4pix)",
            Box::new(|x: f64| 1.0 + 0.05 * (4.0 * std::f64::consts::PI * x).cos()),
        ),
        (
            "1+0.06cos(2pix)+0.03sin(4pix)",
            Box::new(|x: f64| {
                1.0 + 0.06 * (2.0 * std::f64::consts::PI * x).cos()
                    + 0.03 * (4.0 * std::f64::consts::PI * x).sin()
            }),
        ),
    ];
    let mut reported = Vec::new();
    for (name, gfun) in &cases {
        let grid = periodic_grid(&[1.0, 1.0], &[m, m]);
        let fp = ScalarField::from_fn(grid.clone(), |x| gfun(x[0])).unwrap();
        let c = solve_corrector(&fp, &CorrectorOptions::default()).unwrap();
        assert!(c.residual <= 1e-8, "{name}: residual {}", c.residual);
        assert!(c.mean.abs() <= 1e-12, "{name}: mean {}", c.mean);
        assert!(
            corrector_residual(&c.xi, &fp).unwrap() <= 1e-8,
            "{name}: residual recheck"
        );
        let oracle: Vec<f64> = separable_oracle(|x| gfun(x), m);
        let mut worst: f64 = 0.0;
        for f in 0..grid.node_count() {
            let idx = grid.unflat(f);
            worst = worst.max((c.xi.values()[f] - oracle[idx[0]]).abs());
        }
        assert!(worst < 1e-6, "{name}: oracle gap {worst}");
        reported.push(format!("{name}: {worst:.2e}"));
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?}");
    println!(
        "ACCEPTANCE 5 PASS — separable correctors match the double-quadrature oracle: {} ({elapsed:?})",
        reported.join("; ")
    );
}

/// The trig preset of the full pipeline: n = 3, periods 2, a cosine per
/// axis on f_p^{1/3}, decaying perturbation with declared beta = 3.
fn thm1_preset() -> (PeriodicDensitySpec<f64>, DensitySpec<f64>, f64) {
    let a = 0.04;
    let base = PeriodicDensitySpec::new(
        3,
        vec![2.0, 2.0, 2.0],
        vec![
            TrigTerm {
                k: vec![0, 0, 0],
                cos: 1.0,
                sin: 0.0,
            },
            TrigTerm {
                k: vec![1, 0, 0],
                cos: a,
                sin: 0.0,
            },
            TrigTerm {
                k: vec![0, 1, 0],
                cos: a,
                sin: 0.0,
            },
            TrigTerm {
                k: vec![0, 0, 1],
                cos: a,
                sin: 0.0,
            },
        ],
        4.0,
    )
    .unwrap();
    let (fp_norm, scale) = normalize_periodic(&base).unwrap();
    let spec = DensitySpec::with_extra_decay(fp_norm.clone(), 0.2, 3.0, 2.0, 10.0).unwrap();
    (fp_norm, spec, scale)
}

#[test]
fn criterion_6_theorem_pipeline_desk_scale() {
    let t0 = Instant::now();
    let (fp_norm, spec, scale) = thm1_preset();
    assert!((scale - 1.0072).abs() < 1e-6, "normalization scale {scale}");
    assert!((fp_norm.cell_average().unwrap() - 1.0).abs() < 1e-12);

    // stage 1: hypothesis verification
    let rep = verify_assumptions(&spec, 4096).unwrap();
    assert!(rep.pass, "assumption report failed: {rep:?}");

    // stage 2: corrector on a commensurate periodic grid
    let pgrid = periodic_grid(&[2.0, 2.0, 2.0], &[32, 32, 32]);
    let fp_field = fp_norm.sample_fp(pgrid.clone()).unwrap();
    let mut copts = CorrectorOptions::default();
    copts.tol = 2e-6;
    let xi = solve_corrector(&fp_field, &copts).unwrap();
    assert!(xi.mean.abs() <= 1e-12);

    // stage 3: nested box solves and analysis
    let lattice = vec![
        LatticeVector::new(&[1, 0, 0], &[2.0, 2.0, 2.0]).unwrap(),
        LatticeVector::new(&[0, 1, 0], &[2.0, 2.0, 2.0]).unwrap(),
        LatticeVector::new(&[0, 0, 1], &[2.0, 2.0, 2.0]).unwrap(),
    ];
    let opts = SolverOptions::default();
    let mut inner_residuals = Vec::new();
    let mut eig_ranges = Vec::new();
    let mut det_gaps = Vec::new();
    for l in [8.0f64, 16.0] {
        let g = box_grid(3, l, 65);
        let h = g.as_box().unwrap().spacing();
        let f = spec.sample(g.clone()).unwrap();
        let q = QuadraticProfile::isotropic(3, 1.0).unwrap();
        let bd = boundary_from_profile(g.clone(), &q, Some(&xi.xi)).unwrap();
        let (u, srep) = newton_solve(&f, &bd, None, &opts).unwrap();
        assert!(srep.final_residual <= opts.tol);
        assert_eq!(srep.convexity_violations, 0, "L={l}");
        assert!(
            srep.amgm_min >= -10.0 * opts.tol,
            "L={l} amgm {}",
            srep.amgm_min
        );

        let anns = vec![
            AnnulusSpec::new(&g, 0.20 * l, 0.30 * l).unwrap(),
            AnnulusSpec::new(&g, 0.30 * l, 0.45 * l).unwrap(),
            AnnulusSpec::new(&g, 0.45 * l, 0.65 * l).unwrap(),
            AnnulusSpec::new(&g, 0.75 * l, l - 4.0 * h).unwrap(),
        ];
        let fit = fit_decomposition(&u, &anns, &fp_norm, 2).unwrap();
        assert!(fit.a_spd, "L={l}: fitted A not SPD");
        let gap = check_det_a(&fit, &spec).unwrap().abs();
        assert!(gap <= 0.02, "L={l}: |det(A) - 1| = {gap}");
        det_gaps.push(gap);
        inner_residuals.push(fit.annulus_residuals[0].sup_residual);

        // second-quotient deviations over the inner half box
        let scan_anns = vec![
            AnnulusSpec::new(&g, 0.10 * l, 0.25 * l).unwrap(),
            AnnulusSpec::new(&g, 0.25 * l, 0.375 * l).unwrap(),
            AnnulusSpec::new(&g, 0.375 * l, 0.5 * l).unwrap(),
        ];
        let stats = quotient_scan(&u, &lattice, &scan_anns).unwrap();
        for s in &stats {
            assert!(
                s.sup_dev_from_one <= 0.5,
                "L={l}: quotient dev {}",
                s.sup_dev_from_one
            );
            assert!(s.min >= 0.0, "L={l}: convexity of quotients");
        }
        for w in stats.windows(2) {
            assert!(
                w[1].sup_dev_from_one <= 1.2 * w[0].sup_dev_from_one,
                "L={l}: quotient deviations not non-increasing (20% slack): {} -> {}",
                w[0].sup_dev_from_one,
                w[1].sup_dev_from_one
            );
        }

        let range = hessian_eig_range(&u, 0.5 * l).unwrap();
        eig_ranges.push(range);
    }

    // boundary-layer shrinkage: inner-annulus residual improves with L
    let ratio = inner_residuals[0] / inner_residuals[1];
    assert!(
        ratio >= 1.5,
        "inner-annulus residuals {:.3e} (L=8) vs {:.3e} (L=16): factor {ratio:.2} < 1.5",
        inner_residuals[0],
        inner_residuals[1]
    );

    // uniform-ellipticity proxy: a single interval holds both boxes
    let (c1, c2) = (0.8, 1.4);
    for (k, (lo, hi)) in eig_ranges.iter().enumerate() {
        assert!(
            *lo >= c1 && *hi <= c2,
            "eig range {k}: [{lo}, {hi}] escapes [{c1}, {c2}]"
        );
    }

    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 900.0, "runtime {elapsed:?}");
    println!(
        "ACCEPTANCE 6 PASS — pipeline n=3, L in {{8,16}}, m=65: det(A) gaps {:.2e}/{:.2e}; inner-annulus residual factor {ratio:.2} >= 1.5; Hessian eigenvalues within [{c1}, {c2}] for both boxes ({elapsed:?})",
        det_gaps[0], det_gaps[1]
    );
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SymMat<f64> {
    // rotation from random Givens angles applied to a random diagonal
    let mut diag = vec![0.0; n];
    for d in diag.iter_mut() {
        *d = rng.gen_range(0.1..10.0);
    }
    let mut m = SymMat::diag(&diag);
    let pairs: &[(usize, usize)] = if n == 2 {
        &[(0, 1)]
    } else {
        &[(0, 1), (0, 2), (1, 2)]
    };
    for &(p, q) in pairs {
        let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let (c, s) = (th.cos(), th.sin());
        // m <- G^T m G with G the rotation in the (p, q) plane
        let mut g = [[0.0f64; 3]; 3];
        for i in 0..n {
            g[i][i] = 1.0;
        }
        g[p][p] = c;
        g[q][q] = c;
        g[p][q] = -s;
        g[q][p] = s;
        let mut dense = [[0.0f64; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                dense[i][j] = m.get(i, j);
            }
        }
        let mut tmp = [[0.0f64; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += dense[i][k] * g[k][j];
                }
                tmp[i][j] = acc;
            }
        }
        let mut out = [[0.0f64; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += g[k][i] * tmp[k][j];
                }
                out[i][j] = acc;
            }
        }
        for i in 0..n {
            for j in i..n {
                m.set(i, j, out[i][j]);
            }
        }
    }
    m
}

#[test]
fn criterion_7_invariant_suites() {
    let t0 = Instant::now();
    // det^{1/n} concavity on 1000 random SPD pairs
    let mut rng = ChaCha8Rng::seed_from_u64(0x4d41_4c41_422d_3743);
    let mut violations = 0usize;
    for k in 0..1000 {
        let n = if k % 2 == 0 { 2 } else { 3 };
        let a = random_spd(&mut rng, n);
        let b = random_spd(&mut rng, n);
        let mid = a.add(&b).scale(0.5);
        let lhs = mid.detroot().unwrap();
        let rhs = 0.5 * a.detroot().unwrap() + 0.5 * b.detroot().unwrap();
        if lhs < rhs - 1e-12 {
            violations += 1;
        }
    }
    assert_eq!(violations, 0, "concavity violations");

    // cofactor-divergence O(h^2) ratio
    let sup_for = |m: usize| {
        let g = box_grid(2, 0.5, m);
        let u = ScalarField::from_fn(g, |x| {
            0.5 * (x[0] * x[0] + x[1] * x[1])
                + 0.01
                    * (2.0 * std::f64::consts::PI * x[0]).sin()
                    * (2.0 * std::f64::consts::PI * x[1]).sin()
        })
        .unwrap();
        cofactor_divergence(&u).unwrap().sup_abs()
    };
    let cof_ratio = sup_for(33) / sup_for(65);
    assert!(
        (3.2..=4.8).contains(&cof_ratio),
        "cofactor ratio {cof_ratio}"
    );

    // comparison principle on the (f2 = 1, f1 = 1.1) pair
    let g = box_grid(2, 1.0, 65);
    let q = QuadraticProfile::isotropic(2, 1.0).unwrap();
    let bd = boundary_from_profile(g.clone(), &q, None).unwrap();
    let opts = SolverOptions::default();
    let one = ScalarField::from_fn(g.clone(), |_| 1.0).unwrap();
    let one_one = ScalarField::from_fn(g.clone(), |_| 1.1).unwrap();
    let (u2, rep2) = newton_solve(&one, &bd, None, &opts).unwrap();
    let (u1, rep1) = newton_solve(&one_one, &bd, None, &opts).unwrap();
    let slack = 2.0 * opts.tol;
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    for (a, b) in u1.values().iter().zip(u2.values()) {
        worst_gap = worst_gap.max(a - b);
    }
    assert!(worst_gap <= slack, "comparison principle gap {worst_gap}");

    // AM-GM diagnostic holds on every converged solve of this suite
    for rep in [&rep1, &rep2] {
        assert!(rep.amgm_min >= -10.0 * opts.tol, "amgm {}", rep.amgm_min);
    }

    let elapsed = t0.elapsed();
    println!(
        "ACCEPTANCE 7 PASS — invariants: 0/1000 concavity violations; cofactor-divergence ratio {cof_ratio:.2}; comparison-principle gap {worst_gap:.2e} <= 2 tol; AM-GM margin held ({elapsed:?})"
    );
}

#[test]
fn criterion_8_green_function_decay() {
    let t0 = Instant::now();
    // identity coefficients on a 48^3 grid
    let g = box_grid(3, 1.0, 48);
    let u = ScalarField::from_fn(g.clone(), |x| {
        0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    })
    .unwrap();
    let ident = green_decay(&u, &[24, 24, 24]).unwrap();
    assert!(
        (-1.15..=-0.85).contains(&ident.slope),
        "identity slope {}",
        ident.slope
    );

    // coefficients from a converged solve (radially perturbed density)
    let gs = box_grid(3, 8.0, 48);
    let base = PeriodicDensitySpec::constant(3, 1.0).unwrap();
    let spec = DensitySpec::new(base, 0.3, 3.0, None, 16.0).unwrap();
    let f = spec.sample(gs.clone()).unwrap();
    let q = QuadraticProfile::isotropic(3, 1.0).unwrap();
    let bd = boundary_from_profile(gs.clone(), &q, None).unwrap();
    let (us, rep) = newton_solve(&f, &bd, None, &SolverOptions::default()).unwrap();
    assert_eq!(rep.convexity_violations, 0);
    let solved = green_decay(&us, &[24, 24, 24]).unwrap();
    assert!(
        (-1.3..=-0.7).contains(&solved.slope),
        "solver-coefficient slope {}",
        solved.slope
    );
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "runtime {elapsed:?}");
    println!(
        "ACCEPTANCE 8 PASS — Green decay on 48^3: identity slope {:.3} in [-1.15, -0.85]; solver-coefficient slope {:.3} in [-1.3, -0.7] ({elapsed:?})",
        ident.slope, solved.slope
    );
}

#[test]
fn criterion_9_level_set_geometry() {
    let t0 = Instant::now();
    // flat case from a converged solve
    let g = box_grid(2, 8.0, 65);
    let q = QuadraticProfile::isotropic(2, 1.0).unwrap();
    let bd = boundary_from_profile(g.clone(), &q, None).unwrap();
    let one = ScalarField::from_fn(g.clone(), |_| 1.0).unwrap();
    let opts = SolverOptions::default();
    let (u, _) = newton_solve(&one, &bd, None, &opts).unwrap();
    let m_values = [2.0, 4.0, 8.0, 16.0];
    let report = level_sets(&u, &m_values).unwrap();
    let h = g.as_box().unwrap().spacing();
    let counting = 2.0 * h / (2.0 * m_values[0]).sqrt();
    let flat_exp = report.growth_exponent;
    assert!(
        (flat_exp - 1.0).abs() <= counting,
        "flat growth exponent {flat_exp} vs 1 +- {counting}"
    );

    // anisotropic density: separable periodic f_p with its corrector
    let pg = periodic_grid(&[1.0, 1.0], &[32, 32]);
    let base = PeriodicDensitySpec::new(
        2,
        vec![1.0, 1.0],
        vec![
            TrigTerm {
                k: vec![0, 0],
                cos: 1.0,
                sin: 0.0,
            },
            TrigTerm {
                k: vec![1, 0],
                cos: 0.1,
                sin: 0.0,
            },
        ],
        4.0,
    )
    .unwrap();
    let (fp_norm, _) = normalize_periodic(&base).unwrap();
    let fp_field = fp_norm.sample_fp(pg).unwrap();
    let xi = solve_corrector(&fp_field, &CorrectorOptions::default()).unwrap();
    let fa = ScalarField::from_fn(g.clone(), |x| fp_norm.eval(x)).unwrap();
    let bda = boundary_from_profile(g.clone(), &q, Some(&xi.xi)).unwrap();
    let (ua, repa) = newton_solve(&fa, &bda, None, &opts).unwrap();
    assert_eq!(repa.convexity_violations, 0);
    // subtract the fitted affine part before taking level sets
    let anns = vec![
        AnnulusSpec::new(&g, 1.0, 3.0).unwrap(),
        AnnulusSpec::new(&g, 3.0, 5.0).unwrap(),
        AnnulusSpec::new(&g, 5.0, 7.0).unwrap(),
    ];
    let fit = fit_decomposition(&ua, &anns, &fp_norm, 2).unwrap();
    let mut vals = ua.values().to_vec();
    for fidx in 0..g.node_count() {
        let x = g.coords(&g.unflat(fidx));
        vals[fidx] -= fit.b[0] * x[0] + fit.b[1] * x[1] + fit.c;
    }
    let ua = ScalarField::from_values(g.clone(), vals).unwrap();
    let report_a = level_sets(&ua, &m_values).unwrap();
    let aniso_exp = report_a.growth_exponent;
    assert!(
        (aniso_exp - 1.0).abs() <= 0.1,
        "anisotropic growth exponent {aniso_exp}"
    );
    let elapsed = t0.elapsed();
    println!(
        "ACCEPTANCE 9 PASS — level sets: flat growth exponent {flat_exp:.3} (counting tolerance {counting:.3}), anisotropic {aniso_exp:.3} within 10% of n/2 ({elapsed:?})"
    );
}

// Cross-check used by the analysis examples: the ABP ratio baseline is
// covered by unit tests; here we only keep the suite self-contained by
// touching the diagnostic once on solver output.
#[test]
fn abp_ratio_on_solver_coefficients() {
    let g = box_grid(2, 1.0, 33);
    let amp = 0.01;
    let f = ScalarField::from_fn(g.clone(), manufactured::density(amp)).unwrap();
    let bd =
        BoundaryData::from_fn(g.clone(), Provenance::Custom, manufactured::solution(amp)).unwrap();
    let (u, _) = newton_solve(&f, &bd, None, &SolverOptions::default()).unwrap();
    let a = hessian(&u).unwrap();
    let one = ScalarField::from_fn(g.clone(), |_| 1.0).unwrap();
    let ratio = abp_ratio(&a, &one).unwrap();
    assert!(ratio > 0.0 && ratio < 1.0, "abp ratio {ratio}");
}
