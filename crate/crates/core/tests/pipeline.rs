//! End-to-end checks of solver, recovery and estimators against independent
//! quadrature oracles.

use std::f64::consts::PI;
use std::sync::Arc;

use majorant_core::experiment::calibrate_case;
use majorant_core::fem::{
    assemble, integrate, integrate_elementwise, solve, Diffusion, FeScalarField, FeVectorField, ProblemSpec,
};
use majorant_core::majorants::{
    calibrate_c_dag, majorant_aubin, majorant_churilova, majorant_line_integral, majorant_repin_frolov,
    majorant_robust, robust_from_terms, sigma_star, CalibrationRun, Eps, MajorantInput, SigmaStarPolicy, Terms,
};
use majorant_core::mesh::{barycentric, build_uniform_mesh, Mesh, Rectangle};
use majorant_core::recovery::{divergence, recover_flux, RecoveryConfig};
use majorant_core::verification::{
    convergence_rate, discrete_lambda1, manufactured, solve_case, true_error, SolveOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(n: usize) -> Arc<Mesh> {
    Arc::new(build_uniform_mesh(n, Rectangle::unit_square()).unwrap())
}

fn friedrichs(p: &ProblemSpec) -> f64 {
    sigma_star(&SigmaStarPolicy::friedrichs_for(p), None, p, None).unwrap()
}

#[test]
fn quadrature_exact_for_monomials() {
    // on the unit square ∫ x^a y^b = 1/((a+1)(b+1)); exact per triangle up to degree q
    let mesh = build_uniform_mesh(1, Rectangle::unit_square()).unwrap();
    for q in 1..=7 {
        for a in 0..=q {
            for b in 0..=(q - a) {
                let v = integrate(|x| x[0].powi(a as i32) * x[1].powi(b as i32), &mesh, q).unwrap();
                let exact = 1.0 / ((a + 1) as f64 * (b + 1) as f64);
                assert!((v - exact).abs() < 1e-14, "q={q} a={a} b={b}: {v} vs {exact}");
            }
        }
    }
}

#[test]
fn energy_error_rate_sinsin() {
    let case = manufactured("sinsin", 0.0).unwrap();
    let pairs: Vec<(f64, f64)> = [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let s = solve_case(&case, n, SolveOptions::default()).unwrap();
            (s.mesh.h(), s.error.energy)
        })
        .collect();
    let slope = convergence_rate(&pairs).unwrap();
    assert!((0.85..=1.15).contains(&slope), "slope {slope}");
}

#[test]
fn interpolant_error_rate() {
    let case = manufactured("sinsin", 0.0).unwrap();
    let pairs: Vec<(f64, f64)> = [8, 16, 32]
        .iter()
        .map(|&n| {
            let mesh = unit(n);
            let e = true_error(&case, &FeScalarField::interpolate(mesh.clone(), |x| (case.u)(x))).unwrap();
            assert!(e.energy > 0.0);
            (mesh.h(), e.energy)
        })
        .collect();
    let slope = convergence_rate(&pairs).unwrap();
    assert!((0.9..=1.1).contains(&slope), "slope {slope}");
}

#[test]
fn zero_solution_case() {
    let mut case = manufactured("sinsin", 0.0).unwrap();
    case.u = Arc::new(|_| 0.0);
    case.grad_u = Arc::new(|_| [0.0, 0.0]);
    case.problem.source = Arc::new(|_| 0.0);
    let s = solve_case(&case, 8, SolveOptions::default()).unwrap();
    assert_eq!((s.error.energy, s.error.l2), (0.0, 0.0));
}

#[test]
fn aniso_source_satisfies_weak_form() {
    let case = manufactured("aniso", 0.0).unwrap();
    let mesh = unit(32);
    let a = case.problem.diffusion;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let vals: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi = FeScalarField::interpolate(mesh.clone(), |x| {
            let n = mesh.subdivisions();
            let i = (x[0] * n as f64).round() as usize;
            let j = (x[1] * n as f64).round() as usize;
            vals[j * (n + 1) + i]
        });
        let lhs = integrate_elementwise(&mesh, 7, |t, _, x| {
            let g = a.apply((case.grad_u)(x));
            let gp = phi.gradient_on(t);
            g[0] * gp[0] + g[1] * gp[1]
        })
        .unwrap();
        let rhs = integrate_elementwise(&mesh, 7, |t, b, x| case.problem.f(x) * phi.value(t, b)).unwrap();
        assert!((lhs - rhs).abs() <= 1e-8, "{lhs} vs {rhs}");
    }
}

#[test]
fn energy_non_increasing_in_sigma() {
    let base = manufactured("sinsin", 0.0).unwrap().problem;
    let mesh = unit(16);
    let mut last = f64::INFINITY;
    for sigma in [0.0, 0.5, 1.0, 10.0, 100.0, 1e4, 1e6] {
        let p = base.with_sigma(sigma).unwrap();
        let u = solve(&assemble(&mesh, &p).unwrap(), 1e-12).unwrap();
        let energy = integrate_elementwise(&mesh, 2, |t, _, _| p.diffusion.energy(u.gradient_on(t))).unwrap();
        assert!(energy <= last * (1.0 + 1e-12), "sigma={sigma}");
        last = energy;
    }
}

#[test]
fn recovered_flux_converges() {
    let case = manufactured("sinsin", 0.0).unwrap();
    let pairs: Vec<(f64, f64)> = [8, 16, 32]
        .iter()
        .map(|&n| {
            let s = solve_case(&case, n, SolveOptions::default()).unwrap();
            let err = integrate_elementwise(&s.mesh, 6, |t, b, x| {
                let g = (case.grad_u)(x);
                let z = s.flux.value(t, b);
                (g[0] + z[0]).powi(2) + (g[1] + z[1]).powi(2)
            })
            .unwrap()
            .sqrt();
            (s.mesh.h(), err)
        })
        .collect();
    let slope = convergence_rate(&pairs).unwrap();
    assert!(slope >= 0.9, "slope {slope}");
}

#[test]
fn recovered_divergence_residual_stays_bounded() {
    // ‖Δu + div z̃‖ over the mesh family: bounded, no rate asserted
    let case = manufactured("sinsin", 0.0).unwrap();
    let values: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let s = solve_case(&case, n, SolveOptions::default()).unwrap();
            let div = divergence(&s.flux);
            integrate_elementwise(&s.mesh, 6, |t, _, x| (-case.problem.f(x) + div[t]).powi(2)).unwrap().sqrt()
        })
        .collect();
    assert!(values.iter().all(|v| v.is_finite()));
    assert!(values.iter().all(|v| *v <= 10.0 * values[0]), "{values:?}");
}

#[test]
fn divergence_theorem_on_recovered_flux() {
    let case = manufactured("aniso", 1.0).unwrap();
    let s = solve_case(&case, 12, SolveOptions::default()).unwrap();
    let mesh = &s.mesh;
    let div = divergence(&s.flux);
    let volume: f64 = (0..mesh.num_triangles()).map(|t| mesh.element_geometry(t).unwrap().area * div[t]).sum();
    // boundary edges: z̃ is linear along each edge, trapezoid rule is exact
    let n = mesh.subdivisions();
    let stride = n + 1;
    let node = |i: usize, j: usize| j * stride + i;
    let mut boundary = 0.0;
    for k in 0..n {
        let edges = [
            (node(k, 0), node(k + 1, 0), [0.0, -1.0]),
            (node(k, n), node(k + 1, n), [0.0, 1.0]),
            (node(0, k), node(0, k + 1), [-1.0, 0.0]),
            (node(n, k), node(n, k + 1), [1.0, 0.0]),
        ];
        for (a, b, nu) in edges {
            let pa = mesh.nodes()[a];
            let pb = mesh.nodes()[b];
            let len = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
            let za = s.flux.node_value(a);
            let zb = s.flux.node_value(b);
            boundary += 0.5 * len * ((za[0] + zb[0]) * nu[0] + (za[1] + zb[1]) * nu[1]);
        }
    }
    assert!((volume - boundary).abs() < 1e-10, "{volume} vs {boundary}");
}

#[test]
fn robust_vanishes_on_exact_data() {
    let case = manufactured("aniso", 2.0).unwrap();
    let mesh = unit(8);
    let v = case.exact_solution();
    let z = case.exact_flux();
    let input = MajorantInput::new(&mesh, &v, &z, &case.problem);
    let r = majorant_robust(&input, friedrichs(&case.problem)).unwrap();
    assert_eq!((r.flux_term, r.residual_term, r.total), (0.0, 0.0, 0.0));
    let c1 = manufactured("sinsin", 1.0).unwrap();
    let (v1, z1) = (c1.exact_solution(), c1.exact_flux());
    let a1 = majorant_aubin(&MajorantInput::new(&mesh, &v1, &z1, &c1.problem)).unwrap();
    assert_eq!(a1.total, 0.0);
}

#[test]
fn robust_equals_aubin_above_sigma_star() {
    let case = manufactured("sinsin", 50.0).unwrap();
    let s = solve_case(&case, 16, SolveOptions::default()).unwrap();
    let input = MajorantInput::new(&s.mesh, &s.u_fem, &s.flux, &case.problem);
    let star = friedrichs(&case.problem);
    assert!(50.0 > star);
    let r = majorant_robust(&input, star).unwrap();
    let a = majorant_aubin(&input).unwrap();
    assert_eq!(r.total, a.total);
    assert_eq!((r.flux_term, r.residual_term), (a.flux_term, a.residual_term));
}

#[test]
fn guaranteed_bound_on_manufactured_run() {
    let case = manufactured("sinsin", 0.0).unwrap();
    let s = solve_case(&case, 32, SolveOptions::default()).unwrap();
    let input = MajorantInput::new(&s.mesh, &s.u_fem, &s.flux, &case.problem);
    let r = majorant_robust(&input, friedrichs(&case.problem)).unwrap();
    assert!(r.total >= s.error.energy.powi(2));
}

#[test]
fn aubin_blows_up_for_tiny_sigma() {
    let case = manufactured("sinsin", 1e-8).unwrap();
    let s = solve_case(&case, 32, SolveOptions::default()).unwrap();
    let input = MajorantInput::new(&s.mesh, &s.u_fem, &s.flux, &case.problem);
    let r = majorant_robust(&input, friedrichs(&case.problem)).unwrap();
    let a = majorant_aubin(&input).unwrap();
    assert!(a.total >= 100.0 * r.total, "{} vs {}", a.total, r.total);
}

#[test]
fn robust_total_non_increasing_in_sigma_star() {
    let case = manufactured("bubble", 1.0).unwrap();
    let s = solve_case(&case, 16, SolveOptions::default()).unwrap();
    let terms = MajorantInput::new(&s.mesh, &s.u_fem, &s.flux, &case.problem).terms().unwrap();
    let mut last = f64::INFINITY;
    for star in [1.5, 2.0, 5.0, 19.7, 100.0, 1e3, 1e5] {
        let t = robust_from_terms(terms, 1.0, star).unwrap().total;
        assert!(t <= last);
        last = t;
    }
}

#[test]
fn oracle_sigma_star_matches_fine_quadrature() {
    let case = manufactured("sinsin", 0.0).unwrap();
    let s = solve_case(&case, 16, SolveOptions::default()).unwrap();
    let star = sigma_star(&SigmaStarPolicy::Oracle, Some(s.mesh.h()), &case.problem, Some(s.error.pair)).unwrap();

    // independent route: nested fine mesh, midpoint-in-triangle location, order-2 rule
    let fine = build_uniform_mesh(128, Rectangle::unit_square()).unwrap();
    let coarse = &s.mesh;
    let (mut grad_sq, mut l2_sq) = (0.0, 0.0);
    for t in 0..fine.num_triangles() {
        let verts = fine.vertices(t);
        let centroid =
            [(verts[0][0] + verts[1][0] + verts[2][0]) / 3.0, (verts[0][1] + verts[1][1] + verts[2][1]) / 3.0];
        let ct = coarse.locate(centroid);
        let gh = s.u_fem.gradient_on(ct);
        let area = fine.element_geometry(t).unwrap().area;
        let mid = [
            [(verts[0][0] + verts[1][0]) / 2.0, (verts[0][1] + verts[1][1]) / 2.0],
            [(verts[1][0] + verts[2][0]) / 2.0, (verts[1][1] + verts[2][1]) / 2.0],
            [(verts[2][0] + verts[0][0]) / 2.0, (verts[2][1] + verts[0][1]) / 2.0],
        ];
        for x in mid {
            let g = (case.grad_u)(x);
            grad_sq += area / 3.0 * ((g[0] - gh[0]).powi(2) + (g[1] - gh[1]).powi(2));
            let uh = s.u_fem.value(ct, &barycentric(&coarse.vertices(ct), x));
            l2_sq += area / 3.0 * ((case.u)(x) - uh).powi(2);
        }
    }
    let brute = grad_sq / l2_sq;
    assert!((star - brute).abs() <= 1e-3 * brute, "{star} vs {brute}");
}

#[test]
fn c_dag_calibration_is_stable_and_admissible() {
    let case = manufactured("sinsin", 0.0).unwrap();
    let mut runs = Vec::new();
    for n in [8, 16, 32] {
        let s = solve_case(&case, n, SolveOptions::default()).unwrap();
        runs.push((s.mesh.h(), s.error));
    }
    let ratios: Vec<f64> = runs.iter().map(|(h, e)| e.l2.powi(2) / (h * h * e.energy.powi(2))).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    assert!(hi / lo < 1.2, "{ratios:?}");

    let c = calibrate_c_dag(
        &runs.iter().map(|(h, e)| CalibrationRun { h: *h, energy_error: e.energy, l2_error: e.l2 }).collect::<Vec<_>>(),
    )
    .unwrap();
    assert_eq!(c, calibrate_case("sinsin", &[8, 16, 32], SolveOptions::default()).unwrap());
    for (h, e) in &runs {
        let fem = sigma_star(&SigmaStarPolicy::FemScale { c_dag: c }, Some(*h), &case.problem, None).unwrap();
        let oracle = sigma_star(&SigmaStarPolicy::Oracle, None, &case.problem, Some(e.pair)).unwrap();
        assert!(fem <= oracle, "{fem} > {oracle}");
    }
}

#[test]
fn line_integral_weights_change_the_bound() {
    let case = manufactured("sinsin", 0.0).unwrap();
    let s = solve_case(&case, 16, SolveOptions::default()).unwrap();
    let input = MajorantInput::new(&s.mesh, &s.u_fem, &s.flux, &case.problem);
    let t0 = majorant_line_integral(&input, |_| 0.0).unwrap().total;
    let t1 = majorant_line_integral(&input, |_| 1.0).unwrap().total;
    assert!(t0 != t1);
    let grad_err_sq = s.error.pair.a_norm_sq;
    assert!(t0 >= grad_err_sq && t1 >= grad_err_sq);
}

#[test]
fn classical_estimators_bound_the_error() {
    let case = manufactured("sinsin", 0.0).unwrap();
    let s = solve_case(&case, 16, SolveOptions::default()).unwrap();
    let input = MajorantInput::new(&s.mesh, &s.u_fem, &s.flux, &case.problem);
    let c_omega = 1.0 / (2.0 * PI * PI);
    let err_sq = s.error.energy.powi(2);
    let rf = majorant_repin_frolov(&input, Eps::Auto, c_omega).unwrap();
    let ch = majorant_churilova(&input, Eps::Auto, c_omega).unwrap();
    assert!(rf.total >= err_sq && ch.total >= err_sq);
    // at σ = 0 and A = I, the two classical forms share the same optimum structure
    assert!(ch.total >= rf.total * (1.0 - 1e-9));
    let scoped = manufactured("sinsin", 1.0).unwrap();
    let input = MajorantInput::new(&s.mesh, &s.u_fem, &s.flux, &scoped.problem);
    assert!(majorant_repin_frolov(&input, Eps::Auto, c_omega).is_err());
}

#[test]
fn majorants_scale_quadratically() {
    let case = manufactured("sinsin", 0.0).unwrap();
    let s = solve_case(&case, 8, SolveOptions::default()).unwrap();
    let star = friedrichs(&case.problem);
    let totals = |c: &majorant_core::verification::ManufacturedCase, v: &FeScalarField, z: &FeVectorField| {
        let input = MajorantInput::new(&s.mesh, v, z, &c.problem);
        [
            majorant_robust(&input, star).unwrap().total,
            majorant_churilova(&input, Eps::Auto, 0.05).unwrap().total,
            majorant_repin_frolov(&input, Eps::Auto, 0.05).unwrap().total,
            majorant_line_integral(&input, |x| x[0]).unwrap().total,
        ]
    };
    let base = totals(&case, &s.u_fem, &s.flux);
    for lambda in [3.0, 0.25] {
        let scaled = totals(&case.scaled(lambda), &s.u_fem.scaled(lambda), &s.flux.scaled(lambda));
        for (b, t) in base.iter().zip(scaled) {
            assert!((t - lambda * lambda * b).abs() <= 1e-10 * t, "{t} vs {}", lambda * lambda * b);
        }
    }
    // σ > 0: Aubin scales too
    let c1 = manufactured("bubble", 4.0).unwrap();
    let s1 = solve_case(&c1, 8, SolveOptions::default()).unwrap();
    let aub = |c: &majorant_core::verification::ManufacturedCase, v: &FeScalarField, z: &FeVectorField| {
        majorant_aubin(&MajorantInput::new(&s1.mesh, v, z, &c.problem)).unwrap().total
    };
    let b = aub(&c1, &s1.u_fem, &s1.flux);
    let t = aub(&c1.scaled(2.0), &s1.u_fem.scaled(2.0), &s1.flux.scaled(2.0));
    assert!((t - 4.0 * b).abs() <= 1e-10 * t);
}

#[test]
fn discrete_lambda1_bounds() {
    let l64 = discrete_lambda1(&build_uniform_mesh(64, Rectangle::unit_square()).unwrap()).unwrap();
    assert!((2.0 * PI * PI..=1.05 * 2.0 * PI * PI).contains(&l64), "{l64}");
    let rect = Rectangle::new(0.0, 2.0, 0.0, 1.0).unwrap();
    let lr = discrete_lambda1(&build_uniform_mesh(64, rect).unwrap()).unwrap();
    assert!(lr >= 5.0 * PI * PI / 4.0, "{lr}");
    let l16 = discrete_lambda1(&build_uniform_mesh(16, Rectangle::unit_square()).unwrap()).unwrap();
    let l32 = discrete_lambda1(&build_uniform_mesh(32, Rectangle::unit_square()).unwrap()).unwrap();
    assert!(l16 >= l32 && l32 >= l64 && l64 >= 2.0 * PI * PI);
}

#[test]
fn recovery_weighting_choices_run() {
    let case = manufactured("bubble", 0.0).unwrap();
    let mesh = unit(8);
    let u = solve(&assemble(&mesh, &case.problem).unwrap(), 1e-10).unwrap();
    for cfg in [RecoveryConfig::default(), RecoveryConfig { weighting: majorant_core::recovery::Weighting::Uniform }] {
        let z = recover_flux(&u, &case.problem, cfg);
        let input = MajorantInput::new(&mesh, &u, &z, &case.problem);
        let t: Terms = input.terms().unwrap();
        assert!(t.flux > 0.0 && t.residual > 0.0);
    }
    let _ = Diffusion::identity();
}
