//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines always print; exits nonzero when any criterion is red.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use caplab::config::RunConfig;
use caplab::convexity::{
    certify, figure_curves, second_difference_at_origin, sign_changes, BoundaryGraph, Curve, FigureOptions, Profile,
};
use caplab::geometry::{compute_lambda_star, dot, norm, optimal_cap_set, sub, Domain, Point};
use caplab::grid::{FnField, GridFunction, ScalarField};
use caplab::kelvin::{build_frame, kelvin_transform, transformed_nonlinearity};
use caplab::nonlinearity::{check_hypotheses, geometric_samples, Nonlinearity, Staircase};
use caplab::pipeline::{run, Subcommand};
use caplab::solver::{
    amplitude_ladder, principal_eigenpair, solve_radial, solve_semilinear, solve_with_amplitudes, RadialDomain,
    RadialField,
};
use caplab::verify::{
    bound_constant, boundedness_experiment, check_cap_monotonicity_all, check_global_bound, check_image_no_critical,
    check_kelvin_no_critical, check_max_location, default_tolerance, image_cap, MonotonicityOptions, RowStatus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn c1_appendix_anchor() -> Outcome {
    let t = Instant::now();
    let limit = second_difference_at_origin(4, 1e-2);
    let sets = figure_curves(Curve::Gamma2, &FigureOptions::default()).unwrap();
    let e = &sets[1];
    let zoom_min = e
        .x
        .iter()
        .zip(&e.value)
        .filter(|(x, _)| x.abs() <= 5e-4)
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    let secs = t.elapsed().as_secs_f64();
    (
        within(limit, 1.0, 1e-6) && zoom_min > 0.0 && e.value.iter().all(|v| *v > 0.0) && secs < 1.0,
        format!("limit={limit:.12} (tol 1e-6), min (e) on [-5e-4,5e-4]={zoom_min:.3e}, {secs:.2}s (< 1s)"),
    )
}

fn random_quadratic(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if rng.random_bool(0.5) {
        return vec![vec![rng.random_range(-0.9..2.0)]];
    }
    let (e1, e2): (f64, f64) = (rng.random_range(-0.9..2.0), rng.random_range(-0.9..2.0));
    let t: f64 = rng.random_range(0.0..PI);
    let (c, s) = (t.cos(), t.sin());
    vec![
        vec![c * c * e1 + s * s * e2, c * s * (e1 - e2)],
        vec![c * s * (e1 - e2), s * s * e1 + c * c * e2],
    ]
}

fn c2_hessian_identity() -> Outcome {
    let t = Instant::now();
    let mut graphs = vec![
        BoundaryGraph::new(Profile::Constant { dim: 2 }, 1.0).unwrap(),
        BoundaryGraph::new(Profile::Quadratic { matrix: vec![vec![0.5]] }, 1.0).unwrap(),
        BoundaryGraph::new(Profile::Quartic { dim: 2 }, 1.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        graphs.push(BoundaryGraph::new(Profile::Quadratic { matrix: random_quadratic(&mut rng) }, 1.0).unwrap());
    }
    let worst = graphs
        .iter()
        .map(|g| certify(g, Some(0.1)).unwrap().identity_error)
        .fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    (
        worst <= 1e-4 && secs < 5.0,
        format!(
            "max ||HessG + (2I + A)|| = {worst:.2e} over {} profiles (tol 1e-4), {secs:.2}s (< 5s)",
            graphs.len()
        ),
    )
}

fn c3_cap_certificate() -> Outcome {
    let g = BoundaryGraph::new(Profile::Constant { dim: 1 }, 1.0).unwrap();
    let c = certify(&g, Some(0.1)).unwrap();
    let gamma = 1.0 / 1.01;
    let mut all_heights = true;
    for (profile, radius) in [
        (Profile::Constant { dim: 2 }, 1.0),
        (Profile::Quadratic { matrix: vec![vec![1.0]] }, 1.0),
        (Profile::Quartic { dim: 1 }, 1.0),
        (Profile::Gamma1, 0.5),
        (Profile::Gamma2, 0.01),
    ] {
        let cert = certify(&BoundaryGraph::new(profile, radius).unwrap(), None).unwrap();
        all_heights &= !cert.pass || cert.height > 0.0;
    }
    (
        within(c.gamma, gamma, 1e-10) && within(c.height, (1.0 - gamma) / 2.0, 1e-10) && all_heights,
        format!(
            "gamma={:.12} (1/1.01, tol 1e-10), height={:.12} ((1-gamma)/2, tol 1e-10), passing heights > 0: {all_heights}",
            c.gamma, c.height
        ),
    )
}

fn fundamental_deviation(h: f64) -> f64 {
    let d = Domain::disk([2.0, 0.0], 1.0, 1.0, h).unwrap();
    let frame = build_frame(&d, [1.0, 0.0], 1.0).unwrap();
    let sampled = d.sample(h, |x| 1.0 / norm(&x)).unwrap();
    let img = kelvin_transform(&sampled, &d, &frame, 3, h).unwrap();
    img.valid_nodes()
        .filter(|&k| d.signed_distance(frame.pull(img.v.grid.point(k)).unwrap()) < -0.25)
        .map(|k| (img.v.values[k] - 1.0).abs())
        .fold(0.0, f64::max)
}

fn c4_kelvin() -> Outcome {
    // |D^2 (1/|x|)| <= 2/|x|^3 <= 2 on the disk 1 <= |x| <= 3
    let scale = 2.0;
    let (h1, h2) = (1.0 / 32.0, 1.0 / 64.0);
    let (e1, e2) = (fundamental_deviation(h1), fundamental_deviation(h2));
    let ratio = e1 / e2;
    let crit = Nonlinearity::power(5.0, 3).unwrap();
    let g = transformed_nonlinearity(&crit, 3).unwrap();
    let mut worst_rel: f64 = 0.0;
    for r in geometric_samples(0.2, 1.0, 50) {
        for s in geometric_samples(1e-3, 1e3, 50) {
            let gs = g.eval([r * 0.6, r * 0.8], s).unwrap();
            worst_rel = worst_rel.max((gs - s.powi(5)).abs() / s.powi(5));
        }
    }
    (
        e1 <= 5.0 * h1 * h1 * scale && e2 <= 5.0 * h2 * h2 * scale && (3.2..=4.8).contains(&ratio) && worst_rel <= 1e-13,
        format!(
            "|v-1|: {e1:.3e} @h=1/32, {e2:.3e} @h=1/64 (<= 5h^2*{scale}), ratio={ratio:.3} (4 +/- 20%), s^5 -> g rel err {worst_rel:.1e} (<= 1e-13)"
        ),
    )
}

fn c5_geometry() -> Outcome {
    let h = 1.0 / 128.0;
    let disk = Domain::disk([0.0, 0.0], 1.0, 1.0, h).unwrap();
    let annulus = Domain::annulus([0.0, 0.0], 1.0, 2.0, 0.5, h).unwrap();
    let l_disk = compute_lambda_star(&disk, [1.0, 0.0], 1e-12).unwrap().lambda_star;
    let l_ann = compute_lambda_star(&annulus, [1.0, 0.0], 1e-12).unwrap().lambda_star;
    let t = Instant::now();
    let star = optimal_cap_set(&annulus, 64, 1e-10).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let grid = star.complement.grid;
    let r = |k: usize| norm(&grid.point(k));
    // complement -> {1 < r <= 1.5}
    let out_dist = star
        .complement
        .nodes()
        .map(|k| (r(k) - 1.5).max(1.0 - r(k)).max(0.0))
        .fold(0.0, f64::max);
    // {1 < r <= 1.5} -> complement, searched in a window of 3 nodes
    let interior = annulus.interior_mask(&grid);
    let mut in_dist: f64 = 0.0;
    for k in interior.nodes().filter(|&k| r(k) > 1.0 && r(k) <= 1.5) {
        if star.complement.inside[k] {
            continue;
        }
        let (i, j) = grid.coords(k);
        let mut best = f64::INFINITY;
        for di in -3i64..=3 {
            for dj in -3i64..=3 {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= grid.nx as i64 || jj >= grid.ny as i64 {
                    continue;
                }
                let n = grid.index(ii as usize, jj as usize);
                if star.complement.inside[n] {
                    best = best.min(norm(&sub(grid.point(n), grid.point(k))));
                }
            }
        }
        in_dist = in_dist.max(best);
    }
    let hausdorff = out_dist.max(in_dist);
    (
        within(l_disk, 0.0, 2.0 * h) && within(l_ann, -1.5, 2.0 * h) && hausdorff <= 2.0 * h && secs < 30.0,
        format!(
            "lambda*(e1): disk {l_disk:.3e}, annulus {l_ann:.6} (tol 2h={:.4}); complement Hausdorff {hausdorff:.4} (<= 2h); 64 directions at h=1/128 in {secs:.2}s (< 30s)",
            2.0 * h
        ),
    )
}

fn disk_poisson_error(h: f64) -> f64 {
    let d = Domain::disk([0.0, 0.0], 1.0, 10.0, h).unwrap();
    let init = d.sample(h, |_| 1.0).unwrap();
    let (u, _) = solve_semilinear(&d, &Nonlinearity::constant(1.0, 2), h, &init, 1e-12).unwrap();
    u.interior_nodes()
        .map(|k| {
            let p = u.grid.point(k);
            (u.values[k] - (1.0 - dot(&p, &p)) / 4.0).abs()
        })
        .fold(0.0, f64::max)
}

/// First zero of `J_0` by bisection on its power series.
fn bessel_j0_first_zero() -> f64 {
    let j0 = |x: f64| {
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..60 {
            term *= -(x * x / 4.0) / (k as f64 * k as f64);
            sum += term;
        }
        sum
    };
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if j0(lo) * j0(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c6_solvers() -> Outcome {
    let ratio = disk_poisson_error(1.0 / 64.0) / disk_poisson_error(1.0 / 128.0);
    let h = 1.0 / 64.0;
    let square = Domain::square([0.0, 0.0], 1.0, 1.0, h).unwrap();
    let l_sq = principal_eigenpair(&square, h, 1e-12).unwrap().lambda;
    let disk = Domain::disk([0.0, 0.0], 1.0, 10.0, h).unwrap();
    let l_disk = principal_eigenpair(&disk, h, 1e-12).unwrap().lambda;
    let bessel = bessel_j0_first_zero().powi(2);
    let (rel_sq, rel_disk) = (l_sq / (2.0 * PI * PI) - 1.0, l_disk / bessel - 1.0);
    (
        (3.4..=4.6).contains(&ratio) && rel_sq.abs() <= 5e-3 && rel_disk.abs() <= 5e-3,
        format!(
            "Poisson error ratio 1/64:1/128 = {ratio:.3} ([3.4, 4.6]); square lambda1 {l_sq:.5} ({:+.3}%), disk lambda1 {l_disk:.5} vs j01^2={bessel:.6} ({:+.3}%) (0.5%)",
            100.0 * rel_sq,
            100.0 * rel_disk
        ),
    )
}

struct Case {
    name: &'static str,
    domain: Domain,
    u: GridFunction,
}

fn theorem_cases(h: f64) -> Vec<Case> {
    let disk = Domain::disk([0.0, 0.0], 1.0, 1.0, h).unwrap();
    let cubic2 = Nonlinearity::power(3.0, 2).unwrap();
    let phi = principal_eigenpair(&disk, h, 1e-12).unwrap().phi;
    let (u_disk, _, _) = solve_with_amplitudes(&disk, &cubic2, &phi, &amplitude_ladder(1.0, 9), 1e-10).unwrap();
    let cubic3 = Nonlinearity::power(3.0, 3).unwrap();
    let annulus = Domain::annulus([0.0, 0.0], 1.0, 2.0, 0.5, h).unwrap();
    let mut out = vec![Case {
        name: "disk cubic (grid)",
        domain: disk.clone(),
        u: u_disk,
    }];
    for (name, domain, rd) in [
        ("N=3 ball cubic", disk, RadialDomain::Ball { radius: 1.0 }),
        ("N=3 annulus cubic", annulus, RadialDomain::Annulus { inner: 1.0, outer: 2.0 }),
    ] {
        let sol = solve_radial(3, &cubic3, rd, 1e-12).unwrap();
        let field = RadialField {
            profile: &sol,
            center: [0.0, 0.0],
        };
        let u = domain.sample(h, |x| field.value(x).unwrap_or(0.0)).unwrap();
        out.push(Case { name, domain, u });
    }
    out
}

fn c7_theorem_checks() -> Outcome {
    let h = 1.0 / 64.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for case in theorem_cases(h) {
        let tol = default_tolerance(&case.u);
        let opts = MonotonicityOptions {
            tolerance: Some(tol),
            ..MonotonicityOptions::default()
        };
        let mono = check_cap_monotonicity_all(&case.u, &case.domain, 64, &opts).unwrap();
        let star = optimal_cap_set(&case.domain, 64, 1e-10).unwrap();
        let maxloc = check_max_location(&case.u, &star.complement, tol).unwrap();
        ok &= mono.pass && maxloc.pass;
        parts.push(format!(
            "{}: caps {} (margin {:.2e}), max-location gap {:.2e} (tol {tol:.2e})",
            case.name,
            if mono.pass { "ok" } else { "FAIL" },
            mono.margin,
            -maxloc.margin
        ));
        if case.name == "N=3 annulus cubic" {
            let frame = build_frame(&case.domain, [1.0, 0.0], 0.5).unwrap();
            let c = bound_constant(&frame, 3);
            let gb = check_global_bound(&case.u, &case.domain, 0.1, c).unwrap();
            ok &= within(c, 10.0, 1e-12) && gb.pass && gb.margin >= 8.0;
            parts.push(format!("annulus C={c} margin {:.4} (>= 8)", gb.margin));
        }
    }
    (ok, parts.join("; "))
}

fn c8_no_critical() -> Outcome {
    let h = 1.0 / 64.0;
    let cubic = Nonlinearity::power(3.0, 3).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, domain, rd, rho) in [
        (
            "disk",
            Domain::disk([0.0, 0.0], 1.0, 1.0, h).unwrap(),
            RadialDomain::Ball { radius: 1.0 },
            1.0,
        ),
        (
            "annulus",
            Domain::annulus([0.0, 0.0], 1.0, 2.0, 0.5, h).unwrap(),
            RadialDomain::Annulus { inner: 1.0, outer: 2.0 },
            0.5,
        ),
    ] {
        let sol = solve_radial(3, &cubic, rd, 1e-12).unwrap();
        let field = RadialField {
            profile: &sol,
            center: [0.0, 0.0],
        };
        let r = check_kelvin_no_critical(&field, &domain, [1.0, 0.0], rho, 3, h, 1e-3).unwrap();
        let ratio = r.params["min_gradient_over_h_scale"].as_f64().unwrap();
        let min_grad = r.params["min_gradient"].as_f64().unwrap();
        ok &= r.pass && min_grad > 0.0 && ratio >= 10.0;
        parts.push(format!("{name}: min|grad v|={min_grad:.4}, /(h*scale)={ratio:.1} (>= 10)"));
    }
    // planted critical point at (7/9, 0), inside the image cap of the unit disk at (-1, 0)
    let d = Domain::disk([0.0, 0.0], 1.0, 1.0, 1.0 / 32.0).unwrap();
    let frame = build_frame(&d, [-1.0, 0.0], 1.0).unwrap();
    let poisson = FnField::new(|x: Point| (1.0 - dot(&x, &x)) / 6.0);
    let mut img = kelvin_transform(&poisson, &d, &frame, 3, 1.0 / 32.0).unwrap();
    let cap = image_cap(&img.domain).unwrap();
    let c = [2.0 / 3.0, 0.0];
    for k in img.v.interior_nodes().collect::<Vec<_>>() {
        let y = img.v.grid.point(k);
        img.v.values[k] = (1.0 / 9.0 - dot(&sub(y, c), &sub(y, c))) * (1.0 + 3.0 * (y[0] - c[0]));
    }
    let planted = check_image_no_critical(&img, &cap, 0.1).unwrap();
    let located = planted
        .violations
        .first()
        .is_some_and(|v| norm(&sub(v.at, [7.0 / 9.0, 0.0])) < 2.0 * img.v.grid.h);
    ok &= !planted.pass && located;
    parts.push(format!("planted control fails: {}, located: {located}", !planted.pass));
    (ok, parts.join("; "))
}

fn c9_nonlinearities() -> Outcome {
    let (p, q, levels) = (2.0, 3.0, 4);
    let st = Staircase::new(p, q, 2.0, 3, levels).unwrap();
    let mut jump: f64 = 0.0;
    for &x in st.a.iter().chain(&st.b) {
        let (l, r) = (st.eval(x * (1.0 - 1e-15)), st.eval(x * (1.0 + 1e-15)));
        jump = jump.max((r - l).abs() / st.eval(x));
    }
    let top = *st.b.last().unwrap();
    let samples = geometric_samples(1.0, top, 10_000);
    let envelope = samples
        .iter()
        .all(|&s| st.eval(s) >= s.powf(p) * (1.0 - 1e-12) && st.eval(s) <= s.powf(q) * (1.0 + 1e-12));
    let mid = 0.5 * (p + q);
    let gaps: Vec<f64> = samples.iter().map(|&s| st.eval(s).ln() - mid * s.ln()).collect();
    let crossings = sign_changes(&gaps);
    let f1 = Nonlinearity::log_critical(3).unwrap();
    let stair = Nonlinearity::staircase(p, q, 2.0, 3, levels).unwrap();
    let exp = Nonlinearity::exponential(3);
    let lambda1 = 2.0 * PI * PI;
    let h1 = |f: &Nonlinearity, s_max: f64| check_hypotheses(f, lambda1, s_max, 200).unwrap().h1.pass;
    let (a, b, c) = (h1(&f1, 1e6), h1(&stair, 1e6), h1(&exp, 1e2));
    (
        jump <= 1e-10 && envelope && crossings + 1 >= levels && a && b && !c,
        format!(
            "max relative jump {jump:.1e} (<= 1e-10), envelope s^p<=f<=s^q at 1e4 samples: {envelope}, crossings of s^{mid}: {crossings} (>= {}), H1: f1 {a}, staircase {b}, e^s {c} (expect false, s_max 1e2)",
            levels - 1
        ),
    )
}

fn c10_determinism() -> Outcome {
    let cfg = RunConfig::from_json(
        r#"{"domain": {"preset": "annulus", "params": {"inner": 1.0, "outer": 2.0}, "grid_h": 0.03125},
            "nonlinearity": {"kind": "power", "exponent": 3.0, "dim": 3},
            "solver": {"method": "radial"}, "checks": {"directions": 32}, "seed": 11}"#,
    )
    .unwrap();
    let a = run(Subcommand::Verify, &cfg).unwrap();
    let b = run(Subcommand::Verify, &cfg).unwrap();
    let same = a.artifacts.len() == b.artifacts.len()
        && a.artifacts
            .iter()
            .zip(&b.artifacts)
            .all(|(x, y)| x.name == y.name && x.contents == y.contents);
    let bytes: usize = a.artifacts.iter().map(|x| x.contents.len()).sum();
    (same, format!("{} artifacts, {bytes} bytes, byte-identical: {same}", a.artifacts.len()))
}

fn boundedness_table() -> Outcome {
    let family: Vec<Nonlinearity> = [2.0, 2.5, 3.0, 4.0, 5.0]
        .iter()
        .map(|&p| Nonlinearity::power(p, 3).unwrap())
        .chain([Nonlinearity::log_critical(3).unwrap()])
        .collect();
    let t = boundedness_experiment(3, RadialDomain::Ball { radius: 1.0 }, &family, 0.1, 1e-10).unwrap();
    let finite = t
        .rows
        .iter()
        .filter(|r| r.in_hypothesis)
        .all(|r| r.status == RowStatus::Finite && r.sup_norm.is_some_and(f64::is_finite));
    let critical = &t.rows[4];
    let ok = finite && !t.flagged && !critical.in_hypothesis && critical.status == RowStatus::OutOfHypothesis;
    let rows: Vec<String> = t
        .rows
        .iter()
        .map(|r| format!("{}={}", r.label, r.sup_norm.map_or("none".into(), |v| format!("{v:.3}"))))
        .collect();
    (ok, format!("{}; s^5 flagged out-of-hypothesis: {}", rows.join(", "), !critical.in_hypothesis))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 appendix anchor", c1_appendix_anchor),
        ("2 hessian identity", c2_hessian_identity),
        ("3 cap certificate", c3_cap_certificate),
        ("4 kelvin correctness", c4_kelvin),
        ("5 moving-plane geometry", c5_geometry),
        ("6 solver accuracy", c6_solvers),
        ("7 theorem checks", c7_theorem_checks),
        ("8 no critical point", c8_no_critical),
        ("9 nonlinearity suite", c9_nonlinearities),
        ("10 determinism", c10_determinism),
        ("boundedness table", boundedness_table),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let (pass, detail) = check();
        if !pass {
            failed += 1;
        }
        println!(
            "{} {name}: {detail} [{:.2}s]",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
