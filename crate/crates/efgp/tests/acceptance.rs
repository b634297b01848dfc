//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! the single test fn keeps them sequential so timing- and memory-sensitive
//! checks see a quiet process.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use efgp::error::EfgpError;
use efgp::experiments::{
    self, generate_synthetic, peak_memory_bytes, run_bench_row, BenchRow, GridOverride,
    SyntheticSpec,
};
use efgp::grid::{
    aliasing_bound, choose_params_matern_heuristic, choose_params_matern_rigorous,
    choose_params_se, kernel_error_empirical, matern_frobenius_heuristic, truncation_bound,
    ErrorNorm, FourierGrid, ProbeSet,
};
use efgp::model::{fit, GridSpec, SolveOptions};
use efgp::nufft::{direct_type1, direct_type2, NufftPlan};
use efgp::oracle::{condition_report, dense_weight_space, stability_report};
use efgp::toeplitz::build_toeplitz;
use efgp::{Dataset, Kernel};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn random_points(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<f64> {
    (0..n * d).map(|_| rng.random::<f64>()).collect()
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

struct Criterion {
    index: usize,
    name: &'static str,
    outcome: Result<String, String>,
}

/// 1. EFGP at solver tolerance 1e-10 matches the dense weight-space solve to
/// relative 1e-8, and the function/weight-space equivalence identities hold
/// to relative 1e-10, on 20 random instances (N <= 2000, d in {1,2}, both
/// kernel families).
fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let configs: [(usize, usize, &str, f64, usize); 5] = [
        (1, 2000, "se:l=0.1", 0.55, 24),
        (1, 1500, "matern:nu=0.5,l=0.1", 0.45, 40),
        (1, 800, "matern:nu=1.5,l=0.1", 0.5, 30),
        (2, 600, "se:l=0.15", 0.5, 10),
        (2, 500, "matern:nu=0.5,l=0.12", 0.45, 12),
    ];
    let mut count = 0;
    for (cfg_i, &(d, n, kspec, h, m)) in configs.iter().enumerate() {
        for seed in 0..4u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + 17 * cfg_i as u64 + seed);
            let points = random_points(&mut rng, d, n);
            let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let data = Dataset::new(d, points, y).map_err(|e| e.to_string())?;
            let kernel = Kernel::parse(kspec).map_err(|e| e.to_string())?;
            let grid = FourierGrid::new(h, m, d).map_err(|e| e.to_string())?;
            let sigma = 0.3;

            let ws = dense_weight_space(&data, &kernel, &grid, sigma).map_err(|e| e.to_string())?;
            if ws.beta_identity_rel > 1e-10 {
                return Err(format!(
                    "beta = Phi* alpha identity residual {:.2e} > 1e-10 (cfg {cfg_i}, seed {seed})",
                    ws.beta_identity_rel
                ));
            }
            if ws.alpha_identity_rel > 1e-10 {
                return Err(format!(
                    "alpha = (y - Phi beta)/sigma^2 identity residual {:.2e} > 1e-10 (cfg {cfg_i}, seed {seed})",
                    ws.alpha_identity_rel
                ));
            }

            let model = fit(
                &data,
                &kernel,
                sigma,
                GridSpec::Explicit(grid),
                &SolveOptions::new(1e-10),
            )
            .map_err(|e| e.to_string())?;
            let diff = rel_l2(model.beta(), &ws.beta);
            if diff > 1e-8 {
                return Err(format!(
                    "EFGP vs dense weight-space relative error {diff:.2e} > 1e-8 (cfg {cfg_i}, seed {seed})"
                ));
            }
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Err(format!("{count} instances took {secs:.1} s (limit 60 s)"));
    }
    Ok(format!("{count} instances, max rel err within 1e-8, {secs:.1} s"))
}

/// 2. Fast Toeplitz apply equals the dense Gram product to relative 1e-12
/// for (d, m) combinations covering M up to 4096, 50 random trials each.
fn criterion_2() -> Result<String, String> {
    let start = Instant::now();
    let combos: [(usize, usize); 12] = [
        (1, 1),
        (1, 4),
        (1, 19),
        (1, 138),
        (1, 901),
        (1, 2047),
        (2, 1),
        (2, 3),
        (2, 9),
        (2, 31),
        (3, 1),
        (3, 3),
    ];
    let mut worst = 0.0f64;
    for &(d, m) in &combos {
        let grid = FourierGrid::new(0.47, m, d).map_err(|e| e.to_string())?;
        let m_total = grid.n_modes();
        assert!(m_total <= 4096);
        let widened = grid.widened();
        for point_set in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(2000 + 31 * m as u64 + point_set);
            let n = 120;
            let points = random_points(&mut rng, d, n);
            let op = build_toeplitz(&points, &grid, 1e-13, false).map_err(|e| e.to_string())?;
            // dense Gram from a directly summed lattice vector
            let ones = vec![Complex64::new(1.0, 0.0); n];
            let v = direct_type1(&points, &ones, &widened).map_err(|e| e.to_string())?;
            let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(m_total);
            for p in 0..m_total {
                let jp = grid.multi_index(p);
                let mut row = Vec::with_capacity(m_total);
                for l in 0..m_total {
                    let jl = grid.multi_index(l);
                    let diff: Vec<i64> = (0..d).map(|a| jp[a] - jl[a]).collect();
                    row.push(v[widened.flat_index(&diff)].conj());
                }
                columns.push(row);
            }
            for _trial in 0..10 {
                let beta = random_complex(&mut rng, m_total);
                let fast = op.apply(&beta).map_err(|e| e.to_string())?;
                let dense: Vec<Complex64> = columns
                    .iter()
                    .map(|row| row.iter().zip(&beta).map(|(g, b)| g * b).sum())
                    .collect();
                let err = rel_l2(&fast, &dense);
                worst = worst.max(err);
                if err > 1e-12 {
                    return Err(format!(
                        "d={d} m={m}: fast apply vs dense rel err {err:.2e} > 1e-12"
                    ));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Err(format!("runtime {secs:.1} s exceeds 60 s"));
    }
    Ok(format!(
        "{} combos x 50 trials, worst rel err {worst:.2e}, {secs:.1} s",
        combos.len()
    ))
}

/// 3. NUFFT tolerance contract: type 1 and type 2 against direct summation,
/// relative l2 error <= tol for tol in {1e-6, 1e-9, 1e-12}, d in {1,2,3},
/// 100 trials each.
fn criterion_3() -> Result<String, String> {
    let start = Instant::now();
    let mut worst_ratio = 0.0f64;
    for &tol in &[1e-6, 1e-9, 1e-12] {
        for d in 1..=3usize {
            let m = match d {
                1 => 24,
                2 => 8,
                _ => 4,
            };
            for trial in 0..100u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(3000 + trial * 7 + d as u64);
                let h = 0.3 + 0.65 * rng.random::<f64>();
                let grid = FourierGrid::new(h, m, d).map_err(|e| e.to_string())?;
                let n = 50 + (rng.random::<f64>() * 250.0) as usize;
                let points = random_points(&mut rng, d, n);
                let strengths = random_complex(&mut rng, n);
                let plan = NufftPlan::for_grid(&grid, tol).map_err(|e| e.to_string())?;

                let fast1 = plan.type1(&points, &strengths, h).map_err(|e| e.to_string())?;
                let exact1 = direct_type1(&points, &strengths, &grid).map_err(|e| e.to_string())?;
                let err1 = rel_l2(&fast1, &exact1);

                let coeffs = random_complex(&mut rng, grid.n_modes());
                let fast2 = plan.type2(&coeffs, &points, h).map_err(|e| e.to_string())?;
                let exact2 = direct_type2(&coeffs, &points, &grid).map_err(|e| e.to_string())?;
                let err2 = rel_l2(&fast2, &exact2);

                let err = err1.max(err2);
                worst_ratio = worst_ratio.max(err / tol);
                if err > tol {
                    return Err(format!(
                        "tol={tol:e} d={d} trial={trial}: rel l2 err {err:.2e} exceeds tol"
                    ));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 300.0 {
        return Err(format!("runtime {secs:.1} s exceeds 300 s"));
    }
    Ok(format!(
        "900 instances x 2 transform types, worst err/tol {worst_ratio:.2}, {secs:.1} s"
    ))
}

/// 4. Error-bound soundness: measured sup kernel error never exceeds
/// aliasing + truncation bounds on hypothesis-satisfying grids, and the
/// rigorous parameter rules achieve their target sup accuracy.
fn criterion_4() -> Result<String, String> {
    let start = Instant::now();
    let mut cases = 0usize;

    // soundness over a grid of (kernel, l, h, m); the theorems are exact-
    // arithmetic statements, so cases whose bound sits below the direct-
    // summation roundoff floor (~1e-13) are unmeasurable and skipped
    let mut check = |kernel: &Kernel, d: usize, h: f64, m: usize| -> Result<(), String> {
        let grid = FourierGrid::new(h, m, d).map_err(|e| e.to_string())?;
        let total = aliasing_bound(kernel, d, h).map_err(|e| e.to_string())?
            + truncation_bound(kernel, d, h, m).map_err(|e| e.to_string())?;
        if total < 1e-13 {
            return Ok(());
        }
        let probe = ProbeSet::new(d, if d == 1 { 201 } else { 41 }, 500, 77)
            .map_err(|e| e.to_string())?;
        let sup =
            kernel_error_empirical(kernel, &grid, &probe, ErrorNorm::Sup).map_err(|e| e.to_string())?;
        if sup > total {
            return Err(format!(
                "{} d={d} h={h} m={m}: sup {sup:.3e} > bound {total:.3e}",
                kernel.spec_string()
            ));
        }
        cases += 1;
        Ok(())
    };
    for &l in &[0.05, 0.1, 0.5] {
        let se = Kernel::squared_exponential(l).map_err(|e| e.to_string())?;
        for &h in &[0.35, 0.5, 0.65] {
            for &m in &[5usize, 15, 40] {
                check(&se, 1, h, m)?;
            }
        }
        check(&se, 2, 0.5, 12)?;
    }
    for &nu in &[0.5, 1.5, 2.5] {
        for &l in &[0.05, 0.1] {
            let matern = Kernel::matern(nu, l).map_err(|e| e.to_string())?;
            for &h in &[0.3, 0.5] {
                // stay inside the aliasing theorem hypothesis on h
                let hmax = 1.0 / (1.0 + (8.0 * nu).sqrt() * l);
                if h > hmax {
                    continue;
                }
                for &m in &[10usize, 50, 200] {
                    check(&matern, 1, h, m)?;
                }
            }
            check(&matern, 2, 0.3, 30)?;
        }
    }

    // the selection rules achieve their stated sup-error target
    let mut achieved = 0usize;
    for &eps in &[1e-2, 1e-4, 1e-6] {
        let (grid, _) = choose_params_se(0.1, 1, eps).map_err(|e| e.to_string())?;
        let kernel = Kernel::squared_exponential(0.1).map_err(|e| e.to_string())?;
        let probe = ProbeSet::new(1, 401, 800, 5).map_err(|e| e.to_string())?;
        let sup = kernel_error_empirical(&kernel, &grid, &probe, ErrorNorm::Sup)
            .map_err(|e| e.to_string())?;
        if sup > eps {
            return Err(format!("SE rule at eps={eps:e}: sup {sup:.3e} > eps"));
        }
        let (grid2, _) = choose_params_se(0.1, 2, eps).map_err(|e| e.to_string())?;
        let probe2 = ProbeSet::new(2, 41, 800, 5).map_err(|e| e.to_string())?;
        let sup2 = kernel_error_empirical(&kernel, &grid2, &probe2, ErrorNorm::Sup)
            .map_err(|e| e.to_string())?;
        if sup2 > eps {
            return Err(format!("SE rule d=2 at eps={eps:e}: sup {sup2:.3e} > eps"));
        }
        achieved += 2;
    }
    // Matérn rigorous rule; nu = 1/2 at 1e-6 needs ~1.6e7 modes, beyond the
    // direct-summation budget, so the tightest tolerance is checked at 3/2
    let matern_cases: [(f64, f64); 5] = [
        (0.5, 1e-2),
        (0.5, 1e-4),
        (1.5, 1e-2),
        (1.5, 1e-4),
        (1.5, 1e-6),
    ];
    for &(nu, eps) in &matern_cases {
        let (grid, budget) =
            choose_params_matern_rigorous(nu, 0.1, 1, eps).map_err(|e| e.to_string())?;
        if budget.aliasing_bound + budget.truncation_bound > eps {
            return Err(format!(
                "Matérn rule nu={nu} eps={eps:e}: budget exceeds tolerance"
            ));
        }
        let kernel = Kernel::matern(nu, 0.1).map_err(|e| e.to_string())?;
        let probe = ProbeSet::new(1, 401, 600, 5).map_err(|e| e.to_string())?;
        let sup = kernel_error_empirical(&kernel, &grid, &probe, ErrorNorm::Sup)
            .map_err(|e| e.to_string())?;
        if sup > eps {
            return Err(format!(
                "Matérn rule nu={nu} at eps={eps:e}: sup {sup:.3e} > eps"
            ));
        }
        achieved += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(format!(
        "{cases} soundness cases, {achieved} rule targets met, {secs:.1} s"
    ))
}

/// 5. Matérn RMS kernel error tracks the fitted heuristic within a factor 3
/// across an m sweep, for nu in {1/2, 3/2}, d in {1,2}, l in {0.05, 0.1}.
fn criterion_5() -> Result<String, String> {
    let start = Instant::now();
    let mut checked = 0usize;
    let mut worst = 1.0f64;
    for &nu in &[0.5, 1.5] {
        for d in 1..=2usize {
            for &l in &[0.05, 0.1] {
                // h targeting aliasing error 1e-8, as in the reference study
                let (g0, _) = choose_params_matern_heuristic(nu, l, d, 1e-8, false)
                    .map_err(|e| e.to_string())?;
                let h = g0.h();
                let kernel = Kernel::matern(nu, l).map_err(|e| e.to_string())?;
                let sweep: &[usize] = if d == 1 {
                    &[400, 800, 1600, 3200]
                } else {
                    &[48, 96, 160]
                };
                for &m in sweep {
                    let grid = FourierGrid::new(h, m, d).map_err(|e| e.to_string())?;
                    let probe = if d == 1 {
                        ProbeSet::new(1, 2001, 1000, 9)
                    } else {
                        ProbeSet::new(2, 41, 2000, 9)
                    }
                    .map_err(|e| e.to_string())?;
                    let rms = kernel_error_empirical(&kernel, &grid, &probe, ErrorNorm::Rms)
                        .map_err(|e| e.to_string())?;
                    let predicted = matern_frobenius_heuristic(nu, l, d, h, m);
                    let ratio = rms / predicted;
                    worst = worst.max(ratio.max(1.0 / ratio));
                    if !(ratio >= 1.0 / 3.0 && ratio <= 3.0) {
                        return Err(format!(
                            "nu={nu} d={d} l={l} m={m}: measured {rms:.3e} vs heuristic {predicted:.3e} (ratio {ratio:.2})"
                        ));
                    }
                    checked += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(format!(
        "{checked} sweep points within factor 3 (worst {worst:.2}), {secs:.1} s"
    ))
}

struct Table3Outcome {
    rows: Vec<experiments::BenchResult>,
    summary: String,
}

/// 6. Desk-scale reproduction of the headline benchmark table, plus the
/// N-independence of per-iteration solve time and linear precompute scaling.
fn criterion_6() -> Result<Table3Outcome, String> {
    let start = Instant::now();
    let mut rows = Vec::new();

    let mut run_block =
        |label: &str, d: usize, kernel: &str, ns: &[usize], over: Option<GridOverride>, eps_ref: f64|
         -> Result<(), String> {
            for (i, &n) in ns.iter().enumerate() {
                let row = BenchRow {
                    label: format!("{label}-N{n}"),
                    spec: SyntheticSpec::new(d, n, 0.3, 42 + i as u64, 60),
                    kernel: kernel.into(),
                    sigma_model: 0.3,
                    eps: 1e-4,
                    grid_override: over.clone(),
                    eps_ref: Some(eps_ref),
                };
                let result = run_bench_row(&row).map_err(|e| format!("{label} N={n}: {e}"))?;
                rows.push(result);
            }
            Ok(())
        };

    // d=1 SE block, grid from the rigorous rule
    run_block("se-d1", 1, "se:l=0.1", &[1_000, 10_000, 100_000, 1_000_000], None, 1e-8)?;
    // d=2 SE block pinned to the tabulated m=16 (the published grid);
    // h from the rigorous rule at the same tolerance
    let (se2_grid, _) = choose_params_se(0.1, 2, 1e-4).map_err(|e| e.to_string())?;
    run_block(
        "se-d2",
        2,
        "se:l=0.1",
        &[10_000, 100_000, 1_000_000],
        Some(GridOverride {
            h: se2_grid.h(),
            m: 16,
        }),
        1e-8,
    )?;
    // Matérn nu=1/2 d=1 with the tabulated m=1555 override; h from the
    // fitted heuristic at the same tolerance
    let (mat_grid, _) =
        choose_params_matern_heuristic(0.5, 0.1, 1, 1e-4, false).map_err(|e| e.to_string())?;
    run_block(
        "mat12-d1",
        1,
        "matern:nu=0.5,l=0.1",
        &[1_000, 10_000, 100_000, 1_000_000],
        Some(GridOverride {
            h: mat_grid.h(),
            m: 1555,
        }),
        1e-7,
    )?;

    // accuracy targets
    for row in &rows {
        let eepm_limit = if row.kernel.starts_with("se") { 1e-3 } else { 2e-2 };
        if row.metrics.eepm_new > eepm_limit {
            return Err(format!(
                "{}: EEPM_new {:.3e} exceeds {eepm_limit:e}",
                row.label, row.metrics.eepm_new
            ));
        }
        if !(0.28..=0.32).contains(&row.metrics.rmse) {
            return Err(format!(
                "{}: RMSE {:.4} outside 0.30 +/- 0.02",
                row.label, row.metrics.rmse
            ));
        }
        if (row.metrics.rmse - row.metrics.rmse_ex).abs() > 0.01 {
            return Err(format!(
                "{}: RMSE {:.4} vs exact-reference RMSE {:.4} differ by more than 0.01",
                row.label, row.metrics.rmse, row.metrics.rmse_ex
            ));
        }
    }

    // per-iteration solve time independent of N at fixed m (Matérn block,
    // where a single apply is large enough to time reliably)
    let per_iter = |label: &str| -> Result<f64, String> {
        let row = rows
            .iter()
            .find(|r| r.label == label)
            .ok_or_else(|| format!("missing row {label}"))?;
        if row.metrics.iterations == 0 {
            return Err(format!("{label}: no iterations recorded"));
        }
        Ok(row.metrics.timings.solve / row.metrics.iterations as f64)
    };
    let t4 = per_iter("mat12-d1-N10000")?;
    let t6 = per_iter("mat12-d1-N1000000")?;
    let ratio = (t4 / t6).max(t6 / t4);
    if ratio > 1.5 {
        return Err(format!(
            "per-iteration solve time ratio {ratio:.2} between N=1e4 ({t4:.2e} s) and N=1e6 ({t6:.2e} s) exceeds 1.5"
        ));
    }

    // precompute scales linearly in N: log-log slope over 1e5..1e7 (d=1)
    let mut slope_pts = Vec::new();
    for (i, &n) in [100_000usize, 1_000_000, 10_000_000].iter().enumerate() {
        let row = BenchRow {
            label: format!("slope-N{n}"),
            spec: SyntheticSpec::new(1, n, 0.3, 142 + i as u64, 10),
            kernel: "se:l=0.1".into(),
            sigma_model: 0.3,
            eps: 1e-4,
            // a larger fixed grid so the FFT part stays subdominant and the
            // spread dominates as it does at scale
            grid_override: Some(GridOverride { h: 0.45, m: 500 }),
            eps_ref: Some(1e-8),
        };
        // timing only: fit directly instead of the full benchmark row
        let data = generate_synthetic(&row.spec).map_err(|e| e.to_string())?;
        let kernel = Kernel::parse(&row.kernel).map_err(|e| e.to_string())?;
        let grid = FourierGrid::new(0.45, 500, 1).map_err(|e| e.to_string())?;
        let mut times = Vec::new();
        for _ in 0..3 {
            let model = fit(
                &data.train,
                &kernel,
                0.3,
                GridSpec::Explicit(grid),
                &SolveOptions::new(1e-4),
            )
            .map_err(|e| e.to_string())?;
            times.push(model.stats().t_precompute);
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        slope_pts.push(((n as f64).ln(), times[1].ln()));
    }
    let mean_x: f64 = slope_pts.iter().map(|p| p.0).sum::<f64>() / slope_pts.len() as f64;
    let mean_y: f64 = slope_pts.iter().map(|p| p.1).sum::<f64>() / slope_pts.len() as f64;
    let slope: f64 = slope_pts
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum::<f64>()
        / slope_pts
            .iter()
            .map(|p| (p.0 - mean_x) * (p.0 - mean_x))
            .sum::<f64>();
    if !(0.85..=1.15).contains(&slope) {
        return Err(format!("precompute log-log slope {slope:.3} outside 1.0 +/- 0.15"));
    }

    let secs = start.elapsed().as_secs_f64();
    Ok(Table3Outcome {
        summary: format!(
            "{} table rows in spec, per-iter ratio {ratio:.2}, precompute slope {slope:.2}, {secs:.0} s",
            rows.len()
        ),
        rows,
    })
}

/// 7. Weight-space condition numbers: within the `N/sigma^2 + 1` bound for
/// all N, matching the published value at N=1e4, and never more than a
/// factor 5 below the bound across the (N, sigma) grid.
fn criterion_7() -> Result<String, String> {
    let start = Instant::now();
    let kernel = Kernel::squared_exponential(0.1).map_err(|e| e.to_string())?;
    // near machine-accuracy grid: small m suffices for the SE kernel
    let (grid, _) = choose_params_se(0.1, 1, 1e-13).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(7000);
    for &n in &[10usize, 32, 100, 316, 1000, 3162, 10_000] {
        let points = random_points(&mut rng, 1, n);
        let report = condition_report(&points, 1, &kernel, 0.3, &grid, false, None)
            .map_err(|e| e.to_string())?;
        if report.kappa_ws > report.bound {
            return Err(format!(
                "N={n}: kappa_ws {:.3e} exceeds bound {:.3e}",
                report.kappa_ws, report.bound
            ));
        }
        if n == 10_000 {
            let log_kappa = report.kappa_ws.log10();
            if (log_kappa - 4.43).abs() > 0.15 {
                return Err(format!(
                    "N=1e4: log10 kappa_ws = {log_kappa:.3}, expected 4.43 +/- 0.15"
                ));
            }
        }
    }
    // (N, sigma) grid: bound within a factor 5 of the observed kappa
    let mut worst = 0.0f64;
    for &n in &[100usize, 1000, 10_000] {
        for &sigma in &[0.1, 0.3, 1.0] {
            let points = random_points(&mut rng, 1, n);
            let report = condition_report(&points, 1, &kernel, sigma, &grid, false, None)
                .map_err(|e| e.to_string())?;
            let ratio = report.bound / report.kappa_ws;
            worst = worst.max(ratio);
            if ratio > 5.0 {
                return Err(format!(
                    "N={n} sigma={sigma}: bound/kappa_ws = {ratio:.2} exceeds 5"
                ));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(format!(
        "bound holds on all N, published value matched at N=1e4, worst bound/kappa {worst:.2}, {secs:.1} s"
    ))
}

/// 8. Perturbation-stability inequalities hold on 50 random small instances
/// with deliberately coarse grids, with slack no worse than 1 + 1e-8.
fn criterion_8() -> Result<String, String> {
    let start = Instant::now();
    let slack = 1.0 + 1e-8;
    let mut count = 0usize;
    for trial in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(8000 + trial);
        let d = 1 + (trial % 2) as usize;
        let n = 100 + (rng.random::<f64>() * 300.0) as usize;
        let points = random_points(&mut rng, d, n);
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let data = Dataset::new(d, points, y).map_err(|e| e.to_string())?;
        let kernel = match trial % 3 {
            0 => Kernel::squared_exponential(0.1),
            1 => Kernel::matern(0.5, 0.1),
            _ => Kernel::matern(1.5, 0.08),
        }
        .map_err(|e| e.to_string())?;
        let m = 3 + (trial % 5) as usize;
        let grid = FourierGrid::new(0.4, m, d).map_err(|e| e.to_string())?;
        let sigma = 0.3 + 0.2 * rng.random::<f64>();
        let report = stability_report(&data, &kernel, &grid, sigma, &[0.3, 0.7])
            .map_err(|e| e.to_string())?;
        if report.err_frobenius > report.frobenius_bound * slack {
            return Err(format!(
                "trial {trial}: ||E||_F {:.3e} > N eps {:.3e}",
                report.err_frobenius, report.frobenius_bound
            ));
        }
        if report.alpha_rel_err > report.alpha_bound * slack {
            return Err(format!(
                "trial {trial}: alpha perturbation {:.3e} > bound {:.3e}",
                report.alpha_rel_err, report.alpha_bound
            ));
        }
        if report.mu_rel_err > report.mu_bound * slack {
            return Err(format!(
                "trial {trial}: mean perturbation {:.3e} > bound {:.3e}",
                report.mu_rel_err, report.mu_bound
            ));
        }
        for (err, bound) in &report.new_target {
            if *err > bound * slack {
                return Err(format!(
                    "trial {trial}: new-target error {err:.3e} > bound {bound:.3e}"
                ));
            }
        }
        count += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(format!("{count} coarse-grid instances, all inequalities hold, {secs:.1} s"))
}

/// 9. Observed CG iteration counts stay within the worst-case bound
/// `ceil(log(1/eps) sqrt(N) / 2 sigma)` in every benchmark row.
fn criterion_9(rows: &[experiments::BenchResult]) -> Result<String, String> {
    let mut max_frac = 0.0f64;
    for row in rows {
        let bound = ((1.0f64 / 1e-4).ln() * (row.n as f64).sqrt() / (2.0 * 0.3)).ceil() as usize;
        if row.metrics.iterations > bound {
            return Err(format!(
                "{}: {} iterations exceed the bound {bound}",
                row.label, row.metrics.iterations
            ));
        }
        max_frac = max_frac.max(row.metrics.iterations as f64 / bound as f64);
    }
    Ok(format!(
        "{} rows, worst iterations/bound fraction {max_frac:.3}",
        rows.len()
    ))
}

/// 10. Large-N scaling stands in for the extreme-scale claims: N = 1e6 and
/// 1e7 in d = 1 and 2 complete with peak memory under 4 GB.
fn criterion_10() -> Result<String, String> {
    let start = Instant::now();
    let mut completed = Vec::new();
    for &(d, n) in &[(1usize, 1_000_000usize), (1, 10_000_000), (2, 1_000_000), (2, 10_000_000)] {
        let spec = SyntheticSpec::new(d, n, 0.3, 10_000 + d as u64, 30);
        let data = generate_synthetic(&spec).map_err(|e| e.to_string())?;
        let kernel = Kernel::squared_exponential(0.1).map_err(|e| e.to_string())?;
        let grid_spec = if d == 1 {
            GridSpec::Tolerance(1e-4)
        } else {
            let (g, _) = choose_params_se(0.1, 2, 1e-4).map_err(|e| e.to_string())?;
            GridSpec::Explicit(FourierGrid::new(g.h(), 16, 2).map_err(|e| e.to_string())?)
        };
        let model = fit(&data.train, &kernel, 0.3, grid_spec, &SolveOptions::new(1e-4))
            .map_err(|e| format!("d={d} N={n}: {e}"))?;
        let mu = model
            .predict_mean(&data.test_points)
            .map_err(|e| format!("d={d} N={n} predict: {e}"))?;
        if !mu.iter().all(|v| v.is_finite()) {
            return Err(format!("d={d} N={n}: non-finite predictions"));
        }
        completed.push(format!("d={d},N={n:.0e}"));
    }
    let peak = peak_memory_bytes();
    if peak > 4 * 1024 * 1024 * 1024 {
        return Err(format!(
            "peak memory {:.2} GB exceeds 4 GB",
            peak as f64 / (1024.0 * 1024.0 * 1024.0)
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(format!(
        "[{}] completed, peak memory {:.2} GB, {secs:.0} s",
        completed.join(", "),
        peak as f64 / (1024.0 * 1024.0 * 1024.0)
    ))
}

#[test]
fn acceptance() {
    let mut results: Vec<Criterion> = Vec::new();
    let mut push = |index: usize, name: &'static str, outcome: Result<String, String>| {
        results.push(Criterion {
            index,
            name,
            outcome,
        });
    };

    // criterion 10 runs first so its peak-memory reading is not inflated by
    // the dense reference solves of criterion 6
    let c10 = criterion_10();

    push(1, "oracle equivalence (weight/function space)", criterion_1());
    push(2, "Toeplitz fast apply vs dense Gram", criterion_2());
    push(3, "NUFFT tolerance contract", criterion_3());
    push(4, "kernel error-bound soundness and rule targets", criterion_4());
    push(5, "Matérn RMS error tracks the fitted heuristic", criterion_5());

    let table3 = criterion_6();
    let (c6, rows) = match table3 {
        Ok(out) => (Ok(out.summary), out.rows),
        Err(e) => (Err(e), Vec::new()),
    };
    push(6, "benchmark table reproduction (desk scale)", c6);
    push(7, "condition-number bound and published value", criterion_7());
    push(8, "stability inequalities on coarse grids", criterion_8());
    push(
        9,
        "CG iteration bound",
        if rows.is_empty() {
            Err("no benchmark rows available".into())
        } else {
            criterion_9(&rows)
        },
    );
    push(10, "large-N scaling within 4 GB", c10);

    results.sort_by_key(|c| c.index);
    let mut failed = 0usize;
    for c in &results {
        match &c.outcome {
            Ok(detail) => println!("[PASS] criterion {:>2}: {} — {}", c.index, c.name, detail),
            Err(reason) => {
                failed += 1;
                println!("[FAIL] criterion {:>2}: {} — {}", c.index, c.name, reason);
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
