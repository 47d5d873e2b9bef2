//! End-to-end release gates, run as a plain binary (`harness = false`) so
//! the per-criterion lines always reach the terminal. One pass/fail line
//! is printed per criterion; the process exits nonzero if any gate fails.

use std::sync::OnceLock;
use std::time::Instant;

use confmerge::conformal::{
    build_table, conformal_bound, evaluate_coverage, monotonize, shrinkage_report, ConformalTable,
};
use confmerge::cubic::{eval_trajectory, solve_boundary_coeffs, trajectory_extremes, CubicCoeffs};
use confmerge::hdv::{rollout, sample_scenario, DriverParams, Scenario, ScenarioTemplate};
use confmerge::planner::{kinematic_feasible, solve_problem2};
use confmerge::predictor::{
    check_gradients, train, NetParams, NetPredictor, PhysicsPredictor, Predictor, TrainConfig,
};
use confmerge::runner::{batch_evaluate, run_closed_loop, PlannerMode, RunResult};
use confmerge::state::{HdvTrajectory, VehicleState};
use confmerge::zone::ZoneConfig;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Everything the data-dependent gates share: simulated splits, a trained
/// network, the physics baseline, and both calibration tables.
struct Pipeline {
    config: ZoneConfig,
    train_set: Vec<HdvTrajectory>,
    calib: Vec<HdvTrajectory>,
    test: Vec<HdvTrajectory>,
    physics: PhysicsPredictor,
    physics_table: ConformalTable,
    net: NetPredictor,
    net_table: ConformalTable,
}

static PIPELINE: OnceLock<Pipeline> = OnceLock::new();

fn trajectories(seed_base: u64, want: usize, config: &ZoneConfig) -> Vec<HdvTrajectory> {
    let template = ScenarioTemplate::default();
    let mut out = Vec::new();
    let mut seed = seed_base;
    while out.len() < want {
        let s = sample_scenario(seed, &template).expect("default template is valid");
        let trace = rollout(&s, None, config, seed);
        for n in 0..s.hdvs.len() {
            out.push(trace.trajectory(n));
        }
        seed += 1;
    }
    out.truncate(want);
    out
}

fn pipeline() -> &'static Pipeline {
    PIPELINE.get_or_init(|| {
        let config = ZoneConfig::default();
        // disjoint seed ranges keep the three splits independent draws
        let train_set = trajectories(1000, 150, &config);
        let calib = trajectories(2500, 200, &config);
        let test = trajectories(3000, 200, &config);
        let hyper = TrainConfig {
            learning_rate: 2e-3,
            epochs: 60,
            batch_size: 8,
            seed: 7,
        };
        let trained = train(&train_set, &config, &hyper).expect("training stays finite");
        let net = NetPredictor::new(trained.params, config.clone()).expect("trained shapes match");
        let physics = PhysicsPredictor::new(config.clone()).expect("default config is valid");
        let physics_table =
            build_table(&calib, &physics, &config).expect("every cell has calibration data");
        let net_table =
            build_table(&calib, &net, &config).expect("every cell has calibration data");
        Pipeline {
            config,
            train_set,
            calib,
            test,
            physics,
            physics_table,
            net,
            net_table,
        }
    })
}

// --- criterion 1: quantile rule vs independent sort oracle ---

fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    for case in 0..1000 {
        let k: usize = rng.gen_range(1..=50);
        // rational epsilon keeps the oracle in exact integer arithmetic
        let den: usize = rng.gen_range(2..1000);
        let num: usize = rng.gen_range(1..den);
        let eps = num as f64 / den as f64;
        let scores: Vec<f64> = (0..k)
            .map(|_| {
                if rng.gen_bool(0.05) {
                    f64::INFINITY
                } else {
                    rng.gen_range(0.0..100.0)
                }
            })
            .collect();
        let got = conformal_bound(&scores, eps);
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let q = ((k + 1) * (den - num)).div_ceil(den).max(1);
        let want = if q <= k { sorted[q - 1] } else { f64::INFINITY };
        if got.to_bits() != want.to_bits() {
            return Err(format!(
                "case {case}: bound {got} differs from the {q}-th order statistic {want}"
            ));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 1.0 {
        return Err(format!("took {elapsed:.2} s, budget is 1 s"));
    }
    Ok(format!("1000 score sets in {:.0} ms", elapsed * 1e3))
}

// --- criterion 2: empirical coverage on held-out data ---

/// Per-cell floor: 0.9 minus two standard errors. Both the bound estimate
/// (K calibration scores) and the test rate (n trials) fluctuate, and
/// trajectories already past the candidate score exactly zero, so only the
/// uncrossed counts measure either sample size.
fn coverage_gate(
    name: &str,
    predictor: &dyn Predictor,
    table: &ConformalTable,
    p: &Pipeline,
) -> Result<f64, String> {
    let report = evaluate_coverage(&p.test, predictor, table, &p.config)
        .map_err(|e| format!("{name}: {e}"))?;
    let pooled = report.pooled.rate();
    if !(0.86..=0.96).contains(&pooled) {
        return Err(format!(
            "{name}: pooled coverage {pooled:.4} outside [0.86, 0.96]"
        ));
    }
    for (t, row) in report.cells.iter().enumerate() {
        let now = t as f64 * p.config.dt;
        for (l, cell) in row.iter().enumerate() {
            if cell.total == 0 {
                continue;
            }
            let n_unc = cell.total - cell.crossed;
            let k_unc = p
                .calib
                .iter()
                .filter(|traj| traj.arrivals.get(l).is_some_and(|tau| tau > now))
                .count();
            if n_unc == 0 || k_unc == 0 {
                continue;
            }
            let floor = 0.9 - 2.0 * (0.09 / k_unc as f64 + 0.09 / n_unc as f64).sqrt();
            if cell.rate() < floor - 1e-12 {
                return Err(format!(
                    "{name}: cell (t={t}, l={l}) covers {:.3}, floor {:.3} \
                     (calib uncrossed {k_unc}, test uncrossed {n_unc})",
                    cell.rate(),
                    floor
                ));
            }
        }
    }
    Ok(pooled)
}

fn criterion_2() -> Result<String, String> {
    let start = Instant::now();
    let p = pipeline();
    let physics = coverage_gate("physics", &p.physics, &p.physics_table, p)?;
    let net = coverage_gate("trained", &p.net, &p.net_table, p)?;
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 300.0 {
        return Err(format!("took {elapsed:.0} s, budget is 300 s"));
    }
    Ok(format!(
        "pooled physics {physics:.3}, trained {net:.3}, all per-cell floors hold ({elapsed:.0} s)"
    ))
}

// --- criterion 3: residuals shrink as observations accumulate ---

fn criterion_3() -> Result<String, String> {
    let p = pipeline();
    let rows = shrinkage_report(&p.test, &p.net, &p.config).map_err(|e| e.to_string())?;
    let mut worst_rho = f64::NEG_INFINITY;
    let mut worst_p = 0.0f64;
    for row in &rows {
        if !(row.rho < 0.0 && row.p_value < 0.05) {
            return Err(format!(
                "candidate {}: rho {:.3}, p {:.2e}",
                row.candidate, row.rho, row.p_value
            ));
        }
        worst_rho = worst_rho.max(row.rho);
        worst_p = worst_p.max(row.p_value);
    }
    Ok(format!(
        "all {} candidates trend down, worst rho {:.2}, worst p {:.1e}",
        rows.len(),
        worst_rho,
        worst_p
    ))
}

// --- criterion 4: search optimality vs exhaustive enumeration ---

/// Full scan over (candidate, merge time, merge speed) with the contract's
/// candidate-time set, keeping the lexicographic best.
fn brute_force(
    cav: &VehicleState,
    predictions: &[Vec<f64>],
    settled: &[Vec<bool>],
    row: &[f64],
    config: &ZoneConfig,
) -> Option<(f64, usize, f64, f64)> {
    let delta = config.headway_delta;
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for l in 0..config.num_candidates() {
        let d = config.candidate_positions[l] - cav.position;
        if d <= 0.0 {
            continue;
        }
        let windows: Vec<(f64, f64)> = predictions
            .iter()
            .zip(settled)
            .map(|(pred, s)| {
                let c = if s[l] { 0.0 } else { row[l] };
                (pred[l], delta + c)
            })
            .collect();
        let lb = (d / config.v_max).max(config.dt);
        let k_min = ((lb / config.dt) - 1e-9).ceil() as usize;
        let mut times: Vec<f64> = (k_min..=config.horizon_steps)
            .map(|k| k as f64 * config.dt)
            .collect();
        for &(c, r) in &windows {
            if c.is_finite() && r.is_finite() {
                let t = c + r + config.dt * 1e-3;
                if t >= config.dt && t <= config.horizon_seconds() {
                    times.push(t);
                }
            }
        }
        for &t_m in &times {
            let mut margin = f64::INFINITY;
            for &(c, r) in &windows {
                if !r.is_finite() {
                    margin = f64::NEG_INFINITY;
                    break;
                }
                if !c.is_finite() {
                    continue;
                }
                margin = margin.min((t_m - c).abs() - r);
            }
            if !(margin >= 0.0) {
                continue;
            }
            // any lower speed is dominated by the first feasible one
            let mut v = config.v_max;
            while v >= config.v_min - 1e-12 {
                if kinematic_feasible(cav.speed, d, t_m, v, config) {
                    let better = match &best {
                        None => true,
                        Some(b) => (t_m, -margin, l, -v) < (b.0, -b.3, b.1, -b.2),
                    };
                    if better {
                        best = Some((t_m, l, v, margin));
                    }
                    break;
                }
                v -= config.merge_speed_step;
            }
        }
    }
    best
}

fn criterion_4() -> Result<String, String> {
    let start = Instant::now();
    let config = ZoneConfig::default();
    let num_l = config.num_candidates();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut feasible = 0;
    for case in 0..500 {
        let n: usize = rng.gen_range(0..=3);
        let predictions: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..num_l)
                    .map(|_| {
                        if rng.gen_bool(0.06) {
                            f64::INFINITY
                        } else {
                            rng.gen_range(0.5..14.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let settled: Vec<Vec<bool>> = (0..n)
            .map(|_| (0..num_l).map(|_| rng.gen_bool(0.15)).collect())
            .collect();
        let row: Vec<f64> = (0..num_l)
            .map(|_| {
                if rng.gen_bool(0.05) {
                    f64::INFINITY
                } else {
                    rng.gen_range(0.0..2.5)
                }
            })
            .collect();
        let cav = VehicleState::new(rng.gen_range(-20.0..60.0), rng.gen_range(8.0..35.0));

        let got = solve_problem2(&cav, &predictions, &settled, &row, &config);
        let want = brute_force(&cav, &predictions, &settled, &row, &config);
        match (&got, &want) {
            (None, None) => {}
            (Some(g), Some(w)) => {
                feasible += 1;
                if g.merge_time != w.0
                    || g.candidate != w.1
                    || g.merge_speed != w.2
                    || g.margin != w.3
                {
                    return Err(format!(
                        "case {case}: solver (T={}, l={}, v={}) vs brute force (T={}, l={}, v={})",
                        g.merge_time, g.candidate, g.merge_speed, w.0, w.1, w.2
                    ));
                }
            }
            _ => {
                return Err(format!(
                    "case {case}: feasibility verdicts differ (solver {}, brute force {})",
                    got.is_some(),
                    want.is_some()
                ))
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 120.0 {
        return Err(format!("took {elapsed:.0} s, budget is 120 s"));
    }
    Ok(format!(
        "500 scenarios ({feasible} feasible) agree exactly in {elapsed:.1} s"
    ))
}

// --- criterion 5: boundary conditions and extremes vs dense sampling ---

/// Dense-sampling extremes oracle: coarse scan, then five rounds of local
/// grid refinement around each running best. Speed is quadratic in t and
/// acceleration linear, so the refined sample lands within ~1e-13 of the
/// true extremum.
fn dense_extremes(psi: &CubicCoeffs, t_m: f64) -> (f64, f64, f64, f64) {
    let n = 256;
    let mut best = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
    let mut args = [[0.0f64; 2]; 2];
    for i in 0..=n {
        let t = t_m * i as f64 / n as f64;
        let (_, v, u) = eval_trajectory(psi, t);
        for (s, val) in [v, u].into_iter().enumerate() {
            if val < best[s][0] {
                best[s][0] = val;
                args[s][0] = t;
            }
            if val > best[s][1] {
                best[s][1] = val;
                args[s][1] = t;
            }
        }
    }
    let m = 64;
    for s in 0..2 {
        for d in 0..2 {
            let mut center = args[s][d];
            let mut cell = t_m / n as f64;
            for _ in 0..5 {
                let lo = (center - cell).max(0.0);
                let hi = (center + cell).min(t_m);
                for i in 0..=m {
                    let t = lo + (hi - lo) * i as f64 / m as f64;
                    let (_, v, u) = eval_trajectory(psi, t);
                    let val = if s == 0 { v } else { u };
                    if d == 0 && val < best[s][0] {
                        best[s][0] = val;
                        center = t;
                    }
                    if d == 1 && val > best[s][1] {
                        best[s][1] = val;
                        center = t;
                    }
                }
                cell = (hi - lo) / m as f64;
            }
        }
    }
    (best[0][0], best[0][1], best[1][0], best[1][1])
}

fn criterion_5() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut worst = 0.0f64;
    for case in 0..100_000 {
        let v0 = rng.gen_range(0.0..35.0);
        let v_m = rng.gen_range(5.0..35.0);
        let p_m = rng.gen_range(1.0..150.0);
        let t_m = rng.gen_range(0.4..12.0);
        let psi = solve_boundary_coeffs(v0, p_m, v_m, t_m, 0.1)
            .map_err(|e| format!("case {case}: {e}"))?;

        let (p0, s0, _) = eval_trajectory(&psi, 0.0);
        let (p1, s1, _) = eval_trajectory(&psi, t_m);
        let bc = [
            p0.abs(),
            (s0 - v0).abs() / (1.0 + v0.abs()),
            (p1 - p_m).abs() / (1.0 + p_m.abs()),
            (s1 - v_m).abs() / (1.0 + v_m.abs()),
        ];
        for e in bc {
            if e > 1e-9 {
                return Err(format!("case {case}: boundary error {e:.2e}"));
            }
            worst = worst.max(e);
        }

        let ex = trajectory_extremes(&psi, t_m);
        let (v_lo, v_hi, u_lo, u_hi) = dense_extremes(&psi, t_m);
        for (closed, sampled) in [
            (ex.v_lo, v_lo),
            (ex.v_hi, v_hi),
            (ex.u_lo, u_lo),
            (ex.u_hi, u_hi),
        ] {
            let e = (closed - sampled).abs() / (1.0 + closed.abs());
            if e > 1e-9 {
                return Err(format!(
                    "case {case}: extreme {closed} vs dense sample {sampled} (rel {e:.2e})"
                ));
            }
            worst = worst.max(e);
        }
    }
    Ok(format!(
        "100000 cases, worst relative error {:.1e} ({:.1} s)",
        worst,
        start.elapsed().as_secs_f64()
    ))
}

// --- criterion 6: analytic gradients vs central differences ---

fn criterion_6() -> Result<String, String> {
    let p = pipeline();
    let mut worst = 0.0f64;
    for s in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC6 + s);
        let batch: Vec<HdvTrajectory> = rand::seq::index::sample(&mut rng, p.train_set.len(), 3)
            .iter()
            .map(|i| p.train_set[i].clone())
            .collect();
        let params = NetParams::init(p.config.num_candidates(), 600 + s);
        let report = check_gradients(&params, &batch, &p.config, 150, 60 + s);
        if report.max_rel_error >= 1e-4 {
            return Err(format!(
                "minibatch {s}: relative error {:.2e} at flat index {}",
                report.max_rel_error, report.argmax
            ));
        }
        worst = worst.max(report.max_rel_error);
    }
    Ok(format!("10 minibatches, worst relative error {worst:.1e}"))
}

// --- criterion 7: once feasible, feasible at every later replan ---

fn criterion_7() -> Result<String, String> {
    let p = pipeline();
    let mono = monotonize(&p.physics_table);
    let template = ScenarioTemplate::default();
    let num_l = p.config.num_candidates();
    let mut seed = 40_000u64;
    let mut replayed = 0;
    let mut replans = 0usize;
    while replayed < 100 {
        let s = sample_scenario(seed, &template).expect("default template is valid");
        seed += 1;
        let trace = rollout(&s, None, &p.config, s.seed);
        // predictions frozen at their step-0 values, absolute seconds
        let preds0: Vec<Vec<f64>> = (0..s.hdvs.len())
            .map(|n| {
                let mut session = p.physics.session(n);
                session.observe(&trace.observations[n][0]);
                session.predict(0.0)
            })
            .collect();
        let settled = vec![vec![false; num_l]; s.hdvs.len()];
        let Some(plan0) = solve_problem2(&s.cav, &preds0, &settled, mono.row(0), &p.config) else {
            continue;
        };
        replayed += 1;

        let mut t = 1usize;
        while t as f64 * p.config.dt <= plan0.merge_time - p.config.dt + 1e-9
            && t <= p.config.horizon_steps
        {
            let now = t as f64 * p.config.dt;
            // the vehicle tracks the original plan between replans
            let (dp, v, _) = eval_trajectory(&plan0.psi, now);
            let cav_t = VehicleState::new(s.cav.position + dp, v);
            let shifted: Vec<Vec<f64>> = preds0
                .iter()
                .map(|r| r.iter().map(|mu| mu - now).collect())
                .collect();
            if solve_problem2(&cav_t, &shifted, &settled, mono.row(t), &p.config).is_none() {
                return Err(format!(
                    "seed {}: feasible at t=0 (T={:.2} s) but infeasible at step {t}",
                    s.seed, plan0.merge_time
                ));
            }
            replans += 1;
            t += 1;
        }
    }
    Ok(format!(
        "100 initially feasible scenarios, {replans} replans, 0 counterexamples"
    ))
}

// --- criterion 8: Monte-Carlo closed-loop safety ---

fn criterion_8() -> Result<String, String> {
    let start = Instant::now();
    let p = pipeline();
    let template = ScenarioTemplate::default();
    let seeds: Vec<u64> = (50_000..50_200).collect();
    let report = batch_evaluate(&template, &seeds, &p.net, &p.net_table, &p.config)
        .map_err(|e| e.to_string())?;

    if report.merged_count < 100 {
        return Err(format!(
            "only {}/{} episodes merged; the violation bound would be vacuous",
            report.merged_count, report.num_runs
        ));
    }
    let bound = 0.1 + 1.96 * (0.1f64 * 0.9 / 200.0).sqrt();
    if report.violation_rate > bound {
        return Err(format!(
            "violation rate {:.4} exceeds {bound:.4} ({} of {} merged)",
            report.violation_rate, report.violation_count, report.merged_count
        ));
    }
    if report.matched_count == 0 {
        return Err("no seed merged under both controllers".into());
    }
    if report.matched_oracle_mean > report.matched_conformal_mean + 1e-9 {
        return Err(format!(
            "oracle mean {:.3} s exceeds conformal mean {:.3} s on {} matched seeds",
            report.matched_oracle_mean, report.matched_conformal_mean, report.matched_count
        ));
    }
    Ok(format!(
        "{}/{} merged, violation rate {:.3} <= {:.3}, oracle {:.2} s <= conformal {:.2} s on {} seeds ({:.0} s)",
        report.merged_count,
        report.num_runs,
        report.violation_rate,
        bound,
        report.matched_oracle_mean,
        report.matched_conformal_mean,
        report.matched_count,
        start.elapsed().as_secs_f64()
    ))
}

// --- criterion 9: altruism flips the merge ordering ---

fn quiet(idm_v0: f64, rho: f64) -> DriverParams {
    DriverParams {
        idm_v0,
        rho,
        noise_std: 0.0,
        ..DriverParams::default()
    }
}

/// Two-vehicle platoon with the ramp vehicle between them longitudinally;
/// only the follower's courtesy level varies.
fn flip_scenario(rho: f64) -> Scenario {
    Scenario {
        hdvs: vec![
            (VehicleState::new(50.0, 25.5), quiet(25.5, 0.0)),
            (VehicleState::new(2.0, 24.5), quiet(24.5, rho)),
        ],
        cav: VehicleState::new(10.0, 28.0),
        seed: 0,
    }
}

/// Did the ramp vehicle end up ahead of the follower at the executed
/// candidate? `None` when it never merged.
fn ahead_of_follower(run: &RunResult) -> Option<bool> {
    let l = run.candidate?;
    let t_m = run.merge_time?;
    Some(match run.trace.arrivals[1].get(l) {
        Some(tau) => t_m < tau,
        None => true,
    })
}

/// The per-step export a plot consumes: time, every vehicle's kinematic
/// state, and the live plan. Returns the row count.
fn check_plot_rows(run: &RunResult, config: &ZoneConfig) -> Result<usize, String> {
    let cav = run
        .trace
        .cav_states
        .as_ref()
        .ok_or("trace is missing the ramp vehicle series")?;
    let samples = run.trace.num_samples();
    if cav.len() != samples {
        return Err(format!(
            "ramp series has {} samples, highway series {samples}",
            cav.len()
        ));
    }
    for k in 0..samples {
        for series in &run.trace.hdv_states {
            let st = series[k];
            if !(st.position.is_finite() && st.speed.is_finite()) {
                return Err(format!("non-finite highway state at step {k}"));
            }
        }
        if !(cav[k].position.is_finite() && cav[k].speed.is_finite()) {
            return Err(format!("non-finite ramp state at step {k}"));
        }
        if let Some(Some(plan)) = run.plans.get(k) {
            if plan.candidate >= config.num_candidates()
                || !plan.merge_time.is_finite()
                || !(plan.margin >= 0.0)
            {
                return Err(format!("inconsistent plan row at step {k}"));
            }
        }
    }
    Ok(samples)
}

fn criterion_9() -> Result<String, String> {
    let p = pipeline();
    let run = |rho: f64| {
        run_closed_loop(
            &flip_scenario(rho),
            PlannerMode::Conformal {
                predictor: &p.physics,
                table: &p.physics_table,
            },
            &p.config,
        )
        .map_err(|e| e.to_string())
    };
    let selfish = run(0.0)?;
    let polite = run(5.0)?;

    let a = ahead_of_follower(&selfish);
    let b = ahead_of_follower(&polite);
    if !(selfish.merged && polite.merged) {
        return Err(format!(
            "merge missing: selfish {:?} at {:?} s, polite {:?} at {:?} s, min row bound {:.2}",
            selfish.candidate,
            selfish.merge_time,
            polite.candidate,
            polite.merge_time,
            p.physics_table
                .row(0)
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
        ));
    }
    if a == b {
        return Err(format!(
            "ordering did not flip: selfish ahead={a:?} (l={:?}, T={:?}), polite ahead={b:?} (l={:?}, T={:?})",
            selfish.candidate, selfish.merge_time, polite.candidate, polite.merge_time
        ));
    }

    let rows_a = check_plot_rows(&selfish, &p.config)?;
    let rows_b = check_plot_rows(&polite, &p.config)?;
    let cav_a = selfish.trace.cav_states.as_ref().unwrap();
    let cav_b = polite.trace.cav_states.as_ref().unwrap();
    let spread = cav_a
        .iter()
        .zip(cav_b)
        .map(|(x, y)| (x.position - y.position).abs())
        .fold(0.0, f64::max);
    if spread < 1.0 {
        return Err(format!(
            "position panels are indistinguishable (max gap {spread:.2} m)"
        ));
    }
    Ok(format!(
        "selfish ahead={}, polite ahead={}, {rows_a}+{rows_b} plot rows, panel gap {spread:.1} m",
        a.unwrap(),
        b.unwrap()
    ))
}

fn main() {
    let gates: [(&str, fn() -> Result<String, String>); 9] = [
        ("quantile rule equals the sort oracle", criterion_1),
        ("held-out coverage within bounds", criterion_2),
        ("uncertainty shrinks over time", criterion_3),
        ("planner matches brute-force enumeration", criterion_4),
        ("cubic boundary and extreme exactness", criterion_5),
        ("training gradients match finite differences", criterion_6),
        (
            "feasibility is recursive under monotone bounds",
            criterion_7,
        ),
        ("closed-loop violation rate within tolerance", criterion_8),
        ("altruism flips the merge ordering", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, gate)) in gates.iter().enumerate() {
        match gate() {
            Ok(detail) => println!("criterion {}: PASS - {name} ({detail})", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL - {name} ({detail})", i + 1);
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} of {} acceptance criteria failed", gates.len());
        std::process::exit(1);
    }
}
