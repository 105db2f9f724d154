//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines are always
//! printed. Tolerances are pinned as constants next to each check.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sabf::channel::{build_channel, normalized_channel};
use sabf::deployment::{corollary1_bound, gauss_lobatto_points, grouped_layout, rak_closed_form, spread_groups, vandermonde_objective};
use sabf::geometry::{NodeLayout, Scenario};
use sabf::harness::{load_config, run_experiment, ExperimentConfig, ExperimentReport};
use sabf::precoding::{
    best_lmi_margin, solve_precoder, solve_relaxed, worst_case_eve_snr, zero_forcing, PrecoderSolution,
    RoundingMethod, SecureSdpProblem,
};
use sabf::sdp::SdpSettings;
use sabf::simulation::{simulate_block, TransmissionPlan};
use sabf::{CMat, CVec, C64};

type Outcome = Result<String, String>;
type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn config(text: &str) -> ExperimentConfig {
    load_config(text).expect("shipped config loads")
}

fn run(cfg: &ExperimentConfig) -> ExperimentReport {
    let r = run_experiment(cfg).expect("experiment runs");
    assert!(r.all_ok(), "{} run has failed rows: {:?}", r.metadata.kind, r.rows);
    r
}

fn vandermonde_sq(x: &[f64]) -> f64 {
    let mut p = 1.0;
    for j in 0..x.len() {
        for i in 0..j {
            p *= (x[j] - x[i]).powi(2);
        }
    }
    p
}

/// Grid search over sorted tuples followed by coordinate refinement with a
/// halving step; `ln Π(x_j − x_i)²` is concave on the ordered box.
fn brute_force_fekete(k: usize) -> Vec<f64> {
    let steps = 20;
    let grid: Vec<f64> = (0..=steps).map(|i| -1.0 + 2.0 * i as f64 / steps as f64).collect();
    fn walk(grid: &[f64], k: usize, start: usize, cur: &mut Vec<f64>, best: &mut (f64, Vec<f64>)) {
        if cur.len() == k {
            let v = vandermonde_sq(cur);
            if v > best.0 {
                *best = (v, cur.clone());
            }
            return;
        }
        for i in start..grid.len() {
            cur.push(grid[i]);
            walk(grid, k, i + 1, cur, best);
            cur.pop();
        }
    }
    let mut best = (0.0, Vec::new());
    walk(&grid, k, 0, &mut Vec::new(), &mut best);
    let (mut val, mut x) = best;
    let mut h = 1.0 / steps as f64;
    while h > 1e-9 {
        let mut improved = true;
        while improved {
            improved = false;
            for i in 0..k {
                for s in [h, -h] {
                    let old = x[i];
                    x[i] = (old + s).clamp(-1.0, 1.0);
                    let v = vandermonde_sq(&x);
                    if v > val {
                        val = v;
                        improved = true;
                    } else {
                        x[i] = old;
                    }
                }
            }
        }
        h /= 2.0;
    }
    x.sort_by(f64::total_cmp);
    x
}

fn c1_fekete() -> Outcome {
    const COORD_TOL: f64 = 1e-3;
    const BUDGET_S: f64 = 10.0;
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 2..=6 {
        let got = gauss_lobatto_points(k).map_err(|e| e.to_string())?.points;
        let oracle = brute_force_fekete(k);
        let err = got.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(err <= COORD_TOL, || format!("K={k}: coordinate error {err:.2e}"))?;
        worst = worst.max(err);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < BUDGET_S, || format!("took {secs:.2} s"))?;
    Ok(format!("K=2..6 max coordinate error {worst:.1e} (tol {COORD_TOL:.0e}), {secs:.2} s"))
}

/// `|R_kk|²` of the QR factorization of the `L×K` Vandermonde matrix.
fn qr_oracle(x: &[f64], k: usize) -> Vec<f64> {
    let v = nalgebra::DMatrix::from_fn(x.len(), k, |i, j| x[i].powi(j as i32));
    let r = v.qr().r();
    (0..k).map(|j| r[(j, j)].powi(2)).collect()
}

fn c2_vandermonde_qr() -> Outcome {
    const REL_TOL: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_r, mut worst_p): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let l = rng.random_range(2..=6);
        let k = rng.random_range(1..=l);
        let x: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let closed = rak_closed_form(&x, k).map_err(|e| e.to_string())?;
        for (a, b) in closed.iter().zip(qr_oracle(&x, k)) {
            worst_r = worst_r.max((a - b).abs() / b);
        }
        // Cauchy-Binet: the Gram determinant is the sum of squared K-minors.
        let mut direct = 0.0;
        for mask in 0u32..(1 << l) {
            if mask.count_ones() as usize == k {
                let sub: Vec<f64> = (0..l).filter(|i| mask >> i & 1 == 1).map(|i| x[i]).collect();
                direct += vandermonde_sq(&sub);
            }
        }
        let prod: f64 = closed.iter().product();
        worst_p = worst_p.max((prod - direct).abs() / direct);
        let obj = vandermonde_objective(&x, k).map_err(|e| e.to_string())?;
        worst_p = worst_p.max((obj - direct).abs() / direct);
    }
    ensure(worst_r <= REL_TOL && worst_p <= REL_TOL, || format!("r_A error {worst_r:.2e}, product error {worst_p:.2e}"))?;
    Ok(format!("200 draws: r²_A vs QR {worst_r:.1e}, product vs 𝒟 {worst_p:.1e} (tol {REL_TOL:.0e})"))
}

fn ln_lambda(delta: &[f64], n: usize, omega: f64, k: usize) -> f64 {
    let mut s: Vec<f64> = normalized_channel(n, delta, omega, 0.0).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    2.0 * s[k].ln()
}

/// `d ln λ_k / d ln ω` by a central difference in `ln ω`.
fn log_slope(delta: &[f64], n: usize, omega: f64, k: usize) -> f64 {
    let h: f64 = 1e-2;
    (ln_lambda(delta, n, omega * h.exp(), k) - ln_lambda(delta, n, omega * (-h).exp(), k)) / (2.0 * h)
}

fn c3_eigen_slopes() -> Outcome {
    const REL_TOL: f64 = 0.05;
    const BUDGET_S: f64 = 1.0;
    let t = Instant::now();
    let delta = gauss_lobatto_points(4).map_err(|e| e.to_string())?.points;
    let n = 32;
    let mut detail = Vec::new();
    for k in 0..3 {
        let target = 2.0 * k as f64;
        // The ratio ln λ_k / ln ω carries the constant prefactor as a 1/ln ω
        // offset, so it approaches the exponent slowly but monotonically. The
        // local slope strips the prefactor and is what the 5% bound is held to.
        let ratio_err: Vec<f64> =
            [1e-2, 1e-3, 1e-4].iter().map(|&w: &f64| (ln_lambda(&delta, n, w, k) / w.ln() - target).abs()).collect();
        let at = log_slope(&delta, n, 1e-3, k);
        // For k = 1 the target slope is 0; the tolerance is taken on the scale of one slope unit.
        let tol = REL_TOL * target.max(1.0);
        ensure((at - target).abs() <= tol, || format!("k={}: slope {at:.4} vs {target}", k + 1))?;
        ensure(ratio_err[0] > ratio_err[1] && ratio_err[1] > ratio_err[2], || {
            format!("k={}: non-monotone approach {ratio_err:?}", k + 1)
        })?;
        detail.push(format!("k={} slope {at:.5}, ratio error {:.3}→{:.3}", k + 1, ratio_err[0], ratio_err[2]));
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < BUDGET_S, || format!("took {secs:.3} s"))?;
    Ok(format!("ω=1e-3: {} (tol 5%), {secs:.3} s", detail.join("; ")))
}

fn c4_grouped_bound() -> Outcome {
    const EQ_TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut max_ratio: f64 = 0.0;
    for _ in 0..100 {
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let c = corollary1_bound(&x, 3).map_err(|e| e.to_string())?;
        ensure(c.holds && c.lhs <= c.rhs, || format!("bound violated: {} > {}", c.lhs, c.rhs))?;
        max_ratio = max_ratio.max(c.lhs / c.rhs);
    }
    let g = grouped_layout(6, 3).map_err(|e| e.to_string())?;
    let c = corollary1_bound(&g, 3).map_err(|e| e.to_string())?;
    // μ = {−1, 0, 1}: Π(μ_j − μ_i)² = 4 and (L/K)^K = 8.
    let expected = 4.0 * 8.0;
    ensure((c.rhs - expected).abs() <= EQ_TOL * expected, || format!("rhs {} vs {expected}", c.rhs))?;
    let rel = (c.lhs - c.rhs).abs() / c.rhs;
    ensure(rel <= EQ_TOL, || format!("grouped layout off equality by {rel:.2e}"))?;
    Ok(format!("100 draws max lhs/rhs {max_ratio:.3}; grouped equality error {rel:.1e} (tol {EQ_TOL:.0e})"))
}

/// Reference-scenario precoding instances: Fekete and spread-group layouts,
/// with and without eavesdropper uncertainty.
fn reference_instances() -> Vec<SecureSdpProblem> {
    let scn = Scenario::default();
    let mut out = Vec::new();
    for (l, k, spread) in [(8, 1, false), (12, 1, false), (16, 1, false), (8, 2, true), (12, 2, true), (16, 2, true)] {
        for rot in [0.0, 0.2] {
            for rel in [0.0, 0.05] {
                let delta = if spread {
                    spread_groups(&grouped_layout(l, k).unwrap(), k, 0.2 / (l / k - 1) as f64).unwrap()
                } else {
                    gauss_lobatto_points(l).unwrap().points
                };
                let layout = NodeLayout::new(delta, 4.0, rot).unwrap();
                let ch = build_channel(&scn, &layout, k).unwrap();
                let mut p =
                    SecureSdpProblem::from_channel(&scn, &layout, &ch, sabf::channel::PhaseModel::Geometric).unwrap();
                for e in &mut p.eves {
                    e.radius = rel * e.estimate.norm();
                }
                out.push(p);
            }
        }
    }
    out
}

fn solve_all(problems: &[SecureSdpProblem]) -> Vec<(usize, PrecoderSolution)> {
    problems
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            RoundingMethod::ALL
                .iter()
                .find_map(|&m| solve_precoder(p, &SdpSettings::default(), 200, m, 7).ok())
                .map(|s| (i, s))
        })
        .collect()
}

fn c5_sdp_pipeline(solved: &[(usize, PrecoderSolution)], problems: &[SecureSdpProblem]) -> Outcome {
    const RELAX_TOL: f64 = 1e-6;
    const ROUND_TOL: f64 = 0.01;
    const SLACK: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let l = 6;
    let a = CMat::from_fn(1, l, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let xi = 0.7;
    let p = SecureSdpProblem::new(a.clone(), vec![xi], Vec::new(), f64::INFINITY).map_err(|e| e.to_string())?;
    let exact = xi * xi / a.norm_squared();
    let relaxed = solve_relaxed(&p, &SdpSettings::default()).map_err(|e| e.to_string())?;
    let rel = (relaxed.relaxation_power - exact).abs() / exact;
    ensure(rel <= RELAX_TOL, || format!("analytic relaxation off by {rel:.2e}"))?;
    let rounded = solve_precoder(&p, &SdpSettings::default(), 100, RoundingMethod::EigenSphere, 1).map_err(|e| e.to_string())?;
    let rr = (rounded.rounded_power - exact).abs() / exact;
    ensure(rr <= ROUND_TOL, || format!("analytic rounding off by {rr:.2e}"))?;

    ensure(solved.len() * 4 >= problems.len() * 3, || format!("only {} of {} instances solved", solved.len(), problems.len()))?;
    let mut worst = (f64::INFINITY, 0.0f64, 0.0f64);
    for (i, s) in solved {
        let p = &problems[*i];
        let u = &s.u;
        for k in 0..p.streams() {
            let r: C64 = p.response.row(k).iter().zip(u.iter()).map(|(a, b)| a * b).sum();
            let slack = (r.norm() - p.xi[k]) / p.xi[k];
            ensure(slack >= -SLACK, || format!("instance {i}: QoS slack {slack:.2e}"))?;
            worst.0 = worst.0.min(slack);
        }
        for e in &p.eves {
            let inner = e.estimate.iter().zip(u.iter()).map(|(h, x)| h.conj() * x).sum::<C64>().norm();
            let snr = (inner + e.radius * u.norm()).powi(2) / e.noise_power;
            ensure(snr <= e.tolerance * (1.0 + SLACK), || format!("instance {i}: Eve SNR {snr:.6e}"))?;
            worst.1 = worst.1.max(snr / e.tolerance);
        }
        for x in u.iter() {
            ensure(x.norm_sqr() <= p.max_node_power * (1.0 + SLACK), || format!("instance {i}: node power {}", x.norm_sqr()))?;
            worst.2 = worst.2.max(x.norm_sqr() / p.max_node_power);
        }
    }
    Ok(format!(
        "analytic relax {rel:.1e}, rounding {rr:.1e}; {}/{} reference instances solved, min QoS slack {:.1e}, max Eve SNR/Γ {:.6}, max node power/P {:.3}",
        solved.len(),
        problems.len(),
        worst.0,
        worst.1,
        worst.2
    ))
}

fn c6_s_procedure(solved: &[(usize, PrecoderSolution)], problems: &[SecureSdpProblem]) -> Outcome {
    const MARGIN_TOL: f64 = 1e-9;
    let mut checked = 0;
    let mut feasible = 0;
    'outer: for (i, s) in solved {
        for e in &problems[*i].eves {
            let snr = worst_case_eve_snr(&s.u, &e.estimate, e.radius, e.noise_power);
            // Scale the precoder so the closed form sits clearly on either side of Γ.
            for target in [0.5, 0.94, 1.06, 2.0] {
                let u: CVec = &s.u * C64::new((target * e.tolerance / snr).sqrt(), 0.0);
                let closed_ok = worst_case_eve_snr(&u, &e.estimate, e.radius, e.noise_power) <= e.tolerance;
                let (_, margin) = best_lmi_margin(&u, e);
                let lmi_ok = margin >= -MARGIN_TOL;
                ensure(closed_ok == lmi_ok, || {
                    format!("instance {i}, scale to {target}Γ, radius {:.2e}: closed {closed_ok}, LMI margin {margin:.3e}", e.radius)
                })?;
                checked += 1;
                feasible += closed_ok as usize;
                if checked == 50 {
                    break 'outer;
                }
            }
        }
    }
    ensure(checked == 50, || format!("only {checked} instances available"))?;
    Ok(format!("{checked} instances agree ({feasible} feasible, {} infeasible)", checked - feasible))
}

fn c7_capacity() -> Outcome {
    const TOL: f64 = 1e-9;
    let base = config(include_str!("../../../configs/capacity.toml"));
    let mut curves = Vec::new();
    for d in [2.0, 4.0] {
        for phi in [0.0, 30.0, 60.0] {
            let mut cfg = base.clone();
            cfg.layout.aperture_m = d;
            cfg.layout.rotation_deg = phi;
            let r = run(&cfg);
            let opt = r.means("capacity_bits").unwrap();
            let ula = r.means("baseline_capacity_bits").unwrap();
            for (g, (o, u)) in r.sweep().iter().zip(opt.iter().zip(&ula)) {
                ensure(*o >= u - TOL, || format!("D={d} φ={phi}: γ={g} dB optimized {o:.4} < ULA {u:.4}"))?;
            }
            curves.push(((d, phi), opt));
        }
    }
    let get = |d: f64, phi: f64| &curves.iter().find(|c| c.0 == (d, phi)).unwrap().1;
    for phi in [0.0, 30.0, 60.0] {
        ensure(get(4.0, phi).iter().zip(get(2.0, phi)).all(|(a, b)| *a >= b - TOL), || format!("D ordering fails at φ={phi}"))?;
    }
    for d in [2.0, 4.0] {
        for (lo, hi) in [(0.0, 30.0), (30.0, 60.0)] {
            ensure(get(d, hi).iter().zip(get(d, lo)).all(|(a, b)| *a <= b + TOL), || format!("φ ordering fails at D={d}"))?;
        }
    }
    let gain = get(4.0, 0.0).last().unwrap() - base_ula_last(&base);
    Ok(format!("K=4, L=16, N=32, γ 0..30 dB: NULA ≥ ULA, D and |φ| orderings hold for D∈{{2,4}}, φ∈{{0,30,60}}°; gain at 30 dB {gain:.2} bits"))
}

fn base_ula_last(cfg: &ExperimentConfig) -> f64 {
    *run(cfg).means("baseline_capacity_bits").unwrap().last().unwrap()
}

fn c8_pattern() -> Outcome {
    const PEAK_DEG: f64 = 0.5;
    const EVE_DB: f64 = -20.0;
    const JAM_DB: f64 = -40.0;
    const DESIRED_DB: f64 = 1e-9;
    let cfg = config(include_str!("../../../configs/pattern.toml"));
    let r = run(&cfg);
    let s = &r.metadata.summary;
    let offset = s["peak_offset_deg"];
    ensure(offset <= PEAK_DEG, || format!("peak {offset:.3}° from the BS"))?;
    let (e0, e1) = (s["eve0_transmit_gain_db"], s["eve1_transmit_gain_db"]);
    ensure(e0 <= EVE_DB && e1 <= EVE_DB, || format!("Eve gains {e0:.2} / {e1:.2} dB"))?;
    let (j0, j1) = (s["jammer0_receive_gain_db"], s["jammer1_receive_gain_db"]);
    ensure(j0 <= JAM_DB && j1 <= JAM_DB, || format!("jammer gains {j0:.1} / {j1:.1} dB"))?;
    let d = s["desired_receive_gain_db"];
    ensure(d.abs() <= DESIRED_DB, || format!("desired response {d} dB"))?;
    Ok(format!(
        "peak {:.2}° vs BS {:.2}°, Eves {e0:.1} / {e1:.1} dB, jammers {j0:.0} / {j1:.0} dB, desired {d:.0} dB",
        s["peak_azimuth_deg"], s["bs_azimuth_deg"]
    ))
}

fn c9_power() -> Outcome {
    const TOL_DB: f64 = 1e-9;
    let cfg = config(include_str!("../../../configs/power.toml"));
    let r = run(&cfg);
    let p = r.means("power_dbm").unwrap();
    let b = r.means("baseline_power_dbm").unwrap();
    ensure(p.windows(2).all(|w| w[1] <= w[0] + TOL_DB), || format!("power not non-increasing: {p:?}"))?;
    for (l, (x, y)) in r.sweep().iter().zip(p.iter().zip(&b)) {
        ensure(*x <= y + TOL_DB, || format!("L={l}: {x:.2} dBm above baseline {y:.2} dBm"))?;
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" ");
    Ok(format!("L=8..24 power [{}] dBm vs ZF-ULA [{}] dBm", fmt(&p), fmt(&b)))
}

fn c10_robust() -> Outcome {
    const DOMINANCE_REL: f64 = 1e-6;
    const BOUND_REL: f64 = 1e-6;
    const COLLAPSE_REL: f64 = 1e-4;
    let base = config(include_str!("../../../configs/robust.toml"));
    let mut detail = Vec::new();
    for eps in [0.0, 0.05, 0.1, 0.2] {
        let mut cfg = base.clone();
        cfg.receiver.steering_uncertainty = eps;
        cfg.receiver.snapshots = 0;
        cfg.trials = 1;
        let r = run(&cfg);
        let robust = r.raw_means("robust_sjnr_db").unwrap();
        let lcmv = r.raw_means("lcmv_sjnr_db").unwrap();
        let bound = r.raw_means("upper_bound_db").unwrap();
        let mut gap: f64 = 0.0;
        for (g, ((ro, lc), ub)) in r.sweep().iter().zip(robust.iter().zip(&lcmv).zip(&bound)) {
            ensure(*ro >= lc * (1.0 - DOMINANCE_REL), || format!("ε={eps}, γ={g}: robust {ro:.6e} < LCMV {lc:.6e}"))?;
            ensure(*ro <= ub * (1.0 + BOUND_REL) && *lc <= ub * (1.0 + BOUND_REL), || format!("ε={eps}, γ={g}: above bound"))?;
            if eps == 0.0 {
                let rel = (ub - ro) / ub;
                ensure(rel <= COLLAPSE_REL, || format!("γ={g}: ε=0 robust {rel:.2e} below the bound"))?;
                gap = gap.max(rel);
            } else {
                gap = gap.max(1.0 - ro / ub);
            }
        }
        detail.push(format!("ε={eps}: max gap to bound {gap:.1e}"));
    }
    Ok(detail.join(", "))
}

fn c11_determinism() -> Outcome {
    const EXACT_TOL: f64 = 1e-10;
    let scn = Scenario { noise_power_bs: 0.0, jammers: Vec::new(), ..Scenario::default() };
    let layout = NodeLayout::new(gauss_lobatto_points(8).unwrap().points, 4.0, 0.1).unwrap();
    let ch = build_channel(&scn, &layout, 1).unwrap();
    let u = zero_forcing(&ch.a_a, &[1.0]).map_err(|e| e.to_string())?;
    let w: CVec = ch.a_g.column(0).into_owned();
    let plan = TransmissionPlan { sub_symbols: 4096, constellation: sabf::simulation::Constellation::Qam16, ..Default::default() };
    let link = simulate_block(&scn, &ch, &u, &w, &plan).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (idx, got) in link.transmitted.iter().zip(&link.recovered) {
        let z = got.ok_or("nothing received")?;
        worst = worst.max((z - plan.constellation.point(*idx)).norm());
    }
    ensure(worst <= EXACT_TOL && link.symbol_errors == 0, || format!("noiseless error {worst:.2e}"))?;

    let cfg = config(include_str!("../../../configs/power.toml"));
    let files = |threads: usize| -> Vec<(String, Vec<u8>)> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = pool.install(|| run_experiment(&cfg)).unwrap();
        report
            .write(dir.path())
            .unwrap()
            .into_iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect()
    };
    let (a, b) = (files(1), files(4));
    ensure(a == b, || "outputs differ between runs".into())?;
    let bytes: usize = a.iter().map(|f| f.1.len()).sum();
    Ok(format!(
        "noiseless max error {worst:.1e} over {} sub-symbols; {} files ({bytes} bytes) identical across 1- and 4-thread runs",
        plan.sub_symbols,
        a.len()
    ))
}

fn main() {
    let problems = reference_instances();
    let solved = solve_all(&problems);
    let checks: Vec<Check> = vec![
        ("1 Fekete correctness", Box::new(c1_fekete)),
        ("2 closed-form r_A identity", Box::new(c2_vandermonde_qr)),
        ("3 small-ω eigenvalue slopes", Box::new(c3_eigen_slopes)),
        ("4 grouped-layout upper bound", Box::new(c4_grouped_bound)),
        ("5 SDP pipeline", Box::new(|| c5_sdp_pipeline(&solved, &problems))),
        ("6 S-procedure cross-validation", Box::new(|| c6_s_procedure(&solved, &problems))),
        ("7 capacity trend", Box::new(c7_capacity)),
        ("8 beam pattern trend", Box::new(c8_pattern)),
        ("9 power trend", Box::new(c9_power)),
        ("10 robust SJNR trend", Box::new(c10_robust)),
        ("11 determinism and exactness", Box::new(c11_determinism)),
    ];
    let mut failed = 0;
    for (name, f) in &checks {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {name}: {msg} [{secs:.1} s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
