//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dhym_core::charge::{self, TopologicalData};
use dhym_core::flow::{self, FlowConfig, FlowTrace, PeriodicField, TorusBackground, TrigMode};
use dhym_core::spectral::{self, Spectrum};
use dhym_core::syz::{self, BoxDomain, BoxGrid, ConvexPotential, SectionPotential, SectionTerm, Trig};
use dhym_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_spectrum(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// `σ₀..σₙ` by direct expansion of `∏(1 + λᵢx)`.
fn sigma(l: &[f64]) -> Vec<f64> {
    let mut s = vec![1.0];
    for &x in l {
        let mut next = s.clone();
        next.push(0.0);
        for k in 1..next.len() {
            next[k] += x * s[k - 1];
        }
        s = next;
    }
    s
}

fn product_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let l = random_spectrum(&mut rng, n, -10.0, 10.0);
        let direct: Complex64 = l.iter().map(|&x| Complex64::new(1.0, x)).product();
        let ar = spectral::angle_and_radius(&Spectrum::new(l).unwrap());
        worst = worst.max((direct - Complex64::from_polar(ar.radius, ar.theta)).norm() / ar.radius);
    }
    outcome(worst < 1e-11, format!("max relative error {worst:.3e}"))
}

fn dim3_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut done): (f64, usize) = (0.0, 0);
    while done < 1000 {
        let l = random_spectrum(&mut rng, 3, -10.0, 10.0);
        let s = Spectrum::new(l.clone()).unwrap();
        let theta = spectral::angle_and_radius(&s).theta;
        if theta.cos().abs() <= 0.1 {
            continue;
        }
        let sg = sigma(&l);
        let oracle = (theta.tan() * (1.0 - sg[2]) - (sg[1] - sg[3])).abs();
        let lib = spectral::dim3_phase_identity_residual(&s, theta).unwrap().abs();
        worst = worst.max(lib).max(oracle);
        done += 1;
    }
    outcome(worst < 1e-9, format!("max residual {worst:.3e} over {done} spectra"))
}

fn fano_lifted_angle() -> Outcome {
    let d = TopologicalData::new(3, vec![6.0; 4]).unwrap();
    // 6(t + i)³ = 6t³ + 18it² − 18t − 6i.
    let want = [Complex64::new(0.0, -6.0), Complex64::new(-18.0, 0.0), Complex64::new(0.0, 18.0), Complex64::new(6.0, 0.0)];
    let coeff_err = d.path_coefficients().iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let path = charge::charge_path(&d).unwrap();
    let pointwise = spectral::angle_and_radius(&Spectrum::new(vec![1.0; 3]).unwrap()).theta;
    let angle_err = (path.lifted_angle - 3.0 * FRAC_PI_4).abs();
    let agree = (path.lifted_angle - pointwise).abs();
    outcome(
        coeff_err < 1e-12 && angle_err < 1e-9 && agree < 1e-9,
        format!("coefficient error {coeff_err:.1e}, lifted angle {} (error {angle_err:.1e}), pointwise gap {agree:.1e}", path.lifted_angle),
    )
}

fn chern_inequality() -> Outcome {
    let v = charge::chern_inequality_dim3(&TopologicalData::new(3, vec![6.0; 4]).unwrap()).unwrap();
    let model_ok = v.holds && v.lhs == 6.0 && v.rhs == 54.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut draws, mut failures) = (0, 0);
    while draws < 1000 {
        let l = random_spectrum(&mut rng, 3, 0.01, 50.0);
        let theta: f64 = l.iter().map(|x| x.atan()).sum();
        if !(theta > FRAC_PI_2 && theta < 1.5 * PI) {
            continue;
        }
        let volume = rng.gen_range(0.1..10.0);
        let sg = sigma(&l);
        // Aₖ = V·σₖ / C(3,k).
        let a = vec![volume, volume * sg[1] / 3.0, volume * sg[2] / 3.0, volume * sg[3]];
        let d = TopologicalData::new(3, a).unwrap();
        if !charge::chern_inequality_dim3(&d).unwrap().holds {
            failures += 1;
        }
        draws += 1;
    }
    outcome(
        model_ok && failures == 0,
        format!("model LHS={} RHS={} holds={}; {failures} failures in {draws} constant-model draws", v.lhs, v.rhs, v.holds),
    )
}

struct FlowRuns {
    a: FlowTrace,
    b: FlowTrace,
    c: FlowTrace,
    distance: f64,
    elapsed: Duration,
}

fn mode(amp: f64, kind: Trig, k: &[i64]) -> TrigMode {
    TrigMode { amp, kind, k: k.to_vec() }
}

fn flow_runs() -> Result<FlowRuns, String> {
    let start = Instant::now();
    let bg = TorusBackground::scalar(1, 1.0, 64).map_err(|e| e.to_string())?;
    let cfg = FlowConfig::for_background(&bg, 1e-8, 400_000);
    let ua = PeriodicField::trigonometric(&bg, 0.0, &[mode(0.1, Trig::Cos, &[1, 0])]).map_err(|e| e.to_string())?;
    let ub = PeriodicField::trigonometric(&bg, 0.0, &[mode(-0.07, Trig::Sin, &[2, 0])]).map_err(|e| e.to_string())?;
    let a = flow::run_flow(&bg, &ua, &cfg).map_err(|e| e.to_string())?;
    let b = flow::run_flow(&bg, &ub, &cfg).map_err(|e| e.to_string())?;
    let distance = flow::field_distance(&a.final_field, &b.final_field);

    let bg2 = TorusBackground::scalar(2, 1.0, 12).map_err(|e| e.to_string())?;
    let cfg2 = FlowConfig::for_background(&bg2, 1e-6, 400_000);
    let uc = PeriodicField::trigonometric(&bg2, 0.0, &[mode(0.05, Trig::Cos, &[1, 0, 0, 0]), mode(0.05, Trig::Cos, &[0, 0, 0, 1])])
        .map_err(|e| e.to_string())?;
    let c = flow::run_flow(&bg2, &uc, &cfg2).map_err(|e| e.to_string())?;
    Ok(FlowRuns { a, b, c, distance, elapsed: start.elapsed() })
}

fn flow_convergence(runs: &FlowRuns) -> Outcome {
    let ra = runs.a.last().residual;
    let rb = runs.b.last().residual;
    let rc = runs.c.last().residual;
    let targets_ok = (runs.a.theta_target - FRAC_PI_4).abs() < 1e-15 && (runs.c.theta_target - FRAC_PI_2).abs() < 1e-15;
    let pass = ra < 1e-8 && rb < 1e-8 && rc < 1e-6 && runs.distance < 1e-5 && targets_ok && runs.elapsed.as_secs_f64() < 60.0;
    outcome(
        pass,
        format!(
            "n=1 residuals {ra:.2e} ({} steps), {rb:.2e} ({} steps); distance {:.2e}; n=2 residual {rc:.2e} ({} steps); {:.1}s",
            runs.a.steps,
            runs.b.steps,
            runs.distance,
            runs.c.steps,
            runs.elapsed.as_secs_f64()
        ),
    )
}

fn bps_bound(runs: &FlowRuns) -> Outcome {
    let traces = [&runs.a, &runs.b, &runs.c];
    let gap = traces.iter().map(|t| t.min_bps_gap()).fold(f64::INFINITY, f64::min);
    let end = traces.iter().map(|t| (t.last().volume - t.r_hat).abs() / t.r_hat).fold(0.0, f64::max);
    outcome(gap >= -1e-9 && end < 1e-6, format!("min(V − r̂) {gap:.2e}, final |V − r̂|/r̂ {end:.2e}"))
}

fn oscillation(runs: &FlowRuns) -> Outcome {
    let traces = [&runs.a, &runs.b, &runs.c];
    let rise = traces.iter().map(|t| t.max_oscillation_increase()).fold(f64::NEG_INFINITY, f64::max);
    let start = traces.iter().map(|t| t.records[0].oscillation()).fold(0.0, f64::max);
    let end = traces.iter().map(|t| t.last().oscillation()).fold(0.0, f64::max);
    outcome(rise <= 1e-6 && end < PI, format!("largest per-step rise {rise:.2e}, initial osc ≤ {start:.3}, final osc ≤ {end:.2e}"))
}

fn syz_correspondence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut scalar_worst: f64 = 0.0;
    for _ in 0..1000 {
        let a = rng.gen_range(0.1..10.0);
        let c = rng.gen_range(-50.0..50.0);
        let x = rng.gen_range(0.0..1.0);
        let phi = ConvexPotential::diagonal_quadratic(&[a], BoxDomain::new(vec![0.0], vec![1.0]).unwrap()).unwrap();
        let f = SectionPotential::new(1, vec![SectionTerm::Monomial { coef: 0.5 * c, powers: vec![2] }]).unwrap();
        let r = syz::point_report(&phi, &f, &[x], 0.0).unwrap();
        let exact = (c / (a * a)).atan();
        scalar_worst = scalar_worst.max(r.mismatch).max((r.slag_phase - exact).abs());
    }
    let domain = BoxDomain::new(vec![0.0; 2], vec![1.0; 2]).unwrap();
    let phi = ConvexPotential::diagonal_quadratic(&[2.0, 0.5], domain.clone()).unwrap();
    let f = SectionPotential::new(2, vec![SectionTerm::Trig { amp: 0.1, k: vec![1.0, 1.0], fns: vec![Trig::Cos, Trig::Cos] }]).unwrap();
    let grid = BoxGrid::new(domain, vec![64, 64]).unwrap();
    let (summary, _) = syz::phase_equivalence_check(&phi, &f, &grid, 0.0).unwrap();
    let ma = syz::monge_ampere_residual(&phi, &grid);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        scalar_worst < 1e-12 && summary.max_mismatch < 1e-9 && ma.max_residual == 0.0 && secs < 10.0,
        format!(
            "scalar max mismatch {scalar_worst:.2e}; 64² max mismatch {:.2e}, MA residual {}; {secs:.2}s",
            summary.max_mismatch, ma.max_residual
        ),
    )
}

fn subsolution_necessity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut smallest = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=8);
        let s = Spectrum::new(random_spectrum(&mut rng, n, -10.0, 10.0)).unwrap();
        let theta = spectral::angle_and_radius(&s).theta;
        smallest = spectral::subsolution_margins(&s, theta).into_iter().fold(smallest, f64::min);
    }
    outcome(smallest > 0.0, format!("smallest margin {smallest:.3e}"))
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    let mut stdouts = Vec::new();
    for name in ["first", "second"] {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_dhym"))
            .args(["selftest", "--out", out.to_str().unwrap()])
            .output()
            .expect("binary runs");
        if !o.status.success() {
            return outcome(false, format!("selftest exited with {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
        }
        stdouts.push(o.stdout);
        trees.push(tree_bytes(&out));
    }
    let files = trees[0].len();
    let same = trees[0] == trees[1] && stdouts[0] == stdouts[1];
    outcome(same && files > 10, format!("{files} files compared, identical: {same}"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} [{status}] {name}: {} ({:.2}s)", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    };
    report(1, "product identity", &|| {
        let start = Instant::now();
        let mut o = product_identity();
        o.pass &= start.elapsed().as_secs_f64() < 1.0;
        o
    });
    report(2, "dimension-3 phase identity", &|| {
        let start = Instant::now();
        let mut o = dim3_identity();
        o.pass &= start.elapsed().as_secs_f64() < 1.0;
        o
    });
    report(3, "lifted angle of the Fano-like model", &|| {
        let start = Instant::now();
        let mut o = fano_lifted_angle();
        o.pass &= start.elapsed().as_secs_f64() < 1.0;
        o
    });
    report(4, "Chern number inequality", &|| {
        let start = Instant::now();
        let mut o = chern_inequality();
        o.pass &= start.elapsed().as_secs_f64() < 2.0;
        o
    });
    let runs = flow_runs();
    match &runs {
        Ok(runs) => {
            report(5, "flow convergence and uniqueness", &|| flow_convergence(runs));
            report(6, "BPS volume bound", &|| bps_bound(runs));
            report(7, "oscillation monitor", &|| oscillation(runs));
        }
        Err(e) => {
            for (id, name) in [(5, "flow convergence and uniqueness"), (6, "BPS volume bound"), (7, "oscillation monitor")] {
                report(id, name, &|| outcome(false, format!("flow run failed: {e}")));
            }
        }
    }
    report(8, "semi-flat SYZ correspondence", &syz_correspondence);
    report(9, "subsolution necessity", &subsolution_necessity);
    report(10, "CLI determinism", &cli_determinism);
    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
