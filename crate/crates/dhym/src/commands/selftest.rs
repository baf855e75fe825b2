//! Smoke tests over the closed-form examples of every engine, plus a seeded
//! random sweep. With `--out`, each subcommand also runs on fixed inputs and
//! writes its files under a subdirectory, so repeated runs can be diffed.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use dhym_core::charge::{self, SubvarietyData, TopologicalData};
use dhym_core::flow::{self, FlowConfig, FlowError, PeriodicField, TorusBackground, TrigMode};
use dhym_core::spectral::{self, HermitianPencil, Spectrum};
use dhym_core::syz::{self, BoxDomain, BoxGrid, ConvexPotential, SectionPotential, SectionTerm, Trig};
use dhym_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cli::{Common, Format, PointArgs};
use crate::config::{DomainSpec, FlowFile, InitialData, PhiSpec, SectionSpec, SyzScenario};
use crate::error::CliError;
use crate::output::{num, to_json, Csv, OutDir};

const RANDOM_SPECTRA: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Observed error or value.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
    /// Subcommand runs: name and exit code.
    pub runs: Vec<(String, i32)>,
}

struct Checks(Vec<Check>);

impl Checks {
    fn close(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        let err = (got - want).abs();
        self.0.push(Check { name: name.into(), pass: err <= tol, value: err });
    }

    fn all_close(&mut self, name: &str, got: &[f64], want: &[f64], tol: f64) {
        let err = if got.len() == want.len() {
            got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        self.0.push(Check { name: name.into(), pass: err <= tol, value: err });
    }

    fn truth(&mut self, name: &str, ok: bool) {
        self.0.push(Check { name: name.into(), pass: ok, value: if ok { 1.0 } else { 0.0 } });
    }
}

fn spectrum(v: &[f64]) -> Spectrum {
    Spectrum::new(v.to_vec()).expect("fixed spectrum")
}

fn diag3(v: [f64; 3]) -> Result<HermitianPencil, CliError> {
    Ok(HermitianPencil::diagonal(&[1.0; 3], &v)?)
}

fn spectral_checks(c: &mut Checks) -> Result<(), CliError> {
    let s = spectral::relative_eigenvalues(&diag3([0.0; 3])?);
    c.all_close("relative_eigenvalues/zero_form", s.lambdas(), &[0.0; 3], 0.0);
    let s = spectral::relative_eigenvalues(&diag3([1.0, 2.0, 3.0])?);
    c.all_close("relative_eigenvalues/diagonal", s.lambdas(), &[1.0, 2.0, 3.0], 1e-15);
    let ar = spectral::angle_and_radius(&spectrum(&[0.0; 3]));
    c.close("angle_and_radius/zero/theta", ar.theta, 0.0, 0.0);
    c.close("angle_and_radius/zero/radius", ar.radius, 1.0, 0.0);
    let ar = spectral::angle_and_radius(&spectrum(&[1.0; 3]));
    c.close("angle_and_radius/ones/theta", ar.theta, 3.0 * FRAC_PI_4, 1e-15);
    c.close("angle_and_radius/ones/radius", ar.radius, 2.0 * 2f64.sqrt(), 1e-15);
    let z = spectral::complex_volume_ratio(&spectrum(&[0.0, 0.0]));
    c.close("complex_volume_ratio/zero", (z - Complex64::new(1.0, 0.0)).norm(), 0.0, 0.0);
    let z = spectral::complex_volume_ratio(&spectrum(&[1.0, 1.0]));
    c.close("complex_volume_ratio/ones", (z - Complex64::new(0.0, 2.0)).norm(), 0.0, 1e-15);
    let sig = spectral::elementary_symmetric(&spectrum(&[1.0; 3]));
    c.all_close("elementary_symmetric/ones", sig.as_slice(), &[1.0, 3.0, 3.0, 1.0], 0.0);
    let sig = spectral::elementary_symmetric(&spectrum(&[0.0, 0.0]));
    c.all_close("elementary_symmetric/zero", sig.as_slice(), &[1.0, 0.0, 0.0], 0.0);
    let r = spectral::dim3_phase_identity_residual(&spectrum(&[0.0; 3]), 0.0)?;
    c.close("dim3_phase_identity/zero", r, 0.0, 0.0);
    let m = spectral::subsolution_margins(&spectrum(&[0.0, 0.0]), 0.0);
    c.all_close("subsolution_margins/zero", &m, &[FRAC_PI_2; 2], 1e-15);
    c.close("j_operator/one", spectral::j_operator(&spectrum(&[1.0]))?, 1.0, 0.0);
    Ok(())
}

fn charge_checks(c: &mut Checks) -> Result<(), CliError> {
    let curve = TopologicalData::new(1, vec![1.0, 0.0])?;
    c.close("charge_path/real_curve", charge::charge_path(&curve)?.lifted_angle, 0.0, 1e-12);
    c.close("dim1_angle/real", charge::dim1_angle(&curve)?, 0.0, 0.0);
    let z = charge::bps_norm_bound(&curve);
    c.close("bps_norm/curve", z.z_abs, 1.0, 1e-15);
    let zero = TopologicalData::new(3, vec![1.0, 0.0, 0.0, 0.0])?;
    let v = charge::chern_inequality_dim3(&zero)?;
    c.truth("chern_inequality/zero_class_fails", v.lhs == 0.0 && v.rhs == 0.0 && !v.holds);
    let x = TopologicalData::new(3, vec![6.0, 0.0, 2.0, -6.0])?;
    let sub = SubvarietyData::new("line", 2, vec![1.0, 0.0, 0.0])?;
    let o = charge::subvariety_obstruction(&x, &sub)?;
    c.truth("subvariety_obstruction/degenerate_is_obstructed", o.im_product == 0.0 && !o.unobstructed);
    Ok(())
}

fn flow_checks(c: &mut Checks) -> Result<(), CliError> {
    let bg2 = TorusBackground::scalar(2, 0.0, 8)?;
    let h = flow::complex_hessian(&PeriodicField::zeros(&bg2), &bg2)?;
    c.close("complex_hessian/zero", h.entries.iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0, 0.0);
    let bg = TorusBackground::scalar(2, 1.0, 8)?;
    let t = flow::theta_field(&PeriodicField::zeros(&bg), &bg)?;
    c.close("theta_field/identity_n2", t.values().iter().map(|v| (v - FRAC_PI_2).abs()).fold(0.0, f64::max), 0.0, 1e-15);
    let bg1 = TorusBackground::scalar(1, 1.0, 8)?;
    let t = flow::theta_field(&PeriodicField::zeros(&bg1), &bg1)?;
    c.close("theta_field/one_n1", t.values().iter().map(|v| (v - FRAC_PI_4).abs()).fold(0.0, f64::max), 0.0, 1e-15);
    let cfg = FlowConfig::for_background(&bg1, 1e-8, 10);
    let tr = flow::run_flow(&bg1, &PeriodicField::zeros(&bg1), &cfg)?;
    c.truth("run_flow/zero_data_converged_at_step_0", tr.converged && tr.steps == 0 && tr.final_field.sup_norm() == 0.0);
    let flat = TorusBackground::scalar(1, 0.0, 8)?;
    c.close("volume/flat", flow::volume_functional(&PeriodicField::zeros(&flat), &flat)?, 1.0, 1e-15);
    c.close("volume/r_hat_flat", flat.r_hat(), 1.0, 1e-15);
    let bg16 = TorusBackground::scalar(1, 1.0, 16)?;
    let cfg = FlowConfig::for_background(&bg16, 1e-8, 50_000);
    let mode = |amp| PeriodicField::trigonometric(&bg16, amp, &[TrigMode { amp: 0.1, kind: Trig::Cos, k: vec![1, 0] }]);
    c.close("uniqueness/identical", flow::uniqueness_check(&bg16, &mode(0.0)?, &mode(0.0)?, &cfg)?, 0.0, 0.0);
    c.close("uniqueness/constant_shift", flow::uniqueness_check(&bg16, &mode(0.0)?, &mode(5.0)?, &cfg)?, 0.0, 1e-12);
    let stop = FlowConfig::for_background(&bg16, 1e-8, 0);
    let not = matches!(flow::run_flow(&bg16, &mode(0.0)?, &stop), Err(FlowError::NotConverged { steps: 0, .. }));
    c.truth("run_flow/max_steps_zero_not_converged", not);
    Ok(())
}

fn syz_checks(c: &mut Checks) -> Result<(), CliError> {
    let dom = BoxDomain::new(vec![-1.0; 2], vec![1.0; 2])?;
    let phi = ConvexPotential::diagonal_quadratic(&[1.0, 1.0], dom.clone())?;
    let f = SectionPotential::zero(2);
    let s = syz::slag_matrix(&phi, &f, &[0.2, -0.3])?;
    c.close("slag_matrix/flat_is_real", s.iter().map(|z| z.im.abs()).fold(0.0, f64::max), 0.0, 0.0);
    let spec = syz::mirror_curvature_spectrum(&phi, &f, &[0.2, -0.3])?;
    c.all_close("mirror_spectrum/flat", spec.lambdas(), &[0.0, 0.0], 0.0);
    let grid = BoxGrid::new(dom, vec![5, 5])?;
    c.close("monge_ampere/identity", syz::monge_ampere_residual(&phi, &grid).max_residual, 0.0, 0.0);
    let xt = syz::legendre_map(&phi, &[0.3, -0.2])?;
    c.all_close("legendre_map/identity", &xt, &[0.3, -0.2], 0.0);
    Ok(())
}

fn cli_checks(c: &mut Checks) {
    let common = Common { input: None, out: None, seed: 0, tol: None, format: Format::Json };
    let args = PointArgs { lambda: Some(String::new()), theta_hat: None };
    let code = super::point::run(&common, &args).err().map(|e| e.exit_code());
    c.truth("point/empty_lambda_exit_2", code == Some(2));
}

fn random_checks(c: &mut Checks, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..RANDOM_SPECTRA {
        let n = rng.gen_range(1..=6);
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let s = spectrum(&l);
        let ar = spectral::angle_and_radius(&s);
        let z = spectral::complex_volume_ratio(&s);
        worst = worst.max((z - Complex64::from_polar(ar.radius, ar.theta)).norm() / ar.radius);
    }
    c.0.push(Check { name: format!("random/product_identity_{RANDOM_SPECTRA}"), pass: worst < 1e-11, value: worst });
}

fn fixed_runs(root: &std::path::Path) -> Vec<(String, i32)> {
    let sub = |name: &str| Common {
        input: None,
        out: Some(root.join(name)),
        seed: 0,
        tol: None,
        format: Format::Json,
    };
    let code = |r: Result<String, CliError>| r.map_or_else(|e| e.exit_code(), |_| 0);
    let mut runs = Vec::new();
    for (name, lambda) in [("point_ones", "1,1,1"), ("point_123", "1,2,3")] {
        let args = PointArgs { lambda: Some(lambda.into()), theta_hat: None };
        runs.push((name.to_string(), code(super::point::run(&sub(name), &args))));
    }
    let fano = TopologicalData::with_subvarieties(
        3,
        vec![6.0; 4],
        vec![SubvarietyData { label: "hyperplane".into(), dim: 2, b: vec![3.0, 3.0, 3.0] }],
    );
    runs.push(("charge_fano".into(), fano.map_err(CliError::from).and_then(|d| super::charge::run_data(&sub("charge_fano"), &d)).map_or_else(|e| e.exit_code(), |_| 0)));
    let crossing = TopologicalData::new(3, vec![6.0, 1.0, 8.0, 12.0]);
    runs.push(("charge_crossing".into(), crossing.map_err(CliError::from).and_then(|d| super::charge::run_data(&sub("charge_crossing"), &d)).map_or_else(|e| e.exit_code(), |_| 0)));
    let flow_file = FlowFile {
        grid: Some(16),
        u0: Some(InitialData { constant: 0.0, terms: FlowFile::default_initial(1).terms }),
        ..FlowFile::default()
    };
    runs.push(("flow_n1".into(), code(super::flow::run_file(&sub("flow_n1"), &flow_file))));
    let stop = FlowFile { max_steps: 0, ..flow_file.clone() };
    runs.push(("flow_max_steps_0".into(), code(super::flow::run_file(&sub("flow_max_steps_0"), &stop))));
    let scalar = SyzScenario {
        n: 1,
        phi: PhiSpec::Quadratic { a: vec![2.0] },
        f: SectionSpec { terms: vec![SectionTerm::Monomial { coef: 0.3, powers: vec![2] }] },
        domain: DomainSpec { lo: vec![-1.0], hi: vec![1.0] },
        grid: vec![11],
        theta_hat: 0.0,
    };
    runs.push(("syz_scalar".into(), code(super::syz::run_scenario(&sub("syz_scalar"), &scalar))));
    let ma = SyzScenario {
        n: 2,
        phi: PhiSpec::Quadratic { a: vec![3.0, 0.5] },
        f: SectionSpec {
            terms: vec![SectionTerm::Trig { amp: 0.05, k: vec![1.0, 1.0], fns: vec![Trig::Cos, Trig::Sin] }],
        },
        domain: DomainSpec { lo: vec![-0.5; 2], hi: vec![0.5; 2] },
        grid: vec![8, 8],
        theta_hat: 0.0,
    };
    runs.push(("syz_ma_half".into(), code(super::syz::run_scenario(&sub("syz_ma_half"), &ma))));
    runs
}

pub fn run(common: &Common) -> Result<String, CliError> {
    let mut c = Checks(Vec::new());
    spectral_checks(&mut c)?;
    charge_checks(&mut c)?;
    flow_checks(&mut c)?;
    syz_checks(&mut c)?;
    cli_checks(&mut c);
    random_checks(&mut c, common.seed);
    let out = OutDir::new(common.out.clone());
    let runs = match &common.out {
        Some(root) => fixed_runs(root),
        None => Vec::new(),
    };
    let expected = [("charge_crossing", 4), ("flow_max_steps_0", 6)];
    for (name, code) in &runs {
        let want = expected.iter().find(|(n, _)| n == name).map_or(0, |(_, c)| *c);
        c.truth(&format!("run/{name}_exit_{want}"), *code == want);
    }
    let failed = c.0.iter().filter(|k| !k.pass).count();
    let report = SelftestReport { seed: common.seed, passed: c.0.len() - failed, failed, checks: c.0, runs };
    out.write_json("selftest.json", &report)?;
    let text = match common.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut csv = Csv::new(&["name", "pass", "value"]);
            for k in &report.checks {
                csv.row(&[k.name.clone(), k.pass.to_string(), num(k.value)]);
            }
            csv.finish()
        }
    };
    if failed == 0 {
        Ok(text)
    } else {
        let names: Vec<&str> = report.checks.iter().filter(|k| !k.pass).map(|k| k.name.as_str()).collect();
        Err(CliError::CheckFailed(format!("{failed} selftest checks failed: {}", names.join(", "))))
    }
}
