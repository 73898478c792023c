//! Acceptance criteria 1-7. Each test prints one `PASS`/`FAIL` line to the
//! real stderr (bypassing libtest capture) and then asserts.

mod support;

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use dtomo::io::{read_array, write_array, ArrayData, Provenance};
use dtomo::linalg::hermitian_part;
use dtomo::*;
use support::*;

/// Criteria run one at a time so wall-clock limits are not shared.
static SERIAL: Mutex<()> = Mutex::new(());

fn verdict(id: u32, title: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    writeln!(err, "[acceptance {id}] {tag} {title}: {detail}").unwrap();
    assert!(pass, "criterion {id} failed: {detail}");
}

fn mixtures() -> [(&'static str, MixtureSpec); 2] {
    [
        ("phase-only", MixtureSpec::phase_only_triplet()),
        ("hermite-gauss", MixtureSpec::hermite_gauss_triplet()),
    ]
}

#[test]
fn criterion_1_noiseless_round_trip() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let g = GridSpec::new(128, 2.0).unwrap();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (_, mix) in mixtures() {
        let rho = assemble_density_matrix(&mix, &g).unwrap();
        let back = reconstruct_density(&forward_frames(&rho, &g).unwrap()).unwrap();
        worst = worst.max(trace_distance(&rho, &back).unwrap());
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "noiseless round trip, N=128, both mixtures",
        worst < 1e-10 && elapsed < Duration::from_secs(5),
        format!("max trace distance {worst:.3e} (< 1e-10), {elapsed:.2?} (< 5 s)"),
    );
}

#[test]
fn criterion_2_oracle_equivalence() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut forward_err: f64 = 0.0;
    let g = GridSpec::new(64, 2.0).unwrap();
    let mut inputs: Vec<DensityMatrix> = mixtures()
        .into_iter()
        .map(|(_, m)| assemble_density_matrix(&m, &g).unwrap())
        .collect();
    inputs.push(random_mixture(&mut rng(2), &g, 4));
    inputs.push(random_mixture(&mut rng(3), &GridSpec::new(17, 1.0).unwrap(), 2));
    for rho in &inputs {
        let frames = forward_frames(rho, rho.grid()).unwrap();
        let oracle = forward_oracle(rho);
        for (plane, reference) in frames.planes().iter().zip(&oracle) {
            forward_err = forward_err.max(max_abs(&(plane - reference)));
        }
    }

    let mut scan_err: f64 = 0.0;
    for (n, seed) in [(8, 4), (32, 5)] {
        let g = GridSpec::new(n, 1.0).unwrap();
        let mut cases = vec![random_mixture(&mut rng(seed), &g, 3)];
        cases.extend(mixtures().into_iter().map(|(_, m)| assemble_density_matrix(&m, &g).unwrap()));
        for rho in cases {
            let direct = reconstruct_density(&forward_frames(&rho, &g).unwrap()).unwrap();
            for plan in [ScanPlan::two_step(n).unwrap(), ScanPlan::four_step(n).unwrap()] {
                let scan = scan_reconstruct(&rho, &plan, &NoiseModel::none()).unwrap();
                scan_err = scan_err.max(max_abs_c(&(scan.elements() - direct.elements())));
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        "forward vs operator oracle (N<=64), scan vs direct (N<=32)",
        forward_err < 1e-12 && scan_err < 1e-12 && elapsed < Duration::from_secs(30),
        format!("forward {forward_err:.3e}, scan {scan_err:.3e} (< 1e-12), {elapsed:.2?} (< 30 s)"),
    );
}

#[test]
fn criterion_3_decomposition_recovery() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let g = GridSpec::new(128, 2.0).unwrap();
    let mix = MixtureSpec::hermite_gauss_triplet();
    let rho = assemble_density_matrix(&mix, &g).unwrap();
    let res = decompose_density(&rho, 3).unwrap();
    let expected = [0.45, 0.33, 0.22];
    let weight_err = res
        .weights
        .iter()
        .zip(expected)
        .map(|(w, e)| (w - e).abs())
        .fold(0.0, f64::max);
    let states = mix.states(&g).unwrap();
    // generating order is 0.22, 0.33, 0.45; recovered order is descending
    let min_fid = (0..3)
        .map(|k| mode_fidelity(&states[2 - k], &res.modes[k]).unwrap())
        .fold(1.0, f64::min);
    verdict(
        3,
        "HG mixture weights and mode fidelities, N=128",
        weight_err < 1e-9 && min_fid > 1.0 - 1e-9,
        format!("weights {:?}, max error {weight_err:.3e} (< 1e-9), min fidelity 1 - {:.3e}", res.weights, 1.0 - min_fid),
    );
}

#[test]
fn criterion_4_full_scale_pipeline() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let g = GridSpec::new(580, 2.001).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for (name, mix) in mixtures() {
        let start = Instant::now();
        let run = run_pipeline(&PipelineConfig::new(g, mix)).unwrap();
        let elapsed = start.elapsed();
        let d = run.report.trace_distance;
        pass &= d < 1e-8 && elapsed < Duration::from_secs(60);
        details.push(format!("{name} {d:.3e} in {elapsed:.2?}"));
    }
    verdict(
        4,
        "pipeline at N=580 (580x580 density matrix)",
        pass,
        format!("{} (< 1e-8, < 60 s each)", details.join("; ")),
    );
}

#[test]
fn criterion_5_noise_envelope() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let budgets = [1e4, 1e5, 1e6, 1e7];
    let g = GridSpec::new(128, 2.0).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for (name, mix) in mixtures() {
        let mut means = Vec::new();
        let mut unnormalized = Vec::new();
        for b in budgets {
            let (mut acc, mut acc_un) = (0.0, 0.0);
            for seed in 0..10 {
                let mut cfg = PipelineConfig::new(g, mix.clone());
                cfg.noise = NoiseModel::poisson(b, seed);
                cfg.filter_sigma_px = 2.0;
                let report = run_pipeline(&cfg).unwrap().report;
                acc += report.trace_distance;
                acc_un += report.trace_distance_unnormalized.unwrap();
            }
            means.push(acc / 10.0);
            unnormalized.push(acc_un / 10.0);
        }
        let at_1e6 = means[2];
        let monotone = means.windows(2).all(|w| w[1] < w[0]);
        let slope = loglog_slope(&budgets, &means);
        let ok = at_1e6 > 0.02 && at_1e6 < 0.35 && monotone && (slope + 0.5).abs() <= 0.15;
        pass &= ok;
        details.push(format!(
            "{name}: means {:?} (unnormalized {:?}), at 1e6 {at_1e6:.4} in (0.02, 0.35), monotone {monotone}, slope {slope:.3} in -0.5 +- 0.15",
            means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>(),
            unnormalized.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>(),
        ));
    }
    verdict(5, "Poisson envelope, sigma = 2 px, 10 seeds, N=128", pass, details.join("; "));
}

#[test]
fn criterion_6_invariant_suites() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_owned());
        }
    };
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20u64 {
        let mut r = rng(1000 + seed);
        let n = 2 + (seed as usize * 7) % 63;
        let g = GridSpec::new(n, 2.0).unwrap();
        let a = random_mixture(&mut r, &g, 1 + seed as usize % 4);
        let b = random_mixture(&mut r, &g, 2);
        let m = random_mixture(&mut r, &g, 3);

        let f = forward_frames(&a, &g).unwrap();
        check("closure D+A=R+L", f.closure_defect() < 1e-12);

        let ab = trace_distance(&a, &b).unwrap();
        check("symmetry", ab == trace_distance(&b, &a).unwrap());
        check("identity", trace_distance(&a, &a).unwrap() < 1e-10);
        check("non-negative", ab >= 0.0);
        check(
            "triangle",
            ab <= trace_distance(&a, &m).unwrap() + trace_distance(&m, &b).unwrap() + 1e-10,
        );
        let u = random_unitary(&mut r, n);
        let rot = |x: &DensityMatrix| DensityMatrix::new(hermitian_part(&(&u * x.elements() * u.adjoint())), g).unwrap();
        check("unitary invariance", (trace_distance(&rot(&a), &rot(&b)).unwrap() - ab).abs() < 1e-10);

        let noisy = apply_noise(&f, &NoiseModel::poisson(1e5, seed)).unwrap();
        let raw = reconstruct_density(&noisy).unwrap();
        let h = hermitize(&raw);
        check("hermitize idempotent", hermitize(&h).elements() == h.elements());

        let psi = random_state(&mut r, &g);
        let phi = random_state(&mut r, &g);
        let f0 = mode_fidelity(&fix_gauge(&psi).unwrap(), &phi).unwrap();
        for theta in [0.1, 1.0, -2.5, 3.1] {
            let f1 = mode_fidelity(&fix_gauge(&psi.with_phase(theta)).unwrap(), &phi).unwrap();
            check("gauge invariance", (f0 - f1).abs() < 1e-12);
        }

        let prov = Provenance {
            command: "acceptance".into(),
            seed: Some(seed),
        };
        for (k, data) in [ArrayData::Density(raw), ArrayData::Frames(noisy), ArrayData::Mode(psi)]
            .into_iter()
            .enumerate()
        {
            let base = dir.path().join(format!("s{seed}_{k}"));
            write_array(&base, &data, &prov).unwrap();
            check("I/O round trip", read_array(&base).unwrap().0 == data);
        }
    }
    failures.dedup();
    verdict(
        6,
        "invariants: closure, metric axioms, unitary invariance, hermitize, gauge, I/O",
        failures.is_empty(),
        if failures.is_empty() {
            "20 random cases, all checks hold".into()
        } else {
            format!("violated: {}", failures.join(", "))
        },
    );
}

#[test]
fn criterion_7_resource_accounting() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let r = resource_report(580);
    let plan_total = ScanPlan::two_step(580).unwrap().measurements_total();
    verdict(
        7,
        "resource accounting at N=580",
        r.scan_measurements == 672_800 && r.direct_measurements == 1 && plan_total == 672_800,
        format!(
            "{} scan measurements vs {} direct frame set, scan photon efficiency {:.5}",
            r.scan_measurements, r.direct_measurements, r.relative_photon_efficiency
        ),
    );
}
