//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits 0 regardless of outcome so the workspace test run stays green; set
//! `MEDFRET_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

#[path = "../../core/tests/oracles/mie.rs"]
mod mie;

use std::f64::consts::PI;
use std::time::Instant;

use medfret::green::layered::{interface_asymptotic, refl_green, refl_green_local, InLayerPositions, Layer, LayeredStack, Part};
use medfret::green::sphere::{mie_coefficients, sphere_refl_radial, sphere_refl_tangential, SphereGeometry, SpherePositions};
use medfret::green::Tensor;
use medfret::media::PermittivityModel;
use medfret::quadrature::QuadratureSpec;
use medfret::Frequency;
use medfret_cli::output::{local_maxima, loglog_slope};
use medfret_cli::{execute, plan, presets, Overrides, RunOutput};
use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn run(text: &str) -> Result<RunOutput, String> {
    let p = plan(text, Overrides::default()).map_err(|e| e.to_string())?;
    execute(&p).map_err(|e| e.to_string())
}

fn preset(name: &str) -> &'static str {
    presets::find(name).unwrap_or_else(|| panic!("missing preset {name}")).text
}

fn replace_block(text: &str, header: &str, body: &str) -> String {
    let start = text.find(header).unwrap_or_else(|| panic!("no {header} block"));
    let end = text[start..].find("\n\n").map_or(text.len(), |i| start + i);
    format!("{}{header}\n{body}{}", &text[..start], &text[end..])
}

fn max_norm(t: &Tensor) -> f64 {
    t.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn random_eps(rng: &mut impl Rng) -> PermittivityModel {
    PermittivityModel::constant(c(rng.gen_range(-5.0..6.0), rng.gen_range(0.01..1.0))).unwrap()
}

fn random_five_layer(rng: &mut impl Rng) -> (LayeredStack, f64) {
    let d = rng.gen_range(0.2..0.6);
    let layers = vec![
        Layer::bounding(random_eps(rng)),
        Layer::slab(random_eps(rng), rng.gen_range(0.02..0.3)),
        Layer::slab(PermittivityModel::constant(c(rng.gen_range(1.0..3.0), 0.0)).unwrap(), d),
        Layer::slab(random_eps(rng), rng.gen_range(0.02..0.3)),
        Layer::bounding(random_eps(rng)),
    ];
    (LayeredStack::new(layers, 2).unwrap(), d)
}

fn free_space_decay() -> Outcome {
    // CODATA 2018
    const HBAR: f64 = 1.054_571_817e-34;
    const EPS0: f64 = 8.854_187_812_8e-12;
    const C: f64 = 299_792_458.0;
    const DEBYE: f64 = 3.335_640_95e-30;
    let text = r#"
name = "vacuum_decay"

[units]
lambda_ref_nm = 500.0

[materials.vacuum]
kind = "constant"
eps = [1.0, 0.0]

[geometry]
kind = "bulk"
medium = "vacuum"

[dipoles]
a = { position = [0.0, 0.0, 0.0], orientation = [0.0, 0.0, 1.0], moment_debye = 4.0 }
b = { position = [0.3, 0.0, 0.0], orientation = [0.0, 0.0, 1.0] }

[sweep]
variable = "omega"
start = 0.2
stop = 3.0
points = 50

[output]
kernel = "decay"
normalization = "SI"
"#;
    let out = match run(text) {
        Ok(o) => o,
        Err(e) => return outcome(false, e),
    };
    let omega_ref = 2.0 * PI * C / 500e-9;
    let d = 4.0 * DEBYE;
    let worst = out
        .sweep
        .iter()
        .zip(&out.rows)
        .map(|(w, row)| {
            let omega = w * omega_ref;
            let expect = omega.powi(3) * d * d / (3.0 * PI * EPS0 * HBAR * C.powi(3));
            (row[0] - expect).abs() / expect
        })
        .fold(0.0, f64::max);
    outcome(worst < 1e-8, format!("max relative deviation {worst:.2e} over 50 frequencies"))
}

fn distance_laws() -> Outcome {
    let text = |start: f64, stop: f64| {
        format!(
            r#"
name = "vacuum_transfer"

[materials.vacuum]
kind = "constant"
eps = [1.0, 0.0]

[geometry]
kind = "bulk"
medium = "vacuum"

[dipoles]
a = {{ position = [0.0, 0.0, 0.0], orientation = [0.0, 0.0, 1.0] }}
b = {{ position = [1.0, 0.0, 0.0], orientation = [0.0, 0.0, 1.0] }}

[frequency]
omega = 1.0

[sweep]
variable = "Rx"
start = {start:e}
stop = {stop:e}
points = 41
spacing = "log"

[output]
kernel = "transfer"
normalization = "paper_fig3_units"
"#
        )
    };
    // k0 = 2π at ω = 1, so qR/2π = R
    let mut slopes = Vec::new();
    for (lo, hi) in [(1e-4, 1e-3), (1e2, 1e3)] {
        match run(&text(lo, hi)) {
            Ok(out) => {
                let y: Vec<f64> = out.rows.iter().map(|r| r[0]).collect();
                slopes.push(loglog_slope(&out.sweep, &y, lo, hi).unwrap_or(f64::NAN));
            }
            Err(e) => return outcome(false, e),
        }
    }
    let pass = (slopes[0] + 6.0).abs() <= 0.05 && (slopes[1] + 2.0).abs() <= 0.05;
    outcome(pass, format!("near-zone slope {:.4}, far-zone slope {:.4}", slopes[0], slopes[1]))
}

fn resonance_placement() -> Outcome {
    let out = match run(preset("fig_into")) {
        Ok(o) => o,
        Err(e) => return outcome(false, e),
    };
    let mut peaks = Vec::new();
    for label in ["gamma_1e-4", "gamma_1e-3", "gamma_1e-2"] {
        let y = out.column(&format!("value_{label}_transfer")).expect("transfer column");
        let (i, max) = y.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        peaks.push((out.sweep[i], max));
    }
    let placed = (peaks[0].0 - 1.06).abs() <= 0.01;
    let ordered = peaks[0].1 > peaks[1].1 && peaks[1].1 > peaks[2].1;
    outcome(
        placed && ordered,
        format!(
            "gamma 1e-4 peak at omega {:.4}; peak heights {:.3e} > {:.3e} > {:.3e}",
            peaks[0].0, peaks[0].1, peaks[1].1, peaks[2].1
        ),
    )
}

fn asymptotic_cross_check() -> Outcome {
    let (z, r_x) = (0.02, 0.015);
    let spec = QuadratureSpec::default();
    let mut per_gamma = Vec::new();
    for gamma in [1e-4, 1e-3, 1e-2] {
        let metal = PermittivityModel::drude_lorentz(0.5, 1.0, gamma).unwrap();
        let stack = LayeredStack::half_space(PermittivityModel::VACUUM, metal.clone());
        let mut worst = (0.0_f64, 0.0);
        for i in 0..=40 {
            let omega = 1.05 + 0.02 * i as f64 / 40.0;
            let f = Frequency::reduced(omega);
            let exact = refl_green_local(&stack, &InLayerPositions { z_a: z, z_b: z, r_x }, f, Part::Full, &spec);
            let approx = interface_asymptotic(1.0, metal.evaluate(omega).unwrap(), z, z, r_x, f);
            let (exact, approx) = match (exact, approx) {
                (Ok(e), Ok(a)) => (e.tensor[(2, 2)], a.green.tensor[(2, 2)]),
                (Err(e), _) | (_, Err(e)) => return outcome(false, e.to_string()),
            };
            let dev = (approx - exact).norm() / exact.norm();
            if dev > worst.0 {
                worst = (dev, omega);
            }
        }
        per_gamma.push((gamma, worst));
    }
    let pass = per_gamma.iter().all(|(_, (dev, _))| *dev <= 0.1);
    let detail: Vec<String> = per_gamma
        .iter()
        .map(|(g, (dev, w))| format!("gamma {g:e}: {:.1}% at omega {w:.4}", 100.0 * dev))
        .collect();
    outcome(pass, format!("max G_zz deviation over omega in [1.05, 1.07]: {}", detail.join("; ")))
}

fn split_additivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2001);
    let spec = QuadratureSpec::default();
    let mut worst = 0.0_f64;
    for trial in 0..40 {
        let (stack, d) = if trial < 20 {
            (LayeredStack::half_space(PermittivityModel::VACUUM, random_eps(&mut rng)), 0.5)
        } else {
            random_five_layer(&mut rng)
        };
        let pos = InLayerPositions {
            z_a: rng.gen_range(0.1..0.9) * d,
            z_b: rng.gen_range(0.1..0.9) * d,
            r_x: rng.gen_range(0.0..0.3),
        };
        let f = Frequency::reduced(rng.gen_range(0.5..1.5));
        let parts: Result<Vec<Tensor>, _> = [Part::Full, Part::Propagating, Part::Evanescent]
            .iter()
            .map(|&p| refl_green_local(&stack, &pos, f, p, &spec).map(|g| g.tensor))
            .collect();
        let parts = match parts {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("trial {trial}: {e}")),
        };
        worst = worst.max(max_norm(&(parts[0] - parts[1] - parts[2])) / max_norm(&parts[0]));
    }
    outcome(
        worst <= 10.0 * spec.rel_tol,
        format!("max relative mismatch {worst:.2e} (limit {:.0e}) over 20 half-space and 20 five-layer cases", 10.0 * spec.rel_tol),
    )
}

fn experiment_ratio() -> Outcome {
    // d/λ_A = 0.21 with λ_A = λ_ref = 614 nm
    let d = 0.21 * 614.0;
    let text = replace_block(preset("fig_barnes1"), "[sweep]", &format!("variable = \"d_cavity\"\nstart = {d}\nstop = {d}\npoints = 1"));
    let out = match run(&text) {
        Ok(o) => o,
        Err(e) => return outcome(false, e),
    };
    let five = out.column("value_five_layer_decay").expect("five-layer column")[0];
    let four = out.column("value_four_layer_decay").expect("four-layer column")[0];
    let ratio = five / four;
    outcome((ratio - 1.3).abs() <= 0.2, format!("decay ratio {ratio:.3} at d = {d:.2} nm"))
}

fn anti_correlation() -> Outcome {
    let text = preset("fig_into").replace("normalization = \"paper_fig3_units\"", "normalization = \"free_space_ratio\"");
    let out = match run(&text) {
        Ok(o) => o,
        Err(e) => return outcome(false, e),
    };
    let omega_l = 1.25_f64.sqrt();
    let mut found = Vec::new();
    for label in ["gamma_1e-4", "gamma_1e-3", "gamma_1e-2"] {
        let w = out.column(&format!("value_{label}_transfer")).unwrap();
        let g = out.column(&format!("value_{label}_decay")).unwrap();
        let hits: Vec<f64> = out
            .sweep
            .iter()
            .enumerate()
            .filter(|&(i, &x)| x > 1.0 && x < omega_l && w[i] < 0.8 && g[i] > 1.2)
            .map(|(_, &x)| x)
            .collect();
        if let (Some(lo), Some(hi)) = (hits.first(), hits.last()) {
            found.push(format!("{label}: {} points in [{lo:.4}, {hi:.4}]", hits.len()));
        }
    }
    let detail = if found.is_empty() { "no band-gap frequency qualifies".to_string() } else { found.join("; ") };
    outcome(!found.is_empty(), detail)
}

fn sphere_resonances() -> Outcome {
    let out = match run(preset("fig_sph")) {
        Ok(o) => o,
        Err(e) => return outcome(false, e),
    };
    let y: Vec<f64> = out.rows.iter().map(|r| r[0]).collect();
    let omega_l = 1.25_f64.sqrt();
    let peaks = local_maxima(&y);
    let best = |range: &dyn Fn(f64) -> bool| {
        peaks.iter().filter(|&&i| range(out.sweep[i])).map(|&i| y[i]).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let below = best(&|w| w < 1.0);
    let gap = best(&|w| w > 1.0 && w < omega_l);
    match (below, gap) {
        (Some(wg), Some(sg)) => outcome(sg > wg, format!("largest below-gap peak {wg:.3e}, largest in-gap peak {sg:.3e}")),
        _ => outcome(false, format!("peaks below gap: {}, in gap: {}", below.is_some(), gap.is_some())),
    }
}

fn reciprocity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let spec = QuadratureSpec::default();
    let mut worst = 0.0_f64;
    for trial in 0..50 {
        let f = Frequency::reduced(rng.gen_range(0.5..1.5));
        let err = match trial % 3 {
            0 | 1 => {
                let (stack, d) = if trial % 3 == 0 {
                    (LayeredStack::half_space(PermittivityModel::VACUUM, random_eps(&mut rng)), 0.3)
                } else {
                    random_five_layer(&mut rng)
                };
                let mut point = || Vector3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(0.05..0.95) * d);
                let (r_a, r_b) = (point(), point());
                let forward = refl_green(&stack, &r_b, &r_a, f, Part::Full, &spec);
                let backward = refl_green(&stack, &r_a, &r_b, f, Part::Full, &spec);
                match (forward, backward) {
                    (Ok(x), Ok(y)) => max_norm(&(x.tensor - y.tensor.transpose())) / max_norm(&x.tensor),
                    (Err(e), _) | (_, Err(e)) => return outcome(false, format!("trial {trial}: {e}")),
                }
            }
            _ => {
                let a = rng.gen_range(0.2..2.0);
                let geometry = SphereGeometry::new(a, PermittivityModel::VACUUM, random_eps(&mut rng)).unwrap();
                let (r1, r2) = (a * rng.gen_range(1.02..2.0), a * rng.gen_range(1.02..2.0));
                let theta_b = rng.gen_range(0.0..PI);
                let ab = SpherePositions { r_a: r1, r_b: r2, theta_b };
                let ba = SpherePositions { r_a: r2, r_b: r1, theta_b };
                let mut e = 0.0_f64;
                for g in [sphere_refl_radial, sphere_refl_tangential] {
                    match (g(f, &geometry, &ab), g(f, &geometry, &ba)) {
                        (Ok(x), Ok(y)) => e = e.max((x.value - y.value).norm() / x.value.norm()),
                        (Err(err), _) | (_, Err(err)) => return outcome(false, format!("trial {trial}: {err}")),
                    }
                }
                e
            }
        };
        worst = worst.max(err);
    }
    outcome(worst <= 1e-6, format!("max relative asymmetry {worst:.2e} over 50 configurations"))
}

fn mie_equivalence() -> Outcome {
    let freq = Frequency::reduced(1.0);
    let media = [c(2.25, 0.0), c(6.0, 0.0), c(1.5, 0.0), c(-4.0, 0.5), c(-16.0, 0.6), c(2.49, 0.3), c(-1.2, 1e-3)];
    let mut worst = (0.0_f64, c(0.0, 0.0), 0.0, 0);
    for eps in media {
        for size in [0.5, 1.0, 3.7, 8.0, 13.0] {
            let geometry = SphereGeometry::new(size / freq.k0, PermittivityModel::VACUUM, PermittivityModel::constant(eps).unwrap()).unwrap();
            for (l, &(a, b)) in mie::coefficients(60, size, eps.sqrt()).iter().enumerate().skip(1) {
                let (bm, bn) = match mie_coefficients(l, freq, &geometry) {
                    Ok(v) => v,
                    Err(e) => return outcome(false, e.to_string()),
                };
                let err = ((-bn - a).norm() / a.norm()).max((-bm - b).norm() / b.norm());
                if err > worst.0 {
                    worst = (err, eps, size, l);
                }
            }
        }
    }
    outcome(
        worst.0 <= 1e-10,
        format!("max relative deviation {:.2e} (eps {}, x {}, l {}) over 7 media, 5 sizes, l <= 60", worst.0, worst.1, worst.2, worst.3),
    )
}

fn main() {
    let criteria: [(&str, f64, fn() -> Outcome); 10] = [
        ("free-space decay oracle", 1.0, free_space_decay),
        ("distance laws", 5.0, distance_laws),
        ("surface-resonance placement", 120.0, resonance_placement),
        ("asymptotic/exact cross-check", 120.0, asymptotic_cross_check),
        ("split additivity", 180.0, split_additivity),
        ("experiment comparison", 300.0, experiment_ratio),
        ("anti-correlation existence", 120.0, anti_correlation),
        ("sphere resonances", 300.0, sphere_resonances),
        ("reciprocity suite", 60.0, reciprocity),
        ("Mie oracle equivalence", 10.0, mie_equivalence),
    ];
    let mut failures = 0;
    for (n, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let pass = result.pass && secs < *budget;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<30} {}  {} [{secs:.2} s of {budget} s]",
            n + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 && std::env::var("MEDFRET_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
