use std::f64::consts::{E, PI};

use medfret::quadrature::{integrate_segmented, QuadratureSpec};
use medfret::specfun::bessel_j;
use num_complex::Complex64;

struct Case {
    name: &'static str,
    f: Box<dyn Fn(f64) -> Complex64>,
    a: f64,
    b: f64,
    breakpoints: Vec<f64>,
    decay: Option<f64>,
    exact: Complex64,
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn case(name: &'static str, f: impl Fn(f64) -> f64 + 'static, a: f64, b: f64, exact: f64) -> Case {
    Case {
        name,
        f: Box::new(move |x| real(f(x))),
        a,
        b,
        breakpoints: vec![],
        decay: None,
        exact: real(exact),
    }
}

fn cases() -> Vec<Case> {
    let osc = Complex64::new(-1.0, 10.0);
    let mut v = vec![
        case("x^2", |x| x * x, 0.0, 1.0, 1.0 / 3.0),
        case("exp", f64::exp, 0.0, 1.0, E - 1.0),
        case("sin", f64::sin, 0.0, PI, 2.0),
        case("lorentz", |x| 1.0 / (1.0 + x * x), 0.0, 1.0, PI / 4.0),
        case("log", f64::ln, 0.0, 1.0, -1.0),
        case("sqrt", f64::sqrt, 0.0, 1.0, 2.0 / 3.0),
        case("gauss", |x| (-x * x).exp(), 0.0, f64::INFINITY, PI.sqrt() / 2.0),
        case("cauchy tail", |x| 1.0 / (1.0 + x * x), 0.0, f64::INFINITY, PI / 2.0),
        case("upper rsqrt", |x| 1.0 / (1.0 - x).sqrt(), 0.0, 1.0, 2.0),
        case("cos^2", |x| (5.0 * x).cos().powi(2), 0.0, 2.0 * PI, PI),
        case("x exp", |x| x * (-x).exp(), 0.0, f64::INFINITY, 1.0),
        case("J1 laplace", |x| bessel_j(1, x) * (-x).exp(), 0.0, f64::INFINITY, 1.0 - 1.0 / 2f64.sqrt()),
        case("damped sin", |x| x.sin() * (-x).exp(), 0.0, f64::INFINITY, 0.5),
        case("cube root", f64::cbrt, 0.0, 1.0, 0.75),
        case("narrow peak", |x| 1.0 / (x * x + 0.01), -1.0, 1.0, 20.0 * 10f64.atan()),
    ];
    v.push(Case {
        breakpoints: vec![0.3],
        ..case("kink", |x| (x - 0.3).abs(), 0.0, 1.0, 0.29)
    });
    v.push(Case {
        name: "damped oscillation",
        f: Box::new(move |x| (osc * x).exp()),
        a: 0.0,
        b: 10.0,
        breakpoints: vec![],
        decay: None,
        exact: ((osc * 10.0).exp() - 1.0) / osc,
    });
    v.push(Case {
        decay: Some(2.0),
        ..case("marched cos", |x| (-2.0 * x).exp() * (3.0 * x).cos(), 0.0, f64::INFINITY, 2.0 / 13.0)
    });
    v.push(Case {
        name: "complex phase",
        f: Box::new(|x| Complex64::new(0.0, 20.0 * x).exp()),
        a: 0.0,
        b: 1.0,
        breakpoints: vec![],
        decay: None,
        exact: (Complex64::new(0.0, 20.0).exp() - 1.0) / Complex64::new(0.0, 20.0),
    });
    v.push(Case {
        decay: Some(1.0),
        ..case("marched x^2 exp", |x| x * x * (-x).exp(), 0.0, f64::INFINITY, 2.0)
    });
    v
}

fn run(c: &Case, rel_tol: f64) -> (Complex64, f64) {
    let mut spec = QuadratureSpec::default().with_rel_tol(rel_tol).with_breakpoints(c.breakpoints.clone());
    if let Some(k) = c.decay {
        spec = spec.with_tail_decay(k, None);
    }
    let r = integrate_segmented(&c.f, c.a, c.b, &spec).unwrap_or_else(|e| panic!("{}: {e}", c.name));
    (r.value, r.error)
}

#[test]
fn smoke_suite_has_twenty_cases() {
    assert_eq!(cases().len(), 20);
}

#[test]
fn reported_error_is_honest() {
    for c in cases() {
        for rel_tol in [1e-6, 1e-8, 1e-10] {
            let (value, error) = run(&c, rel_tol);
            let true_error = (value - c.exact).norm();
            // A few ulps of the result are below what any estimate can resolve.
            let rounding = 8.0 * f64::EPSILON * c.exact.norm();
            assert!(
                true_error <= 10.0 * error + rounding,
                "{} at rel_tol {rel_tol:e}: true error {true_error:e}, estimate {error:e}",
                c.name
            );
        }
    }
}

#[test]
fn refining_tolerance_stays_within_prior_estimate() {
    for c in cases() {
        let (coarse, coarse_error) = run(&c, 1e-6);
        let (fine, _) = run(&c, 1e-7);
        let rounding = 8.0 * f64::EPSILON * c.exact.norm();
        assert!((fine - coarse).norm() <= coarse_error + rounding, "{}", c.name);
    }
}
