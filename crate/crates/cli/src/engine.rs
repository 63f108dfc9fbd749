//! Resolution of a parsed scenario into library objects, physics validation
//! and evaluation of sweep points.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use medfret::green::bulk::{bulk_coincidence_im, bulk_tensor};
use medfret::green::layered::{interface_asymptotic, refl_green, rotate_lateral, Layer, LayeredStack, Part};
use medfret::green::sphere::{
    sphere_refl_radial_with, sphere_refl_tangential_with, SeriesOptions, SphereGeometry, SpherePositions,
};
use medfret::green::{project, Tensor};
use medfret::media::PermittivityModel;
use medfret::quadrature::{integrate_product_spectrum, QuadratureSpec};
use medfret::rates::{
    decay_kernel_si, decay_ratio_to_vacuum, emission_spectrum, transfer_kernel_scaled, transfer_kernel_si, KernelCurve,
    Line, LineSet,
};
use medfret::units::{ReducedUnits, DEBYE};
use medfret::{Error, Frequency};
use nalgebra::Vector3;
use num_complex::Complex64;

use crate::scenario::{
    Anchor, DipoleSpec, GeometrySpec, Kernel, LengthUnit, LineSetSpec, MaterialSpec, Method, Normalization,
    OrientationSpec, PartSpec, ScenarioFile, Source, SweepVariable, Violation,
};

/// Tolerance overrides supplied on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum Geometry {
    Bulk(PermittivityModel),
    Planar(LayeredStack),
    Sphere(SphereGeometry),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orientation {
    Fixed(Vector3<f64>),
    Isotropic,
    Radial,
    Azimuthal,
}

#[derive(Debug, Clone)]
pub struct Dipole {
    /// Position in units of `λ_ref`; inside a slab `z` is relative to the anchor.
    pub position: Vector3<f64>,
    pub anchor: Anchor,
    pub orientation: Orientation,
    /// Moment magnitude in C·m.
    pub moment: f64,
}

#[derive(Debug, Clone)]
pub struct Spectra {
    pub emission: LineSet,
    pub absorption: Option<LineSet>,
    pub kernel_points: usize,
}

/// One output curve: a fully resolved scenario variant.
#[derive(Debug, Clone)]
pub struct Case {
    pub label: String,
    pub geometry: Geometry,
    pub a: Dipole,
    pub b: Dipole,
    pub omega: Option<f64>,
    pub part: Part,
    pub method: Method,
    pub include_bulk: bool,
    pub quad: QuadratureSpec,
    pub series: SeriesOptions,
    pub spectra: Option<Spectra>,
    pub variable: SweepVariable,
    /// Factor converting scenario lengths into `λ_ref`.
    pub length_scale: f64,
    pub units: Option<ReducedUnits>,
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub name: String,
    pub hash: String,
    pub variable: SweepVariable,
    /// Sweep values in scenario units.
    pub sweep: Vec<f64>,
    pub kernel: Kernel,
    pub normalization: Normalization,
    pub length_unit: LengthUnit,
    pub slopes: Vec<[f64; 2]>,
    pub cases: Vec<Case>,
}

/// Geometry and frequency of one sweep point.
#[derive(Debug, Clone)]
pub struct Point {
    pub freq: Frequency,
    pub geometry: Geometry,
    pub r_a: Vector3<f64>,
    pub r_b: Vector3<f64>,
}

/// Kernel values at one sweep point with the largest relative numerical error
/// estimate among the Green-tensor evaluations behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Vec<f64>,
    pub error: f64,
}

/// Output quantities of a kernel, in column order.
pub fn quantities(kernel: Kernel) -> &'static [&'static str] {
    match kernel {
        Kernel::Transfer => &["transfer"],
        Kernel::Decay => &["decay"],
        Kernel::Both => &["transfer", "decay"],
        Kernel::Spectrum => &["spectrum"],
        Kernel::TotalRate => &["total_transfer", "total_decay"],
    }
}

struct Checker<'a> {
    text: &'a str,
    prefix: String,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.out.push(Violation {
            line: crate::scenario::locate(self.text, path),
            path: format!("{}{path}", self.prefix),
            message: message.into(),
        });
    }
}

impl Plan {
    pub fn build(source: &Source, overrides: Overrides) -> Result<Self, Vec<Violation>> {
        let base = &source.file;
        let mut violations = Vec::new();
        let mut cases = Vec::new();
        let many = source.curves.len() > 1 || !base.curve.is_empty();
        for (label, doc) in &source.curves {
            let mut check = Checker {
                text: &source.text,
                prefix: if many { format!("curve '{label}': ") } else { String::new() },
                out: Vec::new(),
            };
            check_shared(base, doc, &mut check);
            if let Some(case) = resolve(label, doc, overrides, &mut check) {
                check_points(&case, doc, &mut check);
                cases.push(case);
            }
            violations.extend(check.out);
        }
        if !violations.is_empty() {
            return Err(violations);
        }
        let extra = overrides.rel_tol.map(|t| format!("rel_tol={t:e}")).unwrap_or_default();
        Ok(Plan {
            name: base.name.clone(),
            hash: source.hash(&extra),
            variable: base.sweep.variable,
            sweep: base.sweep.values(),
            kernel: base.output.kernel,
            normalization: base.output.normalization,
            length_unit: base.units.length,
            slopes: base.output.slopes.clone(),
            cases,
        })
    }

    pub fn columns(&self) -> Vec<String> {
        let qs = quantities(self.kernel);
        let mut cols = Vec::new();
        for case in &self.cases {
            for q in qs {
                let mut name = "value".to_string();
                if self.cases.len() > 1 {
                    name = format!("{name}_{}", case.label);
                }
                if qs.len() > 1 {
                    name = format!("{name}_{q}");
                }
                cols.push(name);
            }
        }
        cols
    }

    /// Unit of the sweep column.
    pub fn sweep_unit(&self) -> &'static str {
        match self.variable {
            SweepVariable::Omega => "omega_ref",
            _ => self.length_unit.label(),
        }
    }
}

fn check_shared(base: &ScenarioFile, doc: &ScenarioFile, check: &mut Checker) {
    let same = base.sweep.variable == doc.sweep.variable
        && base.sweep.values() == doc.sweep.values()
        && base.output.kernel == doc.output.kernel
        && base.output.normalization == doc.output.normalization
        && base.units.length == doc.units.length;
    if !same {
        check.push("curve", "curves may not change the sweep, kernel, normalization or length unit");
    }
}

fn material(spec: &MaterialSpec) -> medfret::Result<PermittivityModel> {
    match spec {
        MaterialSpec::Constant { eps } => PermittivityModel::constant(Complex64::new(eps[0], eps[1])),
        MaterialSpec::DrudeLorentz { omega_p, omega_t, gamma } => {
            PermittivityModel::drude_lorentz(*omega_p, *omega_t, *gamma)
        }
        MaterialSpec::Table { samples } => {
            PermittivityModel::tabulated(samples.iter().map(|s| (s[0], Complex64::new(s[1], s[2]))).collect())
        }
    }
}

fn line_set(spec: &LineSetSpec) -> medfret::Result<LineSet> {
    let lines = spec.lines.iter().map(|l| Line { center: l[0], weight: l[1] }).collect();
    LineSet::unnormalized(lines, spec.hwhm)
}

fn orientation(spec: &OrientationSpec) -> Result<Orientation, String> {
    match spec {
        OrientationSpec::Vector(v) => {
            let v = Vector3::from(*v);
            let n = v.norm();
            if !(n > 0.0 && n.is_finite()) {
                return Err("orientation vector must be nonzero".into());
            }
            Ok(Orientation::Fixed(v / n))
        }
        OrientationSpec::Named(name) => match name.as_str() {
            "isotropic-average" => Ok(Orientation::Isotropic),
            "radial" => Ok(Orientation::Radial),
            "azimuthal" => Ok(Orientation::Azimuthal),
            other => Err(format!(
                "unknown orientation '{other}' (expected a vector, \"isotropic-average\", \"radial\" or \"azimuthal\")"
            )),
        },
    }
}

fn resolve(label: &str, doc: &ScenarioFile, overrides: Overrides, check: &mut Checker) -> Option<Case> {
    let start = check.out.len();

    let lambda_ref_nm = doc.units.lambda_ref_nm;
    if let Some(l) = lambda_ref_nm {
        if !(l > 0.0 && l.is_finite()) {
            check.push("units.lambda_ref_nm", "reference wavelength must be positive");
        }
    }
    let length_scale = match doc.units.length {
        LengthUnit::Lambda => 1.0,
        LengthUnit::Nm => match lambda_ref_nm {
            Some(l) => 1.0 / l,
            None => {
                check.push("units.length", "nm lengths need units.lambda_ref_nm");
                1.0
            }
        },
    };
    if doc.output.normalization == Normalization::Si && lambda_ref_nm.is_none() {
        check.push("output.normalization", "SI output needs units.lambda_ref_nm");
    }
    let units = lambda_ref_nm.map(|l| ReducedUnits::from_wavelength(l * 1e-9));

    let mut models = BTreeMap::new();
    for (name, spec) in &doc.materials {
        match material(spec) {
            Ok(m) => {
                models.insert(name.clone(), m);
            }
            Err(e) => check.push(&format!("materials.{name}"), e.to_string()),
        }
    }
    let lookup = |name: &str, path: &str, check: &mut Checker| -> Option<PermittivityModel> {
        match models.get(name) {
            Some(m) => Some(m.clone()),
            None => {
                if !doc.materials.contains_key(name) {
                    check.push(path, format!("material '{name}' is not defined"));
                }
                None
            }
        }
    };

    let geometry = match &doc.geometry {
        GeometrySpec::Bulk { medium } => lookup(medium, "geometry.medium", check).map(Geometry::Bulk),
        GeometrySpec::Halfspace { upper, lower } => {
            let u = lookup(upper, "geometry.upper", check);
            let l = lookup(lower, "geometry.lower", check);
            u.zip(l).map(|(u, l)| Geometry::Planar(LayeredStack::half_space(u, l)))
        }
        GeometrySpec::Layers { layers } => {
            let sources: Vec<usize> = layers.iter().enumerate().filter(|(_, l)| l.source).map(|(i, _)| i).collect();
            if sources.len() != 1 {
                check.push("geometry.layers", format!("exactly one layer must be marked source = true, found {}", sources.len()));
            }
            let n = layers.len();
            let mut built = Vec::new();
            for (i, l) in layers.iter().enumerate() {
                let model = lookup(&l.material, "geometry.layers", check);
                let bounding = i == 0 || i + 1 == n;
                let layer = match (bounding, l.thickness) {
                    (true, None) => model.map(Layer::bounding),
                    (true, Some(_)) => {
                        check.push("geometry.layers", format!("layer {i} bounds the stack and takes no thickness"));
                        None
                    }
                    (false, Some(d)) if d > 0.0 && d.is_finite() => model.map(|m| Layer::slab(m, d * length_scale)),
                    (false, _) => {
                        check.push("geometry.layers", format!("layer {i} needs a positive thickness"));
                        None
                    }
                };
                built.extend(layer);
            }
            if built.len() == n && sources.len() == 1 {
                match LayeredStack::new(built, sources[0]) {
                    Ok(s) => Some(Geometry::Planar(s)),
                    Err(e) => {
                        check.push("geometry.layers", e.to_string());
                        None
                    }
                }
            } else {
                None
            }
        }
        GeometrySpec::Sphere { radius, outside, inside } => {
            let o = lookup(outside, "geometry.outside", check);
            let i = lookup(inside, "geometry.inside", check);
            match o.zip(i).map(|(o, i)| SphereGeometry::new(radius * length_scale, o, i)) {
                Some(Ok(g)) => Some(Geometry::Sphere(g)),
                Some(Err(e)) => {
                    check.push("geometry.radius", e.to_string());
                    None
                }
                None => None,
            }
        }
    };

    let dipole = |spec: &DipoleSpec, key: &str, check: &mut Checker| -> Option<Dipole> {
        let path = format!("dipoles.{key}");
        if spec.position.iter().any(|v| !v.is_finite()) {
            check.push(&format!("{path}.position"), "position must be finite");
        }
        let orient = match orientation(&spec.orientation) {
            Ok(o) => Some(o),
            Err(e) => {
                check.push(&format!("{path}.orientation"), e);
                None
            }
        };
        let moment = spec.moment_debye.unwrap_or(1.0);
        if !(moment > 0.0 && moment.is_finite()) {
            check.push(&format!("{path}.moment_debye"), "dipole moment must be positive");
        }
        orient.map(|orientation| Dipole {
            position: Vector3::from(spec.position) * length_scale,
            anchor: spec.anchor,
            orientation,
            moment: moment * DEBYE,
        })
    };
    let a = dipole(&doc.dipoles.a, "a", check);
    let b = dipole(&doc.dipoles.b, "b", check);

    let kernel = doc.output.kernel;
    let variable = doc.sweep.variable;
    let sweep = &doc.sweep;
    if sweep.points == 0 {
        check.push("sweep.points", "a sweep needs at least one point");
    }
    if !(sweep.start.is_finite() && sweep.stop.is_finite()) {
        check.push("sweep", "sweep bounds must be finite");
    }
    if sweep.spacing == crate::scenario::Spacing::Log && !(sweep.start > 0.0 && sweep.stop > 0.0) {
        check.push("sweep.spacing", "log spacing needs positive bounds");
    }
    if variable == SweepVariable::Omega && !(sweep.start > 0.0 && sweep.stop > 0.0) {
        check.push("sweep.start", "frequencies must be positive");
    }
    let omega = doc.frequency.as_ref().map(|f| f.omega);
    if let Some(w) = omega {
        if !(w > 0.0 && w.is_finite()) {
            check.push("frequency.omega", "frequency must be positive");
        }
    }
    if variable != SweepVariable::Omega && kernel != Kernel::TotalRate && omega.is_none() {
        check.push("frequency", format!("a {} sweep needs [frequency] omega", variable.name()));
    }

    let tol = &doc.tolerances;
    let rel_tol = overrides.rel_tol.unwrap_or(tol.rel_tol);
    if !(rel_tol > 0.0 && tol.abs_tol > 0.0 && tol.series_tail > 0.0 && tol.max_subdivisions > 0) {
        check.push("tolerances", "tolerances must be positive");
    }
    let quad = QuadratureSpec::default()
        .with_rel_tol(rel_tol)
        .with_abs_tol(tol.abs_tol)
        .with_max_subdivisions(tol.max_subdivisions);
    let series = SeriesOptions {
        tail_tol: tol.series_tail,
        ..Default::default()
    };

    let spectra = match &doc.spectrum {
        Some(s) => {
            let em = line_set(&s.emission).map_err(|e| check.push("spectrum.emission", e.to_string())).ok();
            let ab = match &s.absorption {
                Some(spec) => line_set(spec).map_err(|e| check.push("spectrum.absorption", e.to_string())).ok().map(Some),
                None => Some(None),
            };
            if s.kernel_points < 2 {
                check.push("spectrum.kernel_points", "at least two kernel samples are needed");
            }
            em.zip(ab).map(|(emission, absorption)| Spectra {
                emission,
                absorption,
                kernel_points: s.kernel_points,
            })
        }
        None => None,
    };

    let part = match doc.output.part {
        PartSpec::Full => Part::Full,
        PartSpec::Propagating => Part::Propagating,
        PartSpec::Evanescent => Part::Evanescent,
    };

    let (geometry, a, b) = match (geometry, a, b) {
        (Some(g), Some(a), Some(b)) => (g, a, b),
        _ => return None,
    };

    // Combinations of geometry, orientation, sweep and kernel.
    let sphere = matches!(geometry, Geometry::Sphere(_));
    let planar = matches!(geometry, Geometry::Planar(_));
    match (sphere, a.orientation, b.orientation) {
        (true, Orientation::Radial, Orientation::Radial) | (true, Orientation::Azimuthal, Orientation::Azimuthal) => {}
        (true, _, _) => check.push(
            "dipoles",
            "sphere scenarios need both dipoles \"radial\" or both \"azimuthal\"",
        ),
        (false, Orientation::Fixed(_), Orientation::Fixed(_)) | (false, Orientation::Isotropic, Orientation::Isotropic) => {}
        (false, _, _) => check.push(
            "dipoles",
            "planar and bulk scenarios need two orientation vectors or both \"isotropic-average\"",
        ),
    }
    match variable {
        SweepVariable::Rx if sphere => check.push("sweep.variable", "Rx sweeps are not defined for a sphere"),
        SweepVariable::Z if matches!(geometry, Geometry::Bulk(_)) => {
            check.push("sweep.variable", "z sweeps need an interface")
        }
        SweepVariable::DCavity => {
            let slab = matches!(&geometry, Geometry::Planar(s) if s.source_thickness() > 0.0);
            if !slab {
                check.push("sweep.variable", "d_cavity sweeps need a layered geometry with a slab source layer");
            }
        }
        _ => {}
    }
    let slab_source = matches!(&geometry, Geometry::Planar(s) if s.source_thickness() > 0.0);
    for (key, d) in [("a", &a), ("b", &b)] {
        if d.anchor != Anchor::Bottom && !slab_source {
            check.push(&format!("dipoles.{key}.anchor"), "anchors other than \"bottom\" need a slab source layer");
        }
    }
    match kernel {
        Kernel::Spectrum => {
            if variable != SweepVariable::Omega {
                check.push("output.kernel", "spectra are swept over omega");
            }
            if sphere {
                check.push("output.kernel", "spectra need the full Green tensor, which sphere scenarios do not provide");
            }
            if doc.output.normalization == Normalization::PaperFig3Units {
                check.push("output.normalization", "paper_fig3_units applies to transfer kernels only");
            }
            if spectra.is_none() && doc.spectrum.is_none() {
                check.push("spectrum", "spectrum output needs a [spectrum] emission line set");
            }
        }
        Kernel::TotalRate => {
            if variable == SweepVariable::Omega {
                check.push("output.kernel", "total rates integrate over frequency and cannot be swept over omega");
            }
            let has_absorption = doc.spectrum.as_ref().is_some_and(|s| s.absorption.is_some());
            if !has_absorption {
                check.push("spectrum", "total rates need [spectrum] emission and absorption line sets");
            }
        }
        _ => {}
    }
    if part != Part::Full && !planar {
        check.push("output.part", "propagating/evanescent splits exist only for planar geometries");
    }
    if doc.output.method == Method::Asymptotic {
        if !matches!(doc.geometry, GeometrySpec::Halfspace { .. }) {
            check.push("output.method", "the asymptotic form applies to a half-space only");
        }
        if part != Part::Full {
            check.push("output.method", "the asymptotic form has no propagating/evanescent split");
        }
        if matches!(kernel, Kernel::Spectrum | Kernel::TotalRate) {
            check.push("output.method", "the asymptotic form supports transfer and decay kernels only");
        }
    }
    for (i, range) in doc.output.slopes.iter().enumerate() {
        if !(range[0] > 0.0 && range[1] > range[0]) {
            check.push("output.slopes", format!("slope range {i} must satisfy 0 < lo < hi"));
        }
    }

    if check.out.len() > start {
        return None;
    }
    Some(Case {
        label: label.to_string(),
        geometry,
        a,
        b,
        omega,
        part,
        method: doc.output.method,
        include_bulk: doc.output.include_bulk,
        quad,
        series,
        spectra,
        variable,
        length_scale,
        units,
    })
}

fn check_points(case: &Case, doc: &ScenarioFile, check: &mut Checker) {
    for value in doc.sweep.values() {
        let point = match case.point(value) {
            Ok(p) => p,
            Err(message) => {
                let path = match case.variable {
                    SweepVariable::Omega => "dipoles",
                    _ => "sweep",
                };
                check.push(path, format!("at {} = {value}: {message}", case.variable.name()));
                return;
            }
        };
        if let Err(message) = case.check_materials(&point) {
            check.push("materials", format!("at {} = {value}: {message}", case.variable.name()));
            return;
        }
        if case.method == Method::Asymptotic {
            if let Err(message) = case.asymptotic_precondition(&point) {
                check.push("output.method", format!("at {} = {value}: {message}", case.variable.name()));
                return;
            }
        }
    }
}

fn anchor_offset(anchor: Anchor, thickness: f64) -> f64 {
    match anchor {
        Anchor::Bottom => 0.0,
        Anchor::Center => 0.5 * thickness,
        Anchor::Top => thickness,
    }
}

fn is_convergence(e: &Error) -> bool {
    matches!(e, Error::Convergence { .. } | Error::Truncation { .. } | Error::PoleProximity { .. })
}

/// Failure while evaluating a sweep point.
#[derive(Debug, Clone)]
pub struct PointError {
    pub curve: String,
    pub index: usize,
    pub value: f64,
    pub error: Error,
}

impl PointError {
    pub fn is_convergence(&self) -> bool {
        is_convergence(&self.error)
    }
}

impl std::fmt::Display for PointError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "curve '{}', sweep point {} (value {}): {}",
            self.curve, self.index, self.value, self.error
        )
    }
}

/// Scalar couplings at one frequency.
struct Couplings {
    /// `|d̂_B·G·d̂_A|²` or its orientation average.
    sq: f64,
    sq_vacuum: f64,
    /// `d̂_A·Im G(r_A, r_A)·d̂_A` or its orientation average.
    im: f64,
    error: f64,
}

fn relative(error: f64, t: &Tensor) -> f64 {
    let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        error / scale
    } else {
        0.0
    }
}

impl Case {
    /// Geometry and positions at a sweep value (scenario units).
    pub fn point(&self, value: f64) -> Result<Point, String> {
        let freq = match self.variable {
            SweepVariable::Omega => Frequency::reduced(value),
            _ => Frequency::reduced(self.omega.unwrap_or(1.0)),
        };
        let length = value * self.length_scale;
        let mut geometry = self.geometry.clone();
        if self.variable == SweepVariable::DCavity {
            if let Geometry::Planar(stack) = &self.geometry {
                let mut layers = stack.layers().to_vec();
                layers[stack.source()].thickness = length;
                geometry = Geometry::Planar(LayeredStack::new(layers, stack.source()).map_err(|e| e.to_string())?);
            }
        }
        let (mut r_a, mut r_b) = (self.a.position, self.b.position);
        match self.variable {
            SweepVariable::Rx => {
                r_b.x = r_a.x + length;
                r_b.y = r_a.y;
            }
            SweepVariable::Z => match &geometry {
                Geometry::Sphere(s) => {
                    for r in [&mut r_a, &mut r_b] {
                        let n = r.norm();
                        if n == 0.0 {
                            return Err("a dipole at the sphere centre has no radial direction".into());
                        }
                        *r *= (s.radius + length) / n;
                    }
                }
                _ => {
                    r_a.z = length;
                    r_b.z = length;
                }
            },
            _ => {}
        }
        match &geometry {
            Geometry::Planar(stack) => {
                let d = stack.source_thickness();
                r_a.z += anchor_offset(self.a.anchor, d);
                r_b.z += anchor_offset(self.b.anchor, d);
                for (name, r) in [("A", &r_a), ("B", &r_b)] {
                    stack.check_height(r.z).map_err(|e| format!("dipole {name}: {e}"))?;
                }
            }
            Geometry::Sphere(s) => {
                for (name, r) in [("A", &r_a), ("B", &r_b)] {
                    if !(r.norm() > s.radius) {
                        return Err(format!(
                            "dipole {name} at distance {} from the centre is not outside the sphere of radius {}",
                            r.norm(),
                            s.radius
                        ));
                    }
                }
            }
            Geometry::Bulk(_) => {}
        }
        if (r_a - r_b).norm() == 0.0 {
            return Err("donor and acceptor coincide".into());
        }
        Ok(Point { freq, geometry, r_a, r_b })
    }

    fn frequencies(&self, point: &Point) -> Vec<f64> {
        let mut out = vec![point.freq.omega];
        if let Some(s) = &self.spectra {
            out.extend(self.kernel_grid(s).0);
        }
        out
    }

    fn check_materials(&self, point: &Point) -> Result<(), String> {
        let models: Vec<&PermittivityModel> = match &point.geometry {
            Geometry::Bulk(m) => vec![m],
            Geometry::Planar(s) => s.layers().iter().map(|l| &l.model).collect(),
            Geometry::Sphere(s) => vec![&s.outside, &s.inside],
        };
        for w in self.frequencies(point) {
            for m in &models {
                m.evaluate(w).map_err(|e| e.to_string())?;
            }
        }
        Ok(())
    }

    fn asymptotic_precondition(&self, point: &Point) -> Result<(), String> {
        let Geometry::Planar(stack) = &point.geometry else {
            return Err("asymptotic mode needs a half-space".into());
        };
        let upper = stack.layers()[0].model.evaluate(point.freq.omega).map_err(|e| e.to_string())?;
        let lower = stack.layers()[1].model.evaluate(point.freq.omega).map_err(|e| e.to_string())?;
        if upper.im != 0.0 || !(upper.re > 0.0) {
            return Err("the upper medium must be real and positive".into());
        }
        let rx = (point.r_b.xy() - point.r_a.xy()).norm();
        interface_asymptotic(upper.re, lower, point.r_a.z, point.r_b.z, rx, point.freq).map_err(|e| e.to_string())?;
        interface_asymptotic(upper.re, lower, point.r_a.z, point.r_a.z, 0.0, point.freq).map_err(|e| e.to_string())?;
        Ok(())
    }

    fn kernel_grid(&self, spectra: &Spectra) -> (Vec<f64>, f64) {
        let mut sets = vec![&spectra.emission];
        sets.extend(spectra.absorption.as_ref());
        let eta = sets.iter().map(|s| s.hwhm()).fold(0.0, f64::max);
        let centers = sets.iter().flat_map(|s| s.lines().iter().map(|l| l.center));
        let (lo, hi) = centers.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c), hi.max(c)));
        let (lo, hi) = (lo - 8.0 * eta, hi + 8.0 * eta);
        let n = spectra.kernel_points;
        let grid = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        (grid, eta)
    }

    fn host(&self, geometry: &Geometry, freq: Frequency) -> medfret::Result<Complex64> {
        match geometry {
            Geometry::Bulk(m) => m.evaluate(freq.omega),
            Geometry::Planar(s) => s.layers()[s.source()].model.evaluate(freq.omega),
            Geometry::Sphere(s) => s.outside.evaluate(freq.omega),
        }
    }

    /// Full Green tensor `G(r_B, r_A)` for planar and bulk geometries.
    fn tensor(&self, point: &Point, freq: Frequency, r_b: &Vector3<f64>, r_a: &Vector3<f64>) -> medfret::Result<(Tensor, f64)> {
        let host = self.host(&point.geometry, freq)?;
        let bulk = || bulk_tensor(r_b, r_a, host, freq);
        match &point.geometry {
            Geometry::Bulk(_) => Ok((bulk()?, 0.0)),
            Geometry::Planar(stack) => {
                let (refl, error) = self.reflection(stack, freq, r_b, r_a)?;
                let total = if self.include_bulk { refl + bulk()? } else { refl };
                Ok((total, relative(error, &total)))
            }
            Geometry::Sphere(_) => Err(Error::Domain("sphere scenarios only provide radial and azimuthal couplings".into())),
        }
    }

    fn reflection(&self, stack: &LayeredStack, freq: Frequency, r_b: &Vector3<f64>, r_a: &Vector3<f64>) -> medfret::Result<(Tensor, f64)> {
        match self.method {
            Method::Exact => {
                let g = refl_green(stack, r_b, r_a, freq, self.part, &self.quad)?;
                Ok((g.tensor, g.error))
            }
            Method::Asymptotic => {
                let eps1 = stack.layers()[0].model.evaluate(freq.omega)?;
                let eps2 = stack.layers()[1].model.evaluate(freq.omega)?;
                let (dx, dy) = (r_b.x - r_a.x, r_b.y - r_a.y);
                let g = interface_asymptotic(eps1.re, eps2, r_a.z, r_b.z, dx.hypot(dy), freq)?;
                Ok((rotate_lateral(&g.green.tensor, dx, dy), 0.0))
            }
        }
    }

    fn sphere_positions(r_a: &Vector3<f64>, r_b: &Vector3<f64>) -> SpherePositions {
        let (ra, rb) = (r_a.norm(), r_b.norm());
        let cos = (r_a.dot(r_b) / (ra * rb)).clamp(-1.0, 1.0);
        SpherePositions { r_a: ra, r_b: rb, theta_b: cos.acos() }
    }

    /// Sphere scattering plus host coupling for the configured orientation.
    fn sphere_coupling(&self, sphere: &SphereGeometry, freq: Frequency, pos: &SpherePositions, with_bulk: bool) -> medfret::Result<(Complex64, f64)> {
        let radial = self.a.orientation == Orientation::Radial;
        let r = if radial {
            sphere_refl_radial_with(freq, sphere, pos, self.series)?
        } else {
            sphere_refl_tangential_with(freq, sphere, pos, self.series)?
        };
        let mut value = r.value;
        if with_bulk {
            let host = sphere.outside.evaluate(freq.omega)?;
            let (pa, pb) = pos.cartesian();
            let (da, db) = if radial { pos.radial_directions() } else { (Vector3::y(), Vector3::y()) };
            value += project(&bulk_tensor(&pb, &pa, host, freq)?, &db, &da);
        }
        Ok((value, r.tail))
    }

    fn vacuum_sq(&self, point: &Point, freq: Frequency) -> medfret::Result<f64> {
        let one = Complex64::new(1.0, 0.0);
        match &point.geometry {
            Geometry::Sphere(_) => {
                let pos = Self::sphere_positions(&point.r_a, &point.r_b);
                let (pa, pb) = pos.cartesian();
                let (da, db) = if self.a.orientation == Orientation::Radial {
                    pos.radial_directions()
                } else {
                    (Vector3::y(), Vector3::y())
                };
                Ok(project(&bulk_tensor(&pb, &pa, one, freq)?, &db, &da).norm_sqr())
            }
            _ => Ok(self.square(&bulk_tensor(&point.r_b, &point.r_a, one, freq)?)),
        }
    }

    fn square(&self, t: &Tensor) -> f64 {
        match (self.a.orientation, self.b.orientation) {
            (Orientation::Fixed(a), Orientation::Fixed(b)) => project(t, &b, &a).norm_sqr(),
            _ => medfret::rates::orientation_average_sq(t),
        }
    }

    fn im_projected(&self, t: &Tensor) -> f64 {
        match self.a.orientation {
            Orientation::Fixed(a) => project(&t.map(|v| Complex64::new(v.im, 0.0)), &a, &a).re,
            _ => medfret::rates::orientation_average_im(t),
        }
    }

    fn couplings(&self, point: &Point, freq: Frequency, transfer: bool, decay: bool) -> medfret::Result<Couplings> {
        let mut c = Couplings { sq: 0.0, sq_vacuum: 0.0, im: 0.0, error: 0.0 };
        if transfer {
            c.sq_vacuum = self.vacuum_sq(point, freq)?;
            match &point.geometry {
                Geometry::Sphere(s) => {
                    let pos = Self::sphere_positions(&point.r_a, &point.r_b);
                    let (v, tail) = self.sphere_coupling(s, freq, &pos, self.include_bulk)?;
                    c.sq = v.norm_sqr();
                    c.error = c.error.max(tail);
                }
                _ => {
                    let (t, e) = self.tensor(point, freq, &point.r_b, &point.r_a)?;
                    c.sq = self.square(&t);
                    c.error = c.error.max(e);
                }
            }
        }
        if decay {
            let host = self.host(&point.geometry, freq)?;
            let free = if self.include_bulk { bulk_coincidence_im(host, freq) } else { 0.0 };
            match &point.geometry {
                Geometry::Bulk(_) => c.im = bulk_coincidence_im(host, freq),
                Geometry::Planar(stack) => {
                    let (refl, error) = self.reflection(stack, freq, &point.r_a, &point.r_a)?;
                    c.im = self.im_projected(&refl) + free;
                    c.error = c.error.max(relative(error, &refl));
                }
                Geometry::Sphere(s) => {
                    let r = point.r_a.norm();
                    let pos = SpherePositions { r_a: r, r_b: r, theta_b: 0.0 };
                    let (v, tail) = self.sphere_coupling(s, freq, &pos, false)?;
                    c.im = v.im + free;
                    c.error = c.error.max(tail);
                }
            }
        }
        Ok(c)
    }

    fn si(&self) -> ReducedUnits {
        self.units.expect("SI output is validated to carry a reference wavelength")
    }

    fn transfer_value(&self, norm: Normalization, c: &Couplings, freq: Frequency) -> f64 {
        match norm {
            Normalization::FreeSpaceRatio => c.sq / c.sq_vacuum,
            Normalization::PaperFig3Units => transfer_kernel_scaled(Complex64::new(c.sq.sqrt(), 0.0), freq.k0),
            Normalization::Si => {
                let u = self.si();
                let g = u.green_si(c.sq.sqrt());
                transfer_kernel_si(Complex64::new(g, 0.0), self.a.moment, self.b.moment, u.omega_si(freq.omega))
            }
        }
    }

    fn decay_value(&self, norm: Normalization, c: &Couplings, freq: Frequency) -> medfret::Result<f64> {
        match norm {
            Normalization::FreeSpaceRatio | Normalization::PaperFig3Units => decay_ratio_to_vacuum(c.im, freq.k0),
            Normalization::Si => {
                let u = self.si();
                decay_kernel_si(u.green_si(c.im), self.a.moment, u.omega_si(freq.omega))
            }
        }
    }

    /// Kernel values at one sweep point.
    pub fn evaluate(&self, kernel: Kernel, norm: Normalization, value: f64) -> medfret::Result<Sample> {
        let point = self.point(value).map_err(Error::Domain)?;
        let freq = point.freq;
        match kernel {
            Kernel::Transfer | Kernel::Decay | Kernel::Both => {
                let transfer = kernel != Kernel::Decay;
                let decay = kernel != Kernel::Transfer;
                let c = self.couplings(&point, freq, transfer, decay)?;
                let mut values = Vec::new();
                if transfer {
                    values.push(self.transfer_value(norm, &c, freq));
                }
                if decay {
                    values.push(self.decay_value(norm, &c, freq)?);
                }
                Ok(Sample { values, error: c.error })
            }
            Kernel::TotalRate => self.total_rates(&point, norm),
            Kernel::Spectrum => Err(Error::Domain("spectra are evaluated over the whole sweep at once".into())),
        }
    }

    fn total_rates(&self, point: &Point, norm: Normalization) -> medfret::Result<Sample> {
        let spectra = self.spectra.as_ref().ok_or_else(|| Error::Domain("missing line sets".into()))?;
        let absorption = spectra.absorption.as_ref().ok_or_else(|| Error::Domain("missing absorption line set".into()))?;
        let (grid, _) = self.kernel_grid(spectra);
        let mut w = Vec::with_capacity(grid.len());
        let mut w_vac = Vec::with_capacity(grid.len());
        let mut g = Vec::with_capacity(grid.len());
        let mut g_vac = Vec::with_capacity(grid.len());
        let mut error: f64 = 0.0;
        for &omega in &grid {
            let freq = Frequency::reduced(omega);
            let c = self.couplings(point, freq, true, true)?;
            error = error.max(c.error);
            let k0 = freq.k0;
            match norm {
                // Proportional to the absolute kernels, so ratios of the
                // integrals are ratios of total rates.
                Normalization::FreeSpaceRatio => {
                    w.push(k0.powi(4) * c.sq);
                    w_vac.push(k0.powi(4) * c.sq_vacuum);
                    g.push(k0 * k0 * c.im);
                    g_vac.push(k0 * k0 * k0 / (6.0 * PI));
                }
                _ => {
                    w.push(self.transfer_value(norm, &c, freq));
                    g.push(self.decay_value(norm, &c, freq)?);
                }
            }
        }
        let integrate = |values: Vec<f64>, sets: &[&LineSet]| -> medfret::Result<f64> {
            let curve = KernelCurve::new(grid.clone(), values)?;
            Ok(integrate_product_spectrum(&curve, sets, &self.quad)?.value)
        };
        let both = [&spectra.emission, absorption];
        let em = [&spectra.emission];
        let mut transfer = integrate(w, &both)?;
        let mut decay = integrate(g, &em)?;
        match norm {
            Normalization::FreeSpaceRatio => {
                transfer /= integrate(w_vac, &both)?;
                decay /= integrate(g_vac, &em)?;
            }
            Normalization::Si => transfer /= self.si().omega_ref,
            Normalization::PaperFig3Units => {}
        }
        Ok(Sample { values: vec![transfer, decay], error })
    }

    /// Emission spectrum of dipole A observed at B over the whole sweep.
    pub fn spectrum(&self, norm: Normalization, grid: &[f64]) -> medfret::Result<Sample> {
        let spectra = self.spectra.as_ref().ok_or_else(|| Error::Domain("missing emission line set".into()))?;
        let point = self.point(grid[0]).map_err(Error::Domain)?;
        let dipoles: Vec<Vector3<f64>> = match self.a.orientation {
            Orientation::Fixed(d) => vec![d * self.a.moment],
            _ => vec![Vector3::x(), Vector3::y(), Vector3::z()].into_iter().map(|d| d * self.a.moment).collect(),
        };
        let error = std::cell::Cell::new(0.0f64);
        let (scale, molecule, grid_scaled): (f64, LineSet, Vec<f64>) = match norm {
            Normalization::Si => {
                let u = self.si();
                let lines = spectra
                    .emission
                    .lines()
                    .iter()
                    .map(|l| Line { center: u.omega_si(l.center), weight: l.weight })
                    .collect();
                let set = LineSet::unnormalized(lines, u.omega_si(spectra.emission.hwhm()))?;
                (u.omega_ref, set, grid.iter().map(|w| u.omega_si(*w)).collect())
            }
            _ => (1.0, spectra.emission.clone(), grid.to_vec()),
        };
        let green_scale = match norm {
            Normalization::Si => 1.0 / self.si().lambda_ref(),
            _ => 1.0,
        };
        let medium = |omega: f64| -> medfret::Result<Tensor> {
            let freq = Frequency::reduced(omega / scale);
            let (t, e) = self.tensor(&point, freq, &point.r_b, &point.r_a)?;
            error.set(error.get().max(e));
            Ok(t * Complex64::new(green_scale, 0.0))
        };
        let vacuum = |omega: f64| -> medfret::Result<Tensor> {
            let freq = Frequency::reduced(omega / scale);
            Ok(bulk_tensor(&point.r_b, &point.r_a, Complex64::new(1.0, 0.0), freq)? * Complex64::new(green_scale, 0.0))
        };
        let average = |prop: &dyn Fn(f64) -> medfret::Result<Tensor>| -> medfret::Result<Vec<f64>> {
            let mut acc = vec![0.0; grid.len()];
            for d in &dipoles {
                let s = emission_spectrum(&grid_scaled, &molecule, d, prop)?;
                for (a, v) in acc.iter_mut().zip(s) {
                    *a += v / dipoles.len() as f64;
                }
            }
            Ok(acc)
        };
        let mut values = average(&medium)?;
        if norm == Normalization::FreeSpaceRatio {
            let reference = average(&vacuum)?;
            for (v, r) in values.iter_mut().zip(reference) {
                *v /= r;
            }
        }
        Ok(Sample { values, error: error.get() })
    }
}
