//! Scenario files: TOML schema, per-curve overrides and validation.
//!
//! A scenario describes one geometry, two dipoles, one sweep and the kernel
//! to report. Optional `[[curve]]` entries re-run the same sweep with dotted
//! path overrides (`set = { "materials.metal.gamma" = 1e-3 }`), producing one
//! output column per curve.

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub units: UnitsSpec,
    pub materials: BTreeMap<String, MaterialSpec>,
    pub geometry: GeometrySpec,
    pub dipoles: DipolesSpec,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub frequency: Option<FrequencySpec>,
    pub output: OutputSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub spectrum: Option<SpectrumSpec>,
    #[serde(default)]
    pub curve: Vec<CurveSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    /// Multiples of the reference wavelength `λ_ref = 2πc/ω_ref`.
    #[default]
    Lambda,
    Nm,
}

impl LengthUnit {
    pub fn label(self) -> &'static str {
        match self {
            LengthUnit::Lambda => "lambda_ref",
            LengthUnit::Nm => "nm",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSpec {
    #[serde(default)]
    pub length: LengthUnit,
    /// Reference wavelength in nm; required for `nm` lengths and SI output.
    pub lambda_ref_nm: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSpec {
    Constant { eps: [f64; 2] },
    DrudeLorentz { omega_p: f64, omega_t: f64, gamma: f64 },
    /// Rows of `[omega, re, im]`.
    Table { samples: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    Bulk { medium: String },
    /// Dipoles live in `upper`; `z` is the height above the interface.
    Halfspace { upper: String, lower: String },
    /// Listed from top to bottom; exactly one layer carries `source = true`.
    Layers { layers: Vec<LayerSpec> },
    /// Sphere centred at the origin.
    Sphere { radius: f64, outside: String, inside: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub material: String,
    pub thickness: Option<f64>,
    #[serde(default)]
    pub source: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipolesSpec {
    pub a: DipoleSpec,
    pub b: DipoleSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleSpec {
    pub position: [f64; 3],
    pub orientation: OrientationSpec,
    /// Reference plane for `position[2]` inside a slab.
    #[serde(default)]
    pub anchor: Anchor,
    /// Moment magnitude for SI output (default 1 D).
    pub moment_debye: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OrientationSpec {
    Vector([f64; 3]),
    Named(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    #[default]
    Bottom,
    Center,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "omega")]
    Omega,
    #[serde(rename = "Rx")]
    Rx,
    #[serde(rename = "z")]
    Z,
    #[serde(rename = "d_cavity")]
    DCavity,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Omega => "omega",
            SweepVariable::Rx => "Rx",
            SweepVariable::Z => "z",
            SweepVariable::DCavity => "d_cavity",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.start];
        }
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    /// Frequency in units of `ω_ref`.
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Transfer,
    Decay,
    Both,
    Spectrum,
    TotalRate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
pub enum Normalization {
    #[default]
    #[serde(rename = "free_space_ratio")]
    FreeSpaceRatio,
    #[serde(rename = "paper_fig3_units")]
    PaperFig3Units,
    #[serde(rename = "SI")]
    Si,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::FreeSpaceRatio => "free_space_ratio",
            Normalization::PaperFig3Units => "paper_fig3_units",
            Normalization::Si => "SI",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartSpec {
    #[default]
    Full,
    Propagating,
    Evanescent,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Exact,
    /// Near-interface closed form (half-space only).
    Asymptotic,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub kernel: Kernel,
    #[serde(default)]
    pub normalization: Normalization,
    /// Portion of the Sommerfeld integral kept in the reflection tensor.
    #[serde(default)]
    pub part: PartSpec,
    #[serde(default)]
    pub method: Method,
    /// Add the homogeneous-medium tensor to the scattering part.
    #[serde(default = "yes")]
    pub include_bulk: bool,
    /// Sweep ranges `[lo, hi]` over which log-log slopes are reported.
    #[serde(default)]
    pub slopes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub series_tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
            series_tail: 1e-10,
        }
    }
}

fn default_hwhm() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSetSpec {
    /// Rows of `[center, weight]`, centers in units of `ω_ref`.
    pub lines: Vec<[f64; 2]>,
    #[serde(default = "default_hwhm")]
    pub hwhm: f64,
}

fn default_kernel_points() -> usize {
    161
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub emission: LineSetSpec,
    pub absorption: Option<LineSetSpec>,
    /// Frequency samples of the kernel used for spectral-overlap rates.
    #[serde(default = "default_kernel_points")]
    pub kernel_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub label: String,
    #[serde(default)]
    pub set: toml::Table,
}

/// One problem found while reading or checking a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub line: Option<usize>,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if !self.path.is_empty() {
            write!(f, "{}: ", self.path)?;
        }
        write!(f, "{}", self.message)
    }
}

/// A parsed scenario together with its source text.
#[derive(Debug, Clone)]
pub struct Source {
    pub text: String,
    pub file: ScenarioFile,
    /// Documents for each curve after overrides (the base alone when no
    /// curves are declared).
    pub curves: Vec<(String, ScenarioFile)>,
}

impl Source {
    pub fn parse(text: &str) -> Result<Self, Vec<Violation>> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| vec![toml_violation(text, &e)])?;
        let curves = if file.curve.is_empty() {
            vec![("value".to_string(), file.clone())]
        } else {
            let base: toml::Table = toml::from_str(text).map_err(|e| vec![toml_violation(text, &e)])?;
            let mut out = Vec::new();
            let mut problems = Vec::new();
            for (i, curve) in file.curve.iter().enumerate() {
                match apply_overrides(&base, &curve.set).and_then(|t| {
                    toml::Value::Table(t)
                        .try_into::<ScenarioFile>()
                        .map_err(|e| e.message().to_string())
                }) {
                    Ok(doc) => out.push((curve.label.clone(), doc)),
                    Err(message) => problems.push(Violation {
                        line: locate(text, &format!("curve.{i}.set")),
                        path: format!("curve '{}'", curve.label),
                        message,
                    }),
                }
            }
            if !problems.is_empty() {
                return Err(problems);
            }
            out
        };
        Ok(Self {
            text: text.to_string(),
            file,
            curves,
        })
    }

    /// SHA-256 of the scenario text and any command-line overrides.
    pub fn hash(&self, extra: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.text.as_bytes());
        h.update(extra.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn toml_violation(text: &str, e: &toml::de::Error) -> Violation {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    Violation {
        line,
        path: String::new(),
        message: e.message().trim().to_string(),
    }
}

/// Applies `set` entries (dotted paths into the document) to a copy of `base`.
/// The `curve` array itself is dropped from the result.
pub fn apply_overrides(base: &toml::Table, set: &toml::Table) -> Result<toml::Table, String> {
    let mut doc = base.clone();
    doc.remove("curve");
    for (path, value) in set {
        let keys: Vec<&str> = path.split('.').collect();
        let (last, parents) = keys.split_last().expect("split yields at least one element");
        let mut table = &mut doc;
        for key in parents {
            table = match table.get_mut(*key) {
                Some(toml::Value::Table(t)) => t,
                _ => return Err(format!("override path '{path}' does not name a table entry")),
            };
        }
        table.insert((*last).to_string(), value.clone());
    }
    Ok(doc)
}

/// Best-effort source line for a dotted path: the line of the deepest key or
/// table header that matches a prefix of `path`.
pub fn locate(text: &str, path: &str) -> Option<usize> {
    let target: Vec<&str> = path.split('.').collect();
    let mut header: Vec<String> = Vec::new();
    let mut array_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut best: Option<(usize, usize)> = None;
    let consider = |full: &[String], line: usize, best: &mut Option<(usize, usize)>| {
        let depth = full.iter().zip(&target).take_while(|(a, b)| a.as_str() == **b).count();
        if depth == full.len() && depth > 0 && best.map_or(true, |(d, _)| depth > d) {
            *best = Some((depth, line));
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix("[[").and_then(|l| l.split("]]").next()) {
            let name = inner.trim().to_string();
            let index = array_index.entry(name.clone()).and_modify(|n| *n += 1).or_insert(0);
            header = name.split('.').map(|s| s.trim().to_string()).collect();
            header.push(index.to_string());
            consider(&header, i + 1, &mut best);
        } else if let Some(inner) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            header = inner.split('.').map(|s| s.trim().trim_matches('"').to_string()).collect();
            consider(&header, i + 1, &mut best);
        } else if let Some((key, _)) = line.split_once('=') {
            let mut full = header.clone();
            full.extend(key.split('.').map(|s| s.trim().trim_matches('"').to_string()));
            consider(&full, i + 1, &mut best);
        }
    }
    best.map(|(_, line)| line)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"

[materials.vacuum]
kind = "constant"
eps = [1.0, 0.0]

[geometry]
kind = "bulk"
medium = "vacuum"

[dipoles]
a = { position = [0.0, 0.0, 0.0], orientation = [0.0, 0.0, 1.0] }
b = { position = [0.1, 0.0, 0.0], orientation = "isotropic-average" }

[sweep]
variable = "omega"
start = 0.5
stop = 1.5
points = 3

[output]
kernel = "transfer"
"#;

    #[test]
    fn parses_minimal_scenario() {
        let s = Source::parse(MINIMAL).unwrap();
        assert_eq!(s.curves.len(), 1);
        assert_eq!(s.file.output.normalization, Normalization::FreeSpaceRatio);
        assert!(s.file.output.include_bulk);
        assert_eq!(s.file.sweep.values(), vec![0.5, 1.0, 1.5]);
    }

    #[test]
    fn log_sweep_is_geometric() {
        let sweep = SweepSpec {
            variable: SweepVariable::Rx,
            start: 1e-3,
            stop: 1e-1,
            points: 3,
            spacing: Spacing::Log,
        };
        let v = sweep.values();
        assert!((v[1] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = MINIMAL.replace("points = 3", "points = \"three\"");
        let err = Source::parse(&text).unwrap_err();
        let expected = text.lines().position(|l| l.contains("three")).unwrap() + 1;
        assert_eq!(err[0].line, Some(expected));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("kernel = \"transfer\"", "kernel = \"transfer\"\ncolour = 3");
        assert!(Source::parse(&text).is_err());
    }

    #[test]
    fn curve_overrides_replace_values() {
        let text = format!(
            "{MINIMAL}\n[[curve]]\nlabel = \"a\"\n\n[[curve]]\nlabel = \"b\"\nset = {{ \"materials.vacuum.eps\" = [2.0, 0.0] }}\n"
        );
        let s = Source::parse(&text).unwrap();
        assert_eq!(s.curves.len(), 2);
        match &s.curves[1].1.materials["vacuum"] {
            MaterialSpec::Constant { eps } => assert_eq!(eps[0], 2.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_override_path_is_reported() {
        let text = format!("{MINIMAL}\n[[curve]]\nlabel = \"x\"\nset = {{ \"nothing.here\" = 1 }}\n");
        let err = Source::parse(&text).unwrap_err();
        assert!(err[0].message.contains("nothing.here"));
        assert!(err[0].line.is_some());
    }

    #[test]
    fn locate_finds_keys_in_tables_and_inline() {
        assert_eq!(locate(MINIMAL, "sweep.points"), MINIMAL.lines().position(|l| l.starts_with("points")).map(|i| i + 1));
        let a = MINIMAL.lines().position(|l| l.starts_with("a = ")).unwrap() + 1;
        assert_eq!(locate(MINIMAL, "dipoles.a.position"), Some(a));
    }

    #[test]
    fn hash_depends_on_overrides() {
        let s = Source::parse(MINIMAL).unwrap();
        assert_ne!(s.hash(""), s.hash("rel_tol=1e-6"));
        assert_eq!(s.hash("").len(), 64);
    }
}
