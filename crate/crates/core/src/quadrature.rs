//! Globally adaptive Gauss–Kronrod (10/21) integration over finite segments
//! and semi-infinite tails, plus the spectral-overlap integral used for total
//! rates.
//!
//! Finite segments between breakpoints are integrated through the
//! endpoint-smoothing map `x = lo + (hi − lo)(3s² − 2s³)`, which removes
//! inverse-square-root endpoint singularities such as the `1/β` factor of a
//! Sommerfeld integrand at a branch point. Semi-infinite tails are either
//! marched in fixed steps of a declared decay length until their contribution
//! is negligible, or mapped onto a finite interval by `x = x₀ + t/(1 − t)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rates::{KernelCurve, LineSet};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_430_950,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd-indexed Kronrod nodes `XGK[1], XGK[3], …, XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Values that can be integrated: closed under addition and real scaling,
/// with a norm used for error control.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    /// Max-norm over components.
    fn norm(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

/// Fixed-size vector of complex values integrated component-wise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CVec<const N: usize>(pub [Complex64; N]);

impl<const N: usize> Add for CVec<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for CVec<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul<f64> for CVec<N> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for a in self.0.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl<const N: usize> CVec<N> {
    /// Multiplies every component by a complex factor.
    pub fn scale(mut self, factor: Complex64) -> Self {
        for a in self.0.iter_mut() {
            *a *= factor;
        }
        self
    }
}

impl<const N: usize> QuadValue for CVec<N> {
    fn zero() -> Self {
        CVec([Complex64::new(0.0, 0.0); N])
    }
    fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Accuracy targets and segmentation hints for [`integrate_segmented`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of interval bisections before giving up.
    pub max_subdivisions: usize,
    /// Interior points where the integrand is non-smooth or sharply peaked.
    pub breakpoints: Vec<f64>,
    /// Exponential decay constant `κ` of the integrand (`|f| ≲ e^{−κx}`) used
    /// to march a semi-infinite tail. Without it the tail is mapped to a
    /// finite interval.
    pub tail_decay: Option<f64>,
    /// Upper limit for tail marching; reaching it before the tail is
    /// negligible is a convergence failure.
    pub tail_ceiling: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
            breakpoints: Vec::new(),
            tail_decay: None,
            tail_ceiling: None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn with_tail_decay(mut self, decay: f64, ceiling: Option<f64>) -> Self {
        self.tail_decay = Some(decay);
        self.tail_ceiling = ceiling;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if self.breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("breakpoints must be finite".into()));
        }
        if let Some(k) = self.tail_decay {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Domain("tail decay constant must be positive".into()));
            }
        }
        Ok(())
    }

    fn tolerance(&self, magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * magnitude)
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
enum Map {
    /// Smoothed map of `s ∈ [0, 1]` onto `[lo, hi]`.
    Smooth { lo: f64, hi: f64 },
    /// Smoothed map of `s ∈ [0, 1]` onto `[x0, ∞)`.
    Infinite { x0: f64 },
}

impl Map {
    /// Returns `(x, dx/ds)`, or `None` where the map degenerates.
    fn apply(self, s: f64) -> Option<(f64, f64)> {
        match self {
            Map::Smooth { lo, hi } => {
                let t = s * s * (3.0 - 2.0 * s);
                Some((lo + (hi - lo) * t, (hi - lo) * 6.0 * s * (1.0 - s)))
            }
            Map::Infinite { x0 } => {
                let t = s * s * (3.0 - 2.0 * s);
                let u = 1.0 - t;
                if u <= 0.0 {
                    return None;
                }
                Some((x0 + t / u, 6.0 * s * (1.0 - s) / (u * u)))
            }
        }
    }

}

#[derive(Debug, Clone, Copy)]
struct Interval<V> {
    segment: usize,
    lo: f64,
    hi: f64,
    value: V,
    error: f64,
    id: u64,
}

struct ByError<V>(Interval<V>);

impl<V> PartialEq for ByError<V> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<V> Eq for ByError<V> {}
impl<V> PartialOrd for ByError<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for ByError<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .error
            .total_cmp(&other.0.error)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

/// Sum in a fixed pairwise order so results do not depend on accumulation
/// history.
fn pairwise_sum<V: QuadValue>(values: &[V]) -> V {
    match values.len() {
        0 => V::zero(),
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

struct Integrator<'a, V, F> {
    f: &'a F,
    spec: &'a QuadratureSpec,
    maps: Vec<Map>,
    heap: BinaryHeap<ByError<V>>,
    frozen: Vec<Interval<V>>,
    next_id: u64,
    evaluations: usize,
    subdivisions: usize,
}

impl<'a, V: QuadValue, F: Fn(f64) -> V> Integrator<'a, V, F> {
    fn new(f: &'a F, spec: &'a QuadratureSpec) -> Self {
        Self {
            f,
            spec,
            maps: Vec::new(),
            heap: BinaryHeap::new(),
            frozen: Vec::new(),
            next_id: 0,
            evaluations: 0,
            subdivisions: 0,
        }
    }

    fn rule(&mut self, segment: usize, lo: f64, hi: f64) -> Result<Interval<V>> {
        let map = self.maps[segment];
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut fv = [V::zero(); 21];
        let eval = |s: f64| -> Result<V> {
            match map.apply(s) {
                None => Ok(V::zero()),
                Some((x, jac)) => {
                    if jac == 0.0 {
                        return Ok(V::zero());
                    }
                    let y = (self.f)(x);
                    let n = y.norm();
                    if !n.is_finite() {
                        return Err(Error::Domain(format!("integrand is not finite at x = {x:e}")));
                    }
                    Ok(y * jac)
                }
            }
        };
        fv[10] = eval(center)?;
        for k in 0..10 {
            let dx = half * XGK[k];
            fv[k] = eval(center - dx)?;
            fv[20 - k] = eval(center + dx)?;
        }
        self.evaluations += 21;
        let mut kronrod = fv[10] * WGK[10];
        let mut gauss = V::zero();
        for k in 0..10 {
            let pair = fv[k] + fv[20 - k];
            kronrod = kronrod + pair * WGK[k];
            if k % 2 == 1 {
                gauss = gauss + pair * WG[k / 2];
            }
        }
        let mean = kronrod * 0.5;
        let mut resasc = WGK[10] * (fv[10] - mean).norm();
        for k in 0..10 {
            resasc += WGK[k] * ((fv[k] - mean).norm() + (fv[20 - k] - mean).norm());
        }
        resasc *= half.abs();
        let value = kronrod * half;
        let raw = (kronrod - gauss).norm() * half.abs();
        let error = if resasc > 0.0 && raw > 0.0 {
            resasc * (200.0 * raw / resasc).powf(1.5).min(1.0)
        } else {
            raw
        };
        let id = self.next_id;
        self.next_id += 1;
        Ok(Interval {
            segment,
            lo,
            hi,
            value,
            error: error.max(50.0 * f64::EPSILON * value.norm()),
            id,
        })
    }

    /// Adds a segment parameterized by `s ∈ [0, 1]` through `map`.
    fn add_segment(&mut self, map: Map) -> Result<usize> {
        let segment = self.maps.len();
        self.maps.push(map);
        let iv = self.rule(segment, 0.0, 1.0)?;
        self.heap.push(ByError(iv));
        Ok(segment)
    }

    fn intervals(&self) -> impl Iterator<Item = &Interval<V>> {
        self.heap.iter().map(|b| &b.0).chain(self.frozen.iter())
    }

    fn totals(&self) -> (V, f64) {
        let mut all: Vec<&Interval<V>> = self.intervals().collect();
        all.sort_by(|a, b| a.segment.cmp(&b.segment).then(a.lo.total_cmp(&b.lo)));
        let values: Vec<V> = all.iter().map(|iv| iv.value).collect();
        let error = all.iter().map(|iv| iv.error).sum();
        (pairwise_sum(&values), error)
    }

    fn segment_total(&self, segment: usize) -> (V, f64) {
        let mut mine: Vec<&Interval<V>> = self.intervals().filter(|iv| iv.segment == segment).collect();
        mine.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let values: Vec<V> = mine.iter().map(|iv| iv.value).collect();
        (pairwise_sum(&values), mine.iter().map(|iv| iv.error).sum())
    }

    fn refine(&mut self) -> Result<()> {
        // Running sums drive the stopping test; they are replaced by the
        // exact pairwise totals periodically and before accepting.
        let (mut total, mut error) = self.totals();
        let mut steps = 0usize;
        loop {
            if error <= self.spec.tolerance(total.norm()) {
                (total, error) = self.totals();
                if error <= self.spec.tolerance(total.norm()) {
                    return Ok(());
                }
            }
            if self.subdivisions >= self.spec.max_subdivisions {
                return Err(self.failure());
            }
            let Some(ByError(worst)) = self.heap.pop() else {
                return Err(self.failure());
            };
            let mid = 0.5 * (worst.lo + worst.hi);
            let scale = worst.lo.abs().max(worst.hi.abs()).max(f64::MIN_POSITIVE);
            if worst.hi - worst.lo <= 64.0 * f64::EPSILON * scale || mid <= worst.lo || mid >= worst.hi {
                self.frozen.push(worst);
                continue;
            }
            let left = self.rule(worst.segment, worst.lo, mid)?;
            let right = self.rule(worst.segment, mid, worst.hi)?;
            total = total + (left.value + right.value - worst.value);
            error += left.error + right.error - worst.error;
            self.heap.push(ByError(left));
            self.heap.push(ByError(right));
            self.subdivisions += 1;
            steps += 1;
            if steps % 128 == 0 {
                (total, error) = self.totals();
            }
        }
    }

    fn failure(&self) -> Error {
        let (total, error) = self.totals();
        Error::Convergence {
            value: total.norm(),
            error,
            subdivisions: self.subdivisions,
        }
    }

    fn result(&self) -> QuadratureResult<V> {
        let (value, error) = self.totals();
        QuadratureResult {
            value,
            error,
            evaluations: self.evaluations,
            subdivisions: self.subdivisions,
        }
    }
}

/// Integrates `f` over `[a, b]`, where `b` may be `f64::INFINITY`.
///
/// The interval is split at every breakpoint of `spec` lying strictly inside
/// it; each piece is refined adaptively, always bisecting the piece with the
/// largest error estimate, until the summed error estimate is below
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_segmented<V, F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadratureResult<V>>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    spec.validate()?;
    if !a.is_finite() || b.is_nan() || b < a {
        return Err(Error::Domain(format!("invalid integration range [{a}, {b}]")));
    }
    let mut integrator = Integrator::new(&f, spec);
    if a == b {
        return Ok(integrator.result());
    }
    let mut points: Vec<f64> = spec.breakpoints.iter().copied().filter(|&p| p > a && p < b).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = vec![a];
    edges.extend(points);
    if b.is_finite() {
        edges.push(b);
    }
    for w in edges.windows(2) {
        integrator.add_segment(Map::Smooth { lo: w[0], hi: w[1] })?;
    }
    if b.is_finite() {
        integrator.refine()?;
        return Ok(integrator.result());
    }
    let x0 = *edges.last().expect("edges start with a");
    match spec.tail_decay {
        None => {
            integrator.add_segment(Map::Infinite { x0 })?;
            integrator.refine()?;
        }
        Some(kappa) => {
            if edges.len() > 1 {
                integrator.refine()?;
            }
            march_tail(&mut integrator, x0, kappa)?;
        }
    }
    Ok(integrator.result())
}

fn march_tail<V: QuadValue, F: Fn(f64) -> V>(integrator: &mut Integrator<'_, V, F>, x0: f64, kappa: f64) -> Result<()> {
    let step = 4.0 / kappa;
    let ceiling = integrator.spec.tail_ceiling.unwrap_or(x0 + 60.0 / kappa).max(x0 + 2.0 * step);
    let mut x = x0;
    let mut quiet = 0;
    loop {
        let hi = x + step;
        let seg = integrator.add_segment(Map::Smooth { lo: x, hi })?;
        integrator.refine()?;
        let (seg_value, seg_error) = integrator.segment_total(seg);
        let (total, _) = integrator.totals();
        let negligible = 0.01 * integrator.spec.tolerance(total.norm());
        if seg_value.norm() + seg_error < negligible {
            quiet += 1;
            if quiet >= 2 {
                return Ok(());
            }
        } else {
            quiet = 0;
        }
        x = hi;
        if x >= ceiling {
            return if quiet > 0 { Ok(()) } else { Err(integrator.failure()) };
        }
    }
}

/// Overlap integral `∫ dω K(ω) Π_i σ_i(ω)` of a sampled kernel with one or
/// more Lorentzian-broadened line sets.
///
/// The kernel is interpolated linearly on its grid and held at its edge
/// values outside it; every line center must lie at least five half-widths
/// inside the grid so that this extension only touches far line wings.
pub fn integrate_product_spectrum(
    kernel: &KernelCurve,
    spectra: &[&LineSet],
    spec: &QuadratureSpec,
) -> Result<QuadratureResult<f64>> {
    if spectra.is_empty() {
        return Err(Error::Domain("at least one spectrum is required".into()));
    }
    let (lo, hi) = kernel.range();
    for set in spectra {
        for line in set.lines() {
            let margin = 5.0 * set.hwhm();
            if line.center - margin < lo || line.center + margin > hi {
                return Err(Error::Coverage(format!(
                    "line at {} with half-width {} is not covered by the kernel grid [{lo}, {hi}]",
                    line.center,
                    set.hwhm()
                )));
            }
        }
    }
    let density = |w: f64| spectra.iter().map(|s| s.density(w)).product::<f64>();
    let integrand = |w: f64| kernel.value_at(w) * density(w);

    let mut breakpoints: Vec<f64> = kernel.grid().to_vec();
    for set in spectra {
        for line in set.lines() {
            let eta = set.hwhm();
            breakpoints.extend([line.center - eta, line.center, line.center + eta]);
        }
    }
    let inner_spec = QuadratureSpec {
        breakpoints,
        tail_decay: None,
        tail_ceiling: None,
        ..spec.clone()
    };
    let inner = integrate_segmented(integrand, lo, hi, &inner_spec)?;
    let tail_spec = QuadratureSpec {
        abs_tol: spec.abs_tol.max(spec.rel_tol * inner.value.abs()),
        breakpoints: Vec::new(),
        tail_decay: None,
        tail_ceiling: None,
        ..spec.clone()
    };
    let (k_lo, k_hi) = (kernel.value_at(lo), kernel.value_at(hi));
    let upper = integrate_segmented(|x: f64| k_hi * density(hi + x), 0.0, f64::INFINITY, &tail_spec)?;
    let lower = integrate_segmented(|x: f64| k_lo * density(lo - x), 0.0, f64::INFINITY, &tail_spec)?;
    Ok(QuadratureResult {
        value: inner.value + upper.value + lower.value,
        error: inner.error + upper.error + lower.error,
        evaluations: inner.evaluations + upper.evaluations + lower.evaluations,
        subdivisions: inner.subdivisions + upper.subdivisions + lower.subdivisions,
    })
}
