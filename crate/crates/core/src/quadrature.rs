// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

//! Globally adaptive Gauss–Kronrod (G10/K21) quadrature over a
//! caller-supplied initial partition.
//!
//! Oscillatory integrands are handled by seeding the partition with one
//! panel per half-period; the adaptive loop then bisects whichever panel
//! carries the largest error estimate until the summed estimate meets the
//! tolerance or the evaluation budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerances and budget for one integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_evals: 1_000_000,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// Values that can be integrated: real or complex scalars.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<V> {
    pub value: V,
    pub abs_error: f64,
    pub evals: usize,
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<V> {
    sum: V,
    carry: V,
}

impl<V: QuadValue> Default for CompensatedSum<V> {
    fn default() -> Self {
        Self {
            sum: V::zero(),
            carry: V::zero(),
        }
    }
}

impl<V: QuadValue> CompensatedSum<V> {
    pub fn add(&mut self, x: V) {
        let t = self.sum + x;
        if self.sum.magnitude() >= x.magnitude() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn total(&self) -> V {
        self.sum + self.carry
    }
}

impl<V: QuadValue> FromIterator<V> for CompensatedSum<V> {
    fn from_iter<I: IntoIterator<Item = V>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const GK_EVALS: usize = 21;

#[derive(Debug, Clone, Copy)]
struct Panel<V> {
    lo: f64,
    hi: f64,
    value: V,
    error: f64,
    resabs: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<V: QuadValue, F: Fn(f64) -> V>(f: &F, lo: f64, hi: f64) -> Panel<V> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = V::zero();
    let mut resabs = WGK[10] * fc.magnitude();
    let mut vals = [(V::zero(), V::zero()); 10];
    for (j, slot) in vals.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod = kronrod + (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
        *slot = (f1, f2);
    }
    let mean = kronrod * 0.5;
    let mut resasc = WGK[10] * (fc - mean).magnitude();
    for (j, (f1, f2)) in vals.iter().enumerate() {
        resasc += WGK[j] * ((*f1 - mean).magnitude() + (*f2 - mean).magnitude());
    }
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut error = ((kronrod - gauss) * half).magnitude();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Panel {
        lo,
        hi,
        value: kronrod * half,
        error,
        resabs,
    }
}

/// Integrate `f` over `[breakpoints[0], breakpoints[last]]`, using the
/// breakpoints as the initial partition. Breakpoints must be ascending;
/// repeated points are skipped.
pub fn integrate<V, F>(f: F, breakpoints: &[f64], cfg: &QuadConfig) -> Result<Estimate<V>>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    if breakpoints.len() < 2 {
        return Ok(Estimate {
            value: V::zero(),
            abs_error: 0.0,
            evals: 0,
        });
    }
    if breakpoints.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidInput(
            "quadrature breakpoints must be ascending and finite".into(),
        ));
    }

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel<V>> = Vec::new();
    let mut evals = 0usize;
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            heap.push(gk21(&f, w[0], w[1]));
            evals += GK_EVALS;
        }
    }

    let totals = |heap: &BinaryHeap<Panel<V>>, frozen: &[Panel<V>]| {
        let mut value = CompensatedSum::<V>::default();
        let mut err = CompensatedSum::<f64>::default();
        let mut l1 = CompensatedSum::<f64>::default();
        for p in heap.iter().chain(frozen.iter()) {
            value.add(p.value);
            err.add(p.error);
            l1.add(p.resabs);
        }
        (value.total(), err.total(), l1.total())
    };

    let (mut value, mut error, mut l1) = totals(&heap, &frozen);
    let mut iter = 0usize;
    loop {
        let tol = cfg
            .abs_tol
            .max(cfg.rel_tol * value.magnitude())
            .max(100.0 * f64::EPSILON * l1);
        if error <= tol {
            let (v, e, _) = totals(&heap, &frozen);
            if e <= tol {
                return Ok(Estimate {
                    value: v,
                    abs_error: e,
                    evals,
                });
            }
            value = v;
            error = e;
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::QuadratureFailure {
                evals,
                abs_error: error,
                tolerance: tol,
            });
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            frozen.push(worst);
            continue;
        }
        if evals + 2 * GK_EVALS > cfg.max_evals {
            return Err(Error::QuadratureFailure {
                evals,
                abs_error: error,
                tolerance: tol,
            });
        }
        let left = gk21(&f, worst.lo, mid);
        let right = gk21(&f, mid, worst.hi);
        evals += 2 * GK_EVALS;
        value = value + (left.value + right.value - worst.value);
        error += left.error + right.error - worst.error;
        l1 += left.resabs + right.resabs - worst.resabs;
        heap.push(left);
        heap.push(right);
        iter += 1;
        if iter.is_multiple_of(256) {
            (value, error, l1) = totals(&heap, &frozen);
        }
    }
}
