//! One-dimensional quadrature kernels: fixed Gauss-Legendre rules and a
//! globally adaptive Gauss-Kronrod (G7,K15) integrator.
//!
//! The adaptive integrator is deterministic: the worst interval is selected by
//! (error, insertion index) and the final sum runs over intervals ordered by
//! left endpoint, so results do not depend on evaluation order elsewhere.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes of the 15-point Kronrod rule on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];

/// Weights of the 15-point Kronrod rule, matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];

/// Weights of the embedded 7-point Gauss rule (at XGK[1], XGK[3], XGK[5], 0).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated absolute error.
    pub abs_error: f64,
    /// Whether the requested tolerance was met within the interval budget.
    pub converged: bool,
}

/// One Gauss-Kronrod step on [a, b]. Returns (K15 value, error estimate).
fn qk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);

    let mut eval = |x: f64| -> Result<f64> {
        let y = f(x)?;
        if y.is_nan() {
            return Err(Error::NonFiniteIntegrand { location: x });
        }
        Ok(y)
    };

    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    kronrod *= half;
    gauss *= half;

    // Conservative estimate: |K15 - G7| overstates the Kronrod error, which
    // is what we want when integrands carry multi-scale boundary layers (the
    // rescaled QUADPACK estimate proved orders of magnitude optimistic there).
    let err = (kronrod - gauss).abs();
    Ok((kronrod, err.max(f64::EPSILON * kronrod.abs())))
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Globally adaptive Gauss-Kronrod integration of `f` over [a, b].
///
/// `b < a` integrates in reverse and negates. NaN integrand values abort with
/// [`Error::NonFiniteIntegrand`] carrying the offending node.
pub fn adaptive<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
            converged: true,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let (v0, e0) = qk15(&mut f, lo, hi)?;
    let mut segments = vec![Segment {
        a: lo,
        b: hi,
        value: v0,
        error: e0,
    }];

    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol {
            return Ok(Quadrature {
                value: sign * sorted_sum(&mut segments),
                abs_error: err,
                converged: true,
            });
        }
        if segments.len() >= max_intervals {
            return Ok(Quadrature {
                value: sign * sorted_sum(&mut segments),
                abs_error: err,
                converged: false,
            });
        }

        // Split the worst interval; first-created wins ties for determinism.
        let mut worst = 0;
        for (i, s) in segments.iter().enumerate() {
            if s.error > segments[worst].error {
                worst = i;
            }
        }
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval at floating-point resolution; freeze it.
            segments[worst].error = 0.0;
            continue;
        }
        let (vl, el) = qk15(&mut f, seg.a, mid)?;
        let (vr, er) = qk15(&mut f, mid, seg.b)?;
        segments[worst] = Segment {
            a: seg.a,
            b: mid,
            value: vl,
            error: el,
        };
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: vr,
            error: er,
        });
    }
}

/// Kahan sum of segment values in left-endpoint order.
fn sorted_sum(segments: &mut [Segment]) -> f64 {
    segments.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap());
    let mut sum = 0.0;
    let mut c = 0.0;
    for s in segments.iter() {
        let y = s.value - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// A fixed Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Compute the n-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d2) = legendre(n, x);
                    dp = d2;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Node/weight pairs mapped onto [a, b].
    pub fn iter_on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let center = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (center + half * x, w * half))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.iter_on(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Legendre polynomial P_n and derivative at x by upward recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Process-wide cache of Gauss-Legendre rules.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n)
        .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
        .clone()
}
