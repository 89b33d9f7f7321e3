//! Scalar and matrix numerical kernels: Gaussian density/CDF/quantile, the
//! normalizing-constant solver b_n = n phi(b_n), Cholesky factorization, and
//! bivariate/multivariate normal probabilities.

use crate::error::{Error, Result};
use crate::quad;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 1/sqrt(2 pi)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_4;
/// ln sqrt(2 pi)
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_405_6;

/// Standard normal density phi(x) = exp(-x^2/2)/sqrt(2 pi).
///
/// Errors on non-finite input.
pub fn std_normal_pdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("std_normal_pdf: non-finite input {x}")));
    }
    Ok(phi(x))
}

/// Standard normal CDF on the extended real line; NaN is rejected.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("std_normal_cdf: NaN input"));
    }
    Ok(norm_cdf(x))
}

#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub(crate) fn norm_cdf(x: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal quantile, Wichura's PPND16 (AS 241), ~1e-15 relative.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "std_normal_quantile: p must lie in (0,1), got {p}"
        )));
    }
    Ok(norm_quantile(p))
}

pub(crate) fn norm_quantile(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        const A: [f64; 8] = [
            3.387_132_872_796_366_608e0,
            1.331_416_678_917_843_774_5e2,
            1.971_590_950_306_551_442_7e3,
            1.373_169_376_550_946_112_5e4,
            4.592_195_393_154_987_145_7e4,
            6.726_577_092_700_870_085_3e4,
            3.343_057_558_358_812_810_5e4,
            2.509_080_928_730_122_672_7e3,
        ];
        const B: [f64; 7] = [
            4.231_333_070_160_091_125_2e1,
            6.871_870_074_920_579_083e2,
            5.394_196_021_424_751_107_7e3,
            2.121_379_430_158_659_586_7e4,
            3.930_789_580_009_271_061e4,
            2.872_908_573_572_194_267_4e4,
            5.226_495_278_852_854_561e3,
        ];
        let num = poly(&A, r);
        let den = poly_monic(&B, r);
        return q * num / den;
    }
    let pl = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-pl.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        const C: [f64; 8] = [
            1.423_437_110_749_683_577_34e0,
            4.630_337_846_156_545_295_9e0,
            5.769_497_221_460_691_405_5e0,
            3.647_848_324_763_204_605_04e0,
            1.270_458_252_452_368_382_58e0,
            2.417_807_251_774_506_117_7e-1,
            2.272_384_498_926_918_458_33e-2,
            7.745_450_142_783_414_076_4e-4,
        ];
        const D: [f64; 7] = [
            2.053_191_626_637_758_821_87e0,
            1.676_384_830_183_803_849_4e0,
            6.897_673_349_851_000_045_5e-1,
            1.481_039_764_274_800_745_9e-1,
            1.519_866_656_361_645_719_66e-2,
            5.475_938_084_995_344_946e-4,
            1.050_750_071_644_416_843_24e-9,
        ];
        poly(&C, r) / poly_monic(&D, r)
    } else {
        r -= 5.0;
        const E: [f64; 8] = [
            6.657_904_643_501_103_777_2e0,
            5.463_784_911_164_114_369_9e0,
            1.784_826_539_917_291_335_8e0,
            2.965_605_718_285_048_912_3e-1,
            2.653_218_952_657_612_309_3e-2,
            1.242_660_947_388_078_438_6e-3,
            2.711_555_568_743_487_578_15e-5,
            2.010_334_399_292_288_132_65e-7,
        ];
        const F: [f64; 6] = [
            5.998_322_065_558_879_376_9e-1,
            1.369_298_809_227_358_053_1e-1,
            1.487_536_129_085_061_485_25e-2,
            7.868_691_311_456_132_591e-4,
            1.846_318_317_510_054_681_8e-6,
            1.421_511_758_316_445_888_7e-15,
        ];
        poly(&E, r) / poly_monic(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Horner with implicit leading 1 constant term: 1 + c1 x + c2 x^2 + ...
fn poly_monic(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = (acc + c) * x;
    }
    acc + 1.0
}

/// The normalizing constant b_n solving b = n phi(b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizingConstant {
    n: u64,
    b_n: f64,
}

impl NormalizingConstant {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn value(&self) -> f64 {
        self.b_n
    }

    /// Truncated asymptotic expansion sqrt(2 ln n) - ((1/2) ln ln n + ln(2 sqrt pi)) / sqrt(2 ln n).
    ///
    /// Used as the Newton starting point and as a cross-check; never as the value.
    pub fn expansion(n: u64) -> f64 {
        let ln_n = (n as f64).ln();
        let s = (2.0 * ln_n).sqrt();
        if s == 0.0 {
            return 0.4;
        }
        s - (0.5 * ln_n.ln() + (2.0 * std::f64::consts::PI.sqrt()).ln()) / s
    }
}

/// Solve b = n phi(b) for the unique positive root (all n >= 1).
///
/// Safeguarded Newton on g(b) = ln b + b^2/2 + ln sqrt(2 pi) - ln n, bracketed;
/// the asymptotic expansion only seeds the iteration.
pub fn normalizing_constant(n: u64) -> Result<NormalizingConstant> {
    if n == 0 {
        return Err(Error::domain("normalizing_constant: n must be >= 1"));
    }
    let ln_n = (n as f64).ln();
    let g = |b: f64| b.ln() + 0.5 * b * b + LN_SQRT_2PI - ln_n;
    let mut lo = 1e-3;
    let mut hi = (2.0 * ln_n.max(std::f64::consts::LN_2)).sqrt() + 2.0;
    debug_assert!(g(lo) < 0.0 && g(hi) > 0.0);

    let mut x = if n >= 2 {
        NormalizingConstant::expansion(n).clamp(lo * 2.0, hi - 1e-3)
    } else {
        0.4
    };
    for _ in 0..200 {
        let fx = g(x);
        if fx == 0.0 {
            break;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = fx / (1.0 / x + x);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4e-16 * x {
            x = next;
            break;
        }
        x = next;
    }
    Ok(NormalizingConstant { n, b_n: x })
}

/// A validated symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl CovarianceMatrix {
    /// Validate symmetry (1e-12 relative), positive diagonal and positive
    /// definiteness (by Cholesky success).
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("CovarianceMatrix: dim must be >= 1"));
        }
        if entries.len() != dim * dim {
            return Err(Error::dimension(format!(
                "CovarianceMatrix: expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("CovarianceMatrix: non-finite entry"));
        }
        let scale = entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut sym = entries.clone();
        for i in 0..dim {
            if entries[i * dim + i] <= 0.0 {
                return Err(Error::domain(format!(
                    "CovarianceMatrix: diagonal entry {i} is not positive"
                )));
            }
            for j in 0..i {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                if (a - b).abs() > 1e-12 * scale.max(1e-300) {
                    return Err(Error::domain(format!(
                        "CovarianceMatrix: asymmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
                let avg = 0.5 * (a + b);
                sym[i * dim + j] = avg;
                sym[j * dim + i] = avg;
            }
        }
        cholesky_flat(dim, &sym, 0.0)?;
        Ok(CovarianceMatrix { dim, entries: sym })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        CovarianceMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Lower-triangular Cholesky factor L with L L^T = psi.
///
/// On failure the error names the failing pivot index.
pub fn cholesky_lower(psi: &CovarianceMatrix) -> Result<Vec<f64>> {
    cholesky_flat(psi.dim, &psi.entries, 0.0)
}

/// Row-major strict Cholesky; pivots must exceed `rel_floor * max_diag`.
pub(crate) fn cholesky_flat(n: usize, a: &[f64], rel_floor: f64) -> Result<Vec<f64>> {
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[i * n + i].abs()));
    let floor = rel_floor * max_diag;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= floor || !s.is_finite() {
                    return Err(Error::Factorization { pivot: i });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Positive semidefinite Cholesky: pivots within `tol` of zero produce a zero
/// row (needed for field covariances pinned at the origin). The factorization
/// is validated by its reconstruction residual.
pub(crate) fn cholesky_psd_flat(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    let max_diag = (0..n).fold(f64::MIN_POSITIVE, |m, i| m.max(a[i * n + i].abs()));
    let tol = 1e-12 * max_diag;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s < -tol || !s.is_finite() {
                    return Err(Error::Factorization { pivot: i });
                }
                l[i * n + i] = s.max(0.0).sqrt();
            } else {
                l[i * n + j] = if l[j * n + j] > 0.0 { s / l[j * n + j] } else { 0.0 };
            }
        }
    }
    // Residual check catches degenerate (non-PSD beyond rounding) inputs.
    let mut worst = 0.0f64;
    let mut worst_idx = 0;
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..=j {
                s += l[i * n + k] * l[j * n + k];
            }
            let r = (s - a[i * n + j]).abs();
            if r > worst {
                worst = r;
                worst_idx = i;
            }
        }
    }
    if worst > 1e-8 * max_diag.max(1.0) {
        return Err(Error::Factorization { pivot: worst_idx });
    }
    Ok(l)
}

/// P(Z1 <= x, Z2 <= y) for a standard bivariate normal with correlation rho.
///
/// One-dimensional quadrature over the correlation parameter in the angle
/// variable rho = sin(theta), where the Plackett integrand is smooth up to
/// |rho| = 1; absolute accuracy ~1e-13.
pub fn bivariate_normal_cdf(x: f64, y: f64, rho: f64) -> Result<f64> {
    if x.is_nan() || y.is_nan() || rho.is_nan() {
        return Err(Error::domain("bivariate_normal_cdf: NaN input"));
    }
    if rho.abs() > 1.0 {
        return Err(Error::domain(format!(
            "bivariate_normal_cdf: |rho| must be <= 1, got {rho}"
        )));
    }
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(norm_cdf(y));
    }
    if y == f64::INFINITY {
        return Ok(norm_cdf(x));
    }
    if rho == 0.0 {
        return Ok(norm_cdf(x) * norm_cdf(y));
    }

    let dxy = (x - y) * (x - y);
    let xy = x * y;
    let integrand = |theta: f64| -> Result<f64> {
        let s = theta.sin();
        let c = theta.cos();
        Ok((-(dxy / (2.0 * c * c) + xy / (1.0 + s))).exp())
    };
    let q = quad::adaptive(integrand, 0.0, rho.asin(), 1e-15, 5e-14, 400)?;
    let val = norm_cdf(x) * norm_cdf(y) + q.value / (2.0 * std::f64::consts::PI);
    Ok(val.clamp(0.0, 1.0))
}

/// Default seed of the low-discrepancy integrator inside `mvn_survivor`.
pub const DEFAULT_MVN_SEED: u64 = 0x4d56_4e5f_514d_43;

/// Value and error estimate of a multivariate normal probability.
#[derive(Debug, Clone, Copy)]
pub struct MvnResult {
    pub value: f64,
    pub error_estimate: f64,
}

/// Survivor function P(X_1 > x_1, ..., X_l > x_l) for X ~ N(0, psi).
///
/// Deterministic given the (seeded) integrator; ~1e-7 absolute for l <= 4
/// (sequential conditioning with variable reordering, tensorized
/// Gauss-Legendre) and ~1e-4 for 5 <= l <= 9 (randomized quasi-uniform rule
/// with a fixed internal seed).
pub fn mvn_survivor(x: &[f64], psi: &CovarianceMatrix) -> Result<f64> {
    mvn_survivor_seeded(x, psi, DEFAULT_MVN_SEED).map(|r| r.value)
}

/// `mvn_survivor` with an explicit seed for the quasi-Monte Carlo branch.
pub fn mvn_survivor_seeded(x: &[f64], psi: &CovarianceMatrix, seed: u64) -> Result<MvnResult> {
    if x.len() != psi.dim() {
        return Err(Error::dimension(format!(
            "mvn_survivor: {} limits for a {}-dimensional matrix",
            x.len(),
            psi.dim()
        )));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("mvn_survivor: NaN limit"));
    }
    // P(X > x) = P(-X <= -x) = P(Y <= -x), Y ~ N(0, psi).
    let upper: Vec<f64> = x.iter().map(|v| -v).collect();
    mvn_cdf_seeded(&upper, psi, seed)
}

/// CDF P(X <= b) for X ~ N(0, psi) by Genz sequential conditioning.
fn mvn_cdf_seeded(b: &[f64], psi: &CovarianceMatrix, seed: u64) -> Result<MvnResult> {
    if b.iter().any(|&v| v == f64::NEG_INFINITY) {
        return Ok(MvnResult {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    // +infinity limits integrate out: keep the active sub-matrix.
    let keep: Vec<usize> = (0..b.len()).filter(|&i| b[i].is_finite()).collect();
    let l = keep.len();
    if l == 0 {
        return Ok(MvnResult {
            value: 1.0,
            error_estimate: 0.0,
        });
    }
    if l > 9 {
        return Err(Error::Capacity(format!(
            "mvn_survivor supports at most 9 finite-limit dimensions, got {l}"
        )));
    }
    let mut sigma = vec![0.0; l * l];
    for (r, &i) in keep.iter().enumerate() {
        for (c, &j) in keep.iter().enumerate() {
            sigma[r * l + c] = psi.get(i, j);
        }
    }
    let bb: Vec<f64> = keep.iter().map(|&i| b[i]).collect();

    if l == 1 {
        return Ok(MvnResult {
            value: norm_cdf(bb[0] / sigma[0].sqrt()),
            error_estimate: 1e-16,
        });
    }

    let (chol, limits) = genz_reorder(&bb, &sigma)?;
    if l <= 4 {
        let nodes = match l - 1 {
            1 => 48,
            2 => 40,
            _ => 32,
        };
        let coarse = match l - 1 {
            1 => 31,
            2 => 27,
            _ => 23,
        };
        let v1 = genz_tensor(&limits, &chol, nodes);
        let v0 = genz_tensor(&limits, &chol, coarse);
        Ok(MvnResult {
            value: v1,
            error_estimate: (v1 - v0).abs().max(1e-16),
        })
    } else {
        Ok(genz_qmc(&limits, &chol, seed))
    }
}

/// Variable reordering (smallest conditional probability first) with the
/// Cholesky factorization computed along the way.
fn genz_reorder(b: &[f64], sigma: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = b.len();
    let mut c = sigma.to_vec();
    let mut b = b.to_vec();
    let mut l = vec![0.0; n * n];
    let mut y = vec![0.0; n];

    for i in 0..n {
        // Pick the remaining variable with the smallest conditional CDF value.
        let mut best = i;
        let mut best_p = f64::INFINITY;
        for j in i..n {
            let mut num = b[j];
            let mut var = c[j * n + j];
            for k in 0..i {
                num -= l[j * n + k] * y[k];
                var -= l[j * n + k] * l[j * n + k];
            }
            let p = if var > 0.0 {
                norm_cdf(num / var.sqrt())
            } else {
                norm_cdf(num.signum() * f64::INFINITY)
            };
            if p < best_p {
                best_p = p;
                best = j;
            }
        }
        if best != i {
            swap_order(&mut c, &mut b, &mut l, n, i, best);
        }

        let mut d = c[i * n + i];
        for k in 0..i {
            d -= l[i * n + k] * l[i * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Factorization { pivot: i });
        }
        let lii = d.sqrt();
        l[i * n + i] = lii;
        for r in i + 1..n {
            let mut s = c[r * n + i];
            for k in 0..i {
                s -= l[r * n + k] * l[i * n + k];
            }
            l[r * n + i] = s / lii;
        }
        // Conditional expectation given truncation to (-inf, beta].
        let mut num = b[i];
        for k in 0..i {
            num -= l[i * n + k] * y[k];
        }
        let beta = num / lii;
        let e = norm_cdf(beta);
        y[i] = if e > 1e-300 && beta > -12.0 {
            -phi(beta) / e
        } else {
            beta - 1.0 / beta.min(-1.0)
        };
    }
    Ok((l, b))
}

fn swap_order(c: &mut [f64], b: &mut [f64], l: &mut [f64], n: usize, i: usize, j: usize) {
    b.swap(i, j);
    for k in 0..n {
        c.swap(i * n + k, j * n + k);
    }
    for k in 0..n {
        c.swap(k * n + i, k * n + j);
    }
    for k in 0..n {
        l.swap(i * n + k, j * n + k);
    }
}

/// Genz integrand over the unit cube; `w` has length n-1.
fn genz_integrand(limits: &[f64], chol: &[f64], w: &[f64]) -> f64 {
    let n = limits.len();
    let mut y = [0.0f64; 9];
    let mut e = norm_cdf(limits[0] / chol[0]);
    let mut prod = e;
    for i in 1..n {
        let u = (w[i - 1] * e).clamp(1e-300, 1.0 - 1e-16);
        y[i - 1] = norm_quantile(u).clamp(-38.0, 8.5);
        let mut num = limits[i];
        for k in 0..i {
            num -= chol[i * n + k] * y[k];
        }
        e = norm_cdf(num / chol[i * n + i]);
        prod *= e;
    }
    prod
}

/// Tensorized Gauss-Legendre over [0,1]^(n-1), with each axis run through
/// the cosine map w = (1 - cos(pi u))/2 so the normal-quantile endpoint
/// behavior of the integrand stays smooth.
fn genz_tensor(limits: &[f64], chol: &[f64], nodes_per_dim: usize) -> f64 {
    let dims = limits.len() - 1;
    let rule = quad::gauss_legendre(nodes_per_dim);
    let pts: Vec<(f64, f64)> = rule
        .iter_on(0.0, 1.0)
        .map(|(u, w)| {
            let x = 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
            let jac = 0.5 * std::f64::consts::PI * (std::f64::consts::PI * u).sin();
            (x, w * jac)
        })
        .collect();
    let mut w = vec![0.0; dims];
    let mut idx = vec![0usize; dims];
    let mut sum = 0.0;
    'outer: loop {
        let mut weight = 1.0;
        for d in 0..dims {
            let (x, wt) = pts[idx[d]];
            w[d] = x;
            weight *= wt;
        }
        sum += weight * genz_integrand(limits, chol, &w);
        // Odometer increment.
        for d in 0..dims {
            idx[d] += 1;
            if idx[d] < pts.len() {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    sum
}

/// Randomized Richtmyer rule with baker's transform; 12 shifts give the
/// error estimate (3 sigma).
fn genz_qmc(limits: &[f64], chol: &[f64], seed: u64) -> MvnResult {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    const N_POINTS: usize = 4096;
    const N_SHIFTS: usize = 12;
    let dims = limits.len() - 1;
    let gen: Vec<f64> = PRIMES[..dims].iter().map(|&p| (p as f64).sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut estimates = Vec::with_capacity(N_SHIFTS);
    let mut w = vec![0.0; dims];
    for _ in 0..N_SHIFTS {
        let shift: Vec<f64> = (0..dims).map(|_| rng.gen::<f64>()).collect();
        let mut acc = 0.0;
        for k in 1..=N_POINTS {
            for d in 0..dims {
                let t = (k as f64 * gen[d] + shift[d]).fract();
                w[d] = 1.0 - (2.0 * t - 1.0).abs();
            }
            acc += genz_integrand(limits, chol, &w);
        }
        estimates.push(acc / N_POINTS as f64);
    }
    let mean = estimates.iter().sum::<f64>() / N_SHIFTS as f64;
    let var = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
        / (N_SHIFTS as f64 * (N_SHIFTS as f64 - 1.0));
    MvnResult {
        value: mean,
        error_estimate: 3.0 * var.sqrt(),
    }
}
