//! The max-stable limit distribution functions: the bivariate family F_lambda,
//! its mixtures F_nu over a measure on [0, inf], the shifted mixtures F_eta,
//! the d-variate H_Lambda built from Gaussian survivor integrals, and
//! log-mixtures H_eta thereof.

use crate::error::{Error, Result};
use crate::measures::{EtaMeasure, MixtureMeasure};
use crate::quad;
use crate::special::{self, norm_cdf, CovarianceMatrix};
use std::cell::RefCell;

/// Below this the dependence parameter routes to the complete-dependence
/// limit exp(-e^{-min}); above [`LAMBDA_LARGE`] to independence.
pub const LAMBDA_SMALL: f64 = 1e-8;
pub const LAMBDA_LARGE: f64 = 1e8;

/// The exponent-measure integrand of F_lambda at (x, y):
/// Phi(lambda + (y-x)/(2 lambda)) e^{-x} + Phi(lambda + (x-y)/(2 lambda)) e^{-y},
/// extended continuously by e^{-min(x,y)} at lambda = 0 and e^{-x} + e^{-y}
/// at lambda = infinity.
fn hr_exponent(x: f64, y: f64, lambda: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    if !(lambda > LAMBDA_SMALL) {
        return (-x.min(y)).exp();
    }
    if lambda > LAMBDA_LARGE {
        return (-x).exp() + (-y).exp();
    }
    if x == f64::INFINITY && y == f64::INFINITY {
        return 0.0;
    }
    let d = (y - x) / (2.0 * lambda);
    let t1 = if x == f64::INFINITY {
        0.0
    } else {
        norm_cdf(lambda + d) * (-x).exp()
    };
    let t2 = if y == f64::INFINITY {
        0.0
    } else {
        norm_cdf(lambda - d) * (-y).exp()
    };
    t1 + t2
}

fn check_coord(v: f64, name: &str) -> Result<()> {
    if v.is_nan() {
        return Err(Error::domain(format!("{name} must not be NaN")));
    }
    Ok(())
}

/// Bivariate Husler-Reiss distribution F_lambda(x, y), lambda in [0, inf].
pub fn hr_bivariate_cdf(x: f64, y: f64, lambda: f64) -> Result<f64> {
    check_coord(x, "x")?;
    check_coord(y, "y")?;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::domain(format!(
            "hr_bivariate_cdf: lambda must lie in [0, inf], got {lambda}"
        )));
    }
    Ok((-hr_exponent(x, y, lambda)).exp())
}

/// Mixture distribution F_nu(x, y) = exp(-int m_lambda(x,y) nu(dlambda)).
pub fn hr_mixture_cdf(x: f64, y: f64, nu: &MixtureMeasure) -> Result<f64> {
    check_coord(x, "x")?;
    check_coord(y, "y")?;
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let at_inf = (-x).exp() + (-y).exp();
    let exponent = nu.integrate(|lambda| hr_exponent(x, y, lambda), at_inf)?;
    Ok((-exponent).exp())
}

/// Closed form of F_nu for Rayleigh(sigma) mixing:
/// exp(-e^{-min(x,y)} - (1/eta) e^{-(x+y)/2} e^{-|y-x| eta / 2}),
/// eta = sqrt(1 + 1/sigma^2).
pub fn rayleigh_mixture_cdf(x: f64, y: f64, sigma: f64) -> Result<f64> {
    check_coord(x, "x")?;
    check_coord(y, "y")?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!(
            "rayleigh_mixture_cdf: sigma must be > 0, got {sigma}"
        )));
    }
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let eta = (1.0 + 1.0 / (sigma * sigma)).sqrt();
    let cross = if x == f64::INFINITY || y == f64::INFINITY {
        0.0
    } else {
        (-(x + y) / 2.0).exp() * (-(y - x).abs() * eta / 2.0).exp() / eta
    };
    Ok((-((-x.min(y)).exp()) - cross).exp())
}

/// Closed form of F_nu for Type-2 Gumbel(b) mixing:
/// exp(-e^{-x} - e^{-y} + e^{-(x+y)/2} e^{-sqrt(((y-x)/2)^2 + 2 b)}).
pub fn type2_gumbel_mixture_cdf(x: f64, y: f64, b: f64) -> Result<f64> {
    check_coord(x, "x")?;
    check_coord(y, "y")?;
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::domain(format!(
            "type2_gumbel_mixture_cdf: b must be > 0, got {b}"
        )));
    }
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let cross = if x == f64::INFINITY || y == f64::INFINITY {
        0.0
    } else {
        let half = (y - x) / 2.0;
        (-(x + y) / 2.0 - (half * half + 2.0 * b).sqrt()).exp()
    };
    Ok((-(-x).exp() - (-y).exp() + cross).exp())
}

/// General shifted mixture F_eta of Theorem de-facto form
/// -log F = sum w [Phi(lambda + delta/(2 lambda)) e^{-(x-theta)}
///               + Phi(lambda - delta/(2 lambda)) e^{-(y-gamma)}],
/// delta = (y-gamma) - (x-theta); the lambda in {0, inf} extensions apply to
/// the shifted coordinates.
pub fn general_mixture_cdf(x: f64, y: f64, eta: &EtaMeasure) -> Result<f64> {
    check_coord(x, "x")?;
    check_coord(y, "y")?;
    let mut exponent = KahanSum::new();
    for atom in eta.atoms() {
        let lambda = atom.lambda.as_f64();
        exponent.add(atom.weight * hr_exponent(x - atom.theta, y - atom.gamma, lambda));
    }
    Ok((-exponent.value()).exp())
}

/// A d x d nonnegative symmetric zero-diagonal matrix whose entrywise square
/// is strictly conditionally negative definite (the class D).
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceMatrix {
    d: usize,
    entries: Vec<f64>,
}

impl DependenceMatrix {
    pub fn new(d: usize, entries: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain("DependenceMatrix: d must be >= 2"));
        }
        if entries.len() != d * d {
            return Err(Error::dimension(format!(
                "DependenceMatrix: expected {} entries, got {}",
                d * d,
                entries.len()
            )));
        }
        validate_nonneg_symmetric_zero_diag(&entries, d)?;
        let squared: Vec<f64> = entries.iter().map(|v| v * v).collect();
        if !strictly_cnd_unchecked(&squared, d) {
            return Err(Error::NotStrictlyCnd {
                subset: (0..d).collect(),
            });
        }
        Ok(DependenceMatrix { d, entries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Entry lambda_{j,k} (0-based indices).
    pub fn lambda(&self, j: usize, k: usize) -> f64 {
        self.entries[j * self.d + k]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// The scaled matrix c * Lambda (c > 0); scaling preserves membership in D.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::domain(format!("scaled: factor must be > 0, got {c}")));
        }
        Ok(DependenceMatrix {
            d: self.d,
            entries: self.entries.iter().map(|v| v * c).collect(),
        })
    }

    /// Text format: first line d, then d rows of d entries.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.d);
        for i in 0..self.d {
            let row: Vec<String> = (0..self.d)
                .map(|j| format!("{:.17e}", self.lambda(i, j)))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (dline_no, dline) = lines.next().ok_or(Error::Parse {
            line: 0,
            column: 0,
            message: "empty matrix file".into(),
        })?;
        let d: usize = dline.parse().map_err(|_| Error::Parse {
            line: dline_no,
            column: 1,
            message: format!("expected the dimension, got '{dline}'"),
        })?;
        let mut entries = Vec::with_capacity(d * d);
        for _ in 0..d {
            let (line_no, line) = lines.next().ok_or(Error::Parse {
                line: dline_no,
                column: 0,
                message: format!("expected {d} matrix rows"),
            })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != d {
                return Err(Error::Parse {
                    line: line_no,
                    column: fields.len(),
                    message: format!("expected {d} entries, got {}", fields.len()),
                });
            }
            for (col, f) in fields.iter().enumerate() {
                entries.push(f.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    column: col + 1,
                    message: e.to_string(),
                })?);
            }
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(Error::Parse {
                line: line_no,
                column: 0,
                message: "trailing content after matrix rows".into(),
            });
        }
        DependenceMatrix::new(d, entries).map_err(|e| match e {
            Error::Parse { .. } => e,
            other => Error::Parse {
                line: dline_no,
                column: 0,
                message: other.to_string(),
            },
        })
    }
}

fn validate_nonneg_symmetric_zero_diag(a: &[f64], d: usize) -> Result<()> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..d {
        if a[i * d + i] != 0.0 {
            return Err(Error::domain(format!(
                "matrix must have a zero diagonal, entry ({i},{i}) = {}",
                a[i * d + i]
            )));
        }
        for j in 0..d {
            let v = a[i * d + j];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!(
                    "matrix entries must be finite and >= 0, entry ({i},{j}) = {v}"
                )));
            }
            if (v - a[j * d + i]).abs() > 1e-12 * scale.max(1e-300) {
                return Err(Error::domain(format!("matrix asymmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Strict conditional negative definiteness of a nonnegative symmetric
/// zero-diagonal matrix A: x^T A x < 0 for all x != 0 with sum x_i = 0.
///
/// Checked through the Schoenberg-type reduction: A is strictly CND iff
/// B with b_{jk} = a_{jd} + a_{kd} - a_{jk} (j,k < d) is positive definite;
/// the Cholesky pivot floor is 1e-10 relative to the largest diagonal of B.
pub fn is_strictly_cnd(a: &[f64], d: usize) -> Result<bool> {
    if d < 2 {
        return Err(Error::domain("is_strictly_cnd: d must be >= 2"));
    }
    if a.len() != d * d {
        return Err(Error::dimension(format!(
            "is_strictly_cnd: expected {} entries, got {}",
            d * d,
            a.len()
        )));
    }
    validate_nonneg_symmetric_zero_diag(a, d)?;
    Ok(strictly_cnd_unchecked(a, d))
}

fn strictly_cnd_unchecked(a: &[f64], d: usize) -> bool {
    let n = d - 1;
    let mut b = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            b[j * n + k] = a[j * d + (d - 1)] + a[k * d + (d - 1)] - a[j * d + k];
        }
    }
    special::cholesky_flat(n, &b, 1e-10).is_ok()
}

/// The transformed covariance matrix Gamma_{l,m}(Lambda) with entries
/// 2 (lambda_{m_j, m_l}^2 + lambda_{m_k, m_l}^2 - lambda_{m_j, m_k}^2) for
/// j, k < l-1, positive definite whenever Lambda lies in D.
pub fn gamma_transform(lambda: &DependenceMatrix, m: &[usize]) -> Result<CovarianceMatrix> {
    let l = m.len();
    if l < 2 {
        return Err(Error::domain("gamma_transform: index tuple needs length >= 2"));
    }
    for w in m.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::domain("gamma_transform: indices must be strictly increasing"));
        }
    }
    if *m.last().unwrap() >= lambda.dim() {
        return Err(Error::domain(format!(
            "gamma_transform: index {} out of range for d = {}",
            m.last().unwrap(),
            lambda.dim()
        )));
    }
    let last = m[l - 1];
    let sq = |j: usize, k: usize| {
        let v = lambda.lambda(j, k);
        v * v
    };
    let n = l - 1;
    let mut g = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            g[j * n + k] = 2.0 * (sq(m[j], last) + sq(m[k], last) - sq(m[j], m[k]));
        }
    }
    CovarianceMatrix::new(n, g).map_err(|_| Error::NotStrictlyCnd { subset: m.to_vec() })
}

/// The function h_{l,m,Lambda}: e^{-y} for l = 1, and for l >= 2 the
/// semi-infinite integral
/// int_{y_l}^inf S((y_i - z + 2 lambda_{m_i,m_l}^2)_{i<l} | Gamma_{l,m}) e^{-z} dz,
/// computed after the substitution z = y_l - log(1 - v) on v in [0, 1).
pub fn h_lm(y: &[f64], m: &[usize], lambda: &DependenceMatrix) -> Result<f64> {
    if y.len() != m.len() || m.is_empty() {
        return Err(Error::dimension(format!(
            "h_lm: {} coordinates for an index tuple of length {}",
            y.len(),
            m.len()
        )));
    }
    for &v in y {
        check_coord(v, "h_lm coordinate")?;
    }
    let l = m.len();
    if l == 1 {
        if m[0] >= lambda.dim() {
            return Err(Error::domain("h_lm: index out of range"));
        }
        return Ok((-y[0]).exp());
    }
    if y.iter().any(|&v| v == f64::INFINITY) {
        return Ok(0.0);
    }
    let gamma = gamma_transform(lambda, m)?;
    let last = m[l - 1];
    let y_last = y[l - 1];
    let base: Vec<f64> = (0..l - 1)
        .map(|i| {
            let lam = lambda.lambda(m[i], last);
            y[i] - y_last + 2.0 * lam * lam
        })
        .collect();

    let stash: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |v: f64| -> Result<f64> {
        let t = -(1.0 - v).ln();
        let args: Vec<f64> = base.iter().map(|&b| b - t).collect();
        match special::mvn_survivor(&args, &gamma) {
            Ok(s) => Ok(s),
            Err(e) => {
                *stash.borrow_mut() = Some(e);
                Ok(f64::NAN)
            }
        }
    };
    let (abs_tol, rel_tol) = if l == 2 { (1e-14, 1e-12) } else { (1e-10, 1e-7) };
    let q = quad::adaptive(integrand, 0.0, 1.0, abs_tol, rel_tol, 400);
    match q {
        Ok(q) => Ok((-y_last).exp() * q.value),
        Err(e) => Err(stash.into_inner().unwrap_or(e)),
    }
}

/// log H_Lambda(x) = sum_{l=1}^{d} (-1)^l sum_m h_{l,m,Lambda}(x_{m_1..m_l});
/// terms are accumulated in subset order with compensated summation.
pub fn husler_reiss_log_cdf(x: &[f64], lambda: &DependenceMatrix) -> Result<f64> {
    let d = lambda.dim();
    if x.len() != d {
        return Err(Error::dimension(format!(
            "husler_reiss_cdf: {} coordinates for d = {d}",
            x.len()
        )));
    }
    if d > 10 {
        return Err(Error::Capacity(format!(
            "husler_reiss_cdf supports d <= 10 (2^d - 1 terms), got d = {d}"
        )));
    }
    let subsets = all_subsets(d);
    let compute = |m: &Vec<usize>| -> Result<f64> {
        let y: Vec<f64> = m.iter().map(|&i| x[i]).collect();
        let sign = if m.len() % 2 == 1 { -1.0 } else { 1.0 };
        Ok(sign * h_lm(&y, m, lambda)?)
    };
    let terms: Vec<f64> = if d >= 6 {
        use rayon::prelude::*;
        subsets
            .par_iter()
            .map(compute)
            .collect::<Result<Vec<f64>>>()?
    } else {
        subsets.iter().map(compute).collect::<Result<Vec<f64>>>()?
    };
    let mut sum = KahanSum::new();
    for t in terms {
        sum.add(t);
    }
    Ok(sum.value())
}

/// The d-variate Husler-Reiss distribution H_Lambda(x).
pub fn husler_reiss_cdf(x: &[f64], lambda: &DependenceMatrix) -> Result<f64> {
    Ok(husler_reiss_log_cdf(x, lambda)?.exp())
}

/// H_eta(x) = exp( sum w log H_Lambda(x) ) over finitely many matrix atoms.
pub fn h_eta_cdf(x: &[f64], atoms: &[(DependenceMatrix, f64)]) -> Result<f64> {
    if atoms.is_empty() {
        return Err(Error::domain("h_eta_cdf: empty atom list"));
    }
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "h_eta_cdf: weights sum to {total}, expected 1"
        )));
    }
    for (mat, w) in atoms {
        if !(*w >= 0.0) {
            return Err(Error::domain(format!("h_eta_cdf: invalid weight {w}")));
        }
        if mat.dim() != x.len() {
            return Err(Error::dimension(
                "h_eta_cdf: matrix dimension differs from coordinate count".to_string(),
            ));
        }
    }
    let mut sum = KahanSum::new();
    for (mat, w) in atoms {
        sum.add(w / total * husler_reiss_log_cdf(x, mat)?);
    }
    Ok(sum.value().exp())
}

/// All nonempty subsets of {0..d-1} ordered by size then lexicographically.
fn all_subsets(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity((1usize << d) - 1);
    for l in 1..=d {
        let mut idx: Vec<usize> = (0..l).collect();
        'comb: loop {
            out.push(idx.clone());
            let mut i = l;
            loop {
                if i == 0 {
                    break 'comb;
                }
                i -= 1;
                if idx[i] < d - l + i {
                    idx[i] += 1;
                    for j in i + 1..l {
                        idx[j] = idx[j - 1] + 1;
                    }
                    continue 'comb;
                }
            }
        }
    }
    out
}

/// Compensated (Kahan) accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum { sum: 0.0, c: 0.0 }
    }

    pub fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Atom, Location};

    fn line_matrix(points: &[f64], alpha: f64) -> DependenceMatrix {
        let d = points.len();
        let mut e = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                e[i * d + j] = (points[i] - points[j]).abs().powf(alpha).sqrt();
            }
        }
        DependenceMatrix::new(d, e).unwrap()
    }

    #[test]
    fn hr_bivariate_limits_and_value() {
        // complete dependence: exp(-e^{-min(0,1)}) = exp(-1)
        let v = hr_bivariate_cdf(0.0, 1.0, 0.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        // independence: exp(-2)
        let v = hr_bivariate_cdf(0.0, 0.0, f64::INFINITY).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        // lambda = 1: exp(-2 Phi(1))
        let v = hr_bivariate_cdf(0.0, 0.0, 1.0).unwrap();
        let expect = (-2.0 * norm_cdf(1.0)).exp();
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.18590).abs() < 1e-4);
        assert!(hr_bivariate_cdf(0.0, 0.0, -1.0).is_err());
        assert!(hr_bivariate_cdf(0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn hr_margins_are_standard_gumbel() {
        for &lambda in &[0.0, 0.3, 1.0, 5.0, f64::INFINITY] {
            for &x in &[-2.0, 0.0, 1.5] {
                let v = hr_bivariate_cdf(x, f64::INFINITY, lambda).unwrap();
                let gumbel = (-(-x).exp()).exp();
                assert!((v - gumbel).abs() < 1e-14, "lambda={lambda}, x={x}");
            }
        }
    }

    #[test]
    fn mixture_point_mass_reduction() {
        for &lambda in &[0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
            let loc = if lambda.is_infinite() {
                Location::Infinite
            } else {
                Location::Finite(lambda)
            };
            let nu = MixtureMeasure::dirac(loc);
            let a = hr_mixture_cdf(0.3, -0.2, &nu).unwrap();
            let b = hr_bivariate_cdf(0.3, -0.2, lambda).unwrap();
            assert!((a - b).abs() < 1e-15, "lambda={lambda}");
        }
    }

    #[test]
    fn rayleigh_closed_form_values() {
        // sigma = 1: exp(-1 - 1/sqrt(2)) at the origin
        let v = rayleigh_mixture_cdf(0.0, 0.0, 1.0).unwrap();
        let expect = (-1.0 - 1.0 / 2.0f64.sqrt()).exp();
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.18135).abs() < 1e-4);
        // sigma -> 0 approaches complete dependence
        let v = rayleigh_mixture_cdf(0.0, 1.0, 1e-6).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-3);
        assert!(rayleigh_mixture_cdf(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn rayleigh_closed_form_vs_quadrature() {
        let nu = MixtureMeasure::rayleigh(2.0).unwrap();
        let a = rayleigh_mixture_cdf(0.7, -0.4, 2.0).unwrap();
        let b = hr_mixture_cdf(0.7, -0.4, &nu).unwrap();
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }

    #[test]
    fn type2_closed_form_values() {
        let v = type2_gumbel_mixture_cdf(0.0, 0.0, 1.0).unwrap();
        let expect = (-2.0 + (-(2.0f64.sqrt())).exp()).exp();
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.17256).abs() < 1e-4);
        // b -> infinity approaches independence
        let v = type2_gumbel_mixture_cdf(0.0, 0.0, 1e4).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-3);
        assert!(type2_gumbel_mixture_cdf(0.0, 0.0, 0.0).is_err());

        let nu = MixtureMeasure::type2_gumbel(0.7).unwrap();
        let a = type2_gumbel_mixture_cdf(0.5, -1.0, 0.7).unwrap();
        let b = hr_mixture_cdf(0.5, -1.0, &nu).unwrap();
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }

    #[test]
    fn two_atom_mixture_arithmetic() {
        let nu = MixtureMeasure::from_atoms(vec![
            Atom {
                location: Location::Finite(0.0),
                weight: 0.5,
            },
            Atom {
                location: Location::Infinite,
                weight: 0.5,
            },
        ])
        .unwrap();
        let v = hr_mixture_cdf(0.0, 1.0, &nu).unwrap();
        let expect = (-1.0 - 0.5 * (-1.0f64).exp()).exp();
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn general_mixture_reductions() {
        use crate::measures::{EtaAtom, EtaMeasure};
        // theta = gamma = 0 reduces to F_lambda
        let eta = EtaMeasure::new(vec![EtaAtom {
            lambda: Location::Finite(1.0),
            theta: 0.0,
            gamma: 0.0,
            weight: 1.0,
        }])
        .unwrap();
        let a = general_mixture_cdf(0.0, 0.0, &eta).unwrap();
        let b = hr_bivariate_cdf(0.0, 0.0, 1.0).unwrap();
        assert!((a - b).abs() < 1e-15);

        // margin shift: -log F(x, inf) = e^{-x} sum w e^theta
        let eta = EtaMeasure::new(vec![EtaAtom {
            lambda: Location::Finite(1.0),
            theta: 2.0f64.ln(),
            gamma: 0.0,
            weight: 1.0,
        }])
        .unwrap();
        let v = general_mixture_cdf(0.0, f64::INFINITY, &eta).unwrap();
        assert!((-(v.ln()) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn general_mixture_two_atom_hand_sum() {
        use crate::measures::{EtaAtom, EtaMeasure};
        let atoms = [
            (0.5f64, 0.1f64, -0.2f64, 0.5f64),
            (2.0, 0.0, 0.3, 0.5),
        ];
        let eta = EtaMeasure::new(
            atoms
                .iter()
                .map(|&(l, t, g, w)| EtaAtom {
                    lambda: Location::Finite(l),
                    theta: t,
                    gamma: g,
                    weight: w,
                })
                .collect(),
        )
        .unwrap();
        let v = general_mixture_cdf(0.0, 0.0, &eta).unwrap();
        // independent two-term summation of the closed form
        let (x, y) = (0.0, 0.0);
        let mut s = 0.0;
        for &(l, t, g, w) in &atoms {
            let delta = (y - g) - (x - t);
            s += w
                * (norm_cdf(l + delta / (2.0 * l)) * (-(x - t)).exp()
                    + norm_cdf(l - delta / (2.0 * l)) * (-(y - g)).exp());
        }
        assert!((v - (-s).exp()).abs() < 1e-12);
    }

    #[test]
    fn max_stability_identity() {
        let nu = MixtureMeasure::rayleigh(1.0).unwrap();
        for &n in &[2u32, 10] {
            let shift = (n as f64).ln();
            for &(x, y) in &[(-1.0, 0.5), (0.0, 0.0), (2.0, -2.0)] {
                let a = hr_mixture_cdf(x + shift, y + shift, &nu)
                    .unwrap()
                    .powi(n as i32);
                let b = hr_mixture_cdf(x, y, &nu).unwrap();
                assert!((a - b).abs() < 1e-9, "n={n}, x={x}, y={y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn frechet_bounds_and_diagonal_monotonicity() {
        let grid = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let nu = MixtureMeasure::rayleigh(1.0).unwrap();
        for &x in &grid {
            for &y in &grid {
                let f = hr_mixture_cdf(x, y, &nu).unwrap();
                let lower = (-(-x).exp() - (-y).exp()).exp();
                let upper = (-(-x.min(y)).exp()).exp();
                assert!(f >= lower - 1e-12 && f <= upper + 1e-12);
            }
        }
        // -log F_{dirac(lambda)}(0,0) = 2 Phi(lambda), nondecreasing in lambda
        let mut prev = 0.0;
        for &l in &[0.0, 0.3, 0.8, 1.5, 4.0, 1e9] {
            let v = -hr_bivariate_cdf(0.0, 0.0, l).unwrap().ln();
            assert!(v >= prev - 1e-13);
            assert!((v - 2.0 * norm_cdf(l.min(1e9))).abs() < 1e-12);
            prev = v;
        }
    }

    #[test]
    fn dependence_matrix_validation() {
        // valid: sqrt of distances on a line
        let m = line_matrix(&[0.0, 1.0, 2.0], 1.0);
        assert_eq!(m.dim(), 3);
        // nonzero diagonal rejected
        assert!(DependenceMatrix::new(2, vec![0.1, 1.0, 1.0, 0.0]).is_err());
        // complete dependence (zero matrix) is not strictly CND
        let err = DependenceMatrix::new(3, vec![0.0; 9]).unwrap_err();
        assert!(matches!(err, Error::NotStrictlyCnd { .. }));
    }

    #[test]
    fn strictly_cnd_examples() {
        // zero matrix: not strict
        assert!(!is_strictly_cnd(&[0.0; 9], 3).unwrap());
        // a_{ij} = |t_i - t_j| on {0, 1, 3}: strictly CND
        let t = [0.0f64, 1.0, 3.0];
        let mut a = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                a[i * 3 + j] = (t[i] - t[j]).abs();
            }
        }
        assert!(is_strictly_cnd(&a, 3).unwrap());
        // squared distances of collinear equally spaced points: degenerate
        let t = [0.0, 1.0, 2.0];
        for i in 0..3 {
            for j in 0..3 {
                a[i * 3 + j] = (t[i] - t[j]) * (t[i] - t[j]);
            }
        }
        assert!(!is_strictly_cnd(&a, 3).unwrap());
        // asymmetric input rejected
        assert!(is_strictly_cnd(&[0.0, 1.0, 2.0, 0.0], 2).is_err());
    }

    #[test]
    fn gamma_transform_collapse_and_pd() {
        // l = 2 collapses to [4 lambda^2]
        let m = line_matrix(&[0.0, 1.0], 1.0);
        let g = gamma_transform(&m, &[0, 1]).unwrap();
        assert_eq!(g.dim(), 1);
        assert!((g.get(0, 0) - 4.0 * m.lambda(0, 1).powi(2)).abs() < 1e-14);

        // d = 3 line {0,1,2}, gamma(h)=|h|: full matrix [[8,4],[4,4]]
        let m = line_matrix(&[0.0, 1.0, 2.0], 1.0);
        let g = gamma_transform(&m, &[0, 1, 2]).unwrap();
        assert_eq!(g.dim(), 2);
        assert!((g.get(0, 0) - 8.0).abs() < 1e-12);
        assert!((g.get(0, 1) - 4.0).abs() < 1e-12);
        assert!((g.get(1, 1) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn h_lm_basics() {
        let m = line_matrix(&[0.0, 1.0], 1.0);
        // l = 1
        assert!((h_lm(&[0.0], &[0], &m).unwrap() - 1.0).abs() < 1e-15);
        // l = 2 consistency with Eq.-(1.2)-style closed form via inclusion-exclusion
        let lam = m.lambda(0, 1);
        let (y1, y2) = (0.0, 0.5);
        let h2 = h_lm(&[y1, y2], &[0, 1], &m).unwrap();
        let neg_log_f = -hr_bivariate_cdf(y1, y2, lam).unwrap().ln();
        let expect = (-y1).exp() + (-y2).exp() - neg_log_f;
        assert!((h2 - expect).abs() < 1e-6, "{h2} vs {expect}");
        // near-independence kills the joint tail
        let m8 = DependenceMatrix::new(2, vec![0.0, 8.0, 8.0, 0.0]).unwrap();
        assert!(h_lm(&[0.0, 0.0], &[0, 1], &m8).unwrap() <= 1e-6);
        // +infinity coordinate
        assert_eq!(h_lm(&[0.0, f64::INFINITY], &[0, 1], &m).unwrap(), 0.0);
    }

    #[test]
    fn husler_reiss_d2_matches_bivariate() {
        let lam = 0.8;
        let m = DependenceMatrix::new(2, vec![0.0, lam, lam, 0.0]).unwrap();
        let a = husler_reiss_cdf(&[0.0, 0.5], &m).unwrap();
        let b = hr_bivariate_cdf(0.0, 0.5, lam).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn husler_reiss_d3_independence_and_margins() {
        let mut e = vec![8.0; 9];
        for i in 0..3 {
            e[i * 3 + i] = 0.0;
        }
        let m = DependenceMatrix::new(3, e).unwrap();
        let v = husler_reiss_cdf(&[0.0, 0.0, 0.0], &m).unwrap();
        assert!((v - (-3.0f64).exp()).abs() < 1e-4, "{v}");

        let m = line_matrix(&[0.0, 1.0, 2.0], 1.0);
        let v = husler_reiss_cdf(&[0.0, f64::INFINITY, f64::INFINITY], &m).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-5, "{v}");
    }

    #[test]
    fn husler_reiss_capacity() {
        let m = line_matrix(&[0.0, 1.0], 1.0);
        assert!(husler_reiss_cdf(&[0.0], &m).is_err());
    }

    #[test]
    fn h_eta_consistency() {
        let mk = |l: f64| DependenceMatrix::new(2, vec![0.0, l, l, 0.0]).unwrap();
        // single atom
        let a = h_eta_cdf(&[0.0, 0.4], &[(mk(0.7), 1.0)]).unwrap();
        let b = husler_reiss_cdf(&[0.0, 0.4], &mk(0.7)).unwrap();
        assert!((a - b).abs() < 1e-14);
        // two equal atoms idempotent
        let a = h_eta_cdf(&[0.0, 0.4], &[(mk(0.7), 0.5), (mk(0.7), 0.5)]).unwrap();
        assert!((a - b).abs() < 1e-14);
        // cross-module: atoms {0.5, 2} vs hr_mixture_cdf
        let nu = MixtureMeasure::from_atoms(vec![
            Atom {
                location: Location::Finite(0.5),
                weight: 0.5,
            },
            Atom {
                location: Location::Finite(2.0),
                weight: 0.5,
            },
        ])
        .unwrap();
        let a = h_eta_cdf(&[0.2, -0.3], &[(mk(0.5), 0.5), (mk(2.0), 0.5)]).unwrap();
        let b = hr_mixture_cdf(0.2, -0.3, &nu).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn matrix_text_round_trip() {
        let m = line_matrix(&[0.0, 1.0, 2.5], 1.0);
        let t = m.to_text();
        let back = DependenceMatrix::from_text(&t).unwrap();
        assert_eq!(m, back);
        let err = DependenceMatrix::from_text("2\n0 1\n1").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = DependenceMatrix::from_text("2\n0 1 2\n1 0 3").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 3, .. }));
    }

    #[test]
    fn subset_enumeration() {
        let s = all_subsets(3);
        assert_eq!(s.len(), 7);
        assert_eq!(s[0], vec![0]);
        assert_eq!(s[3], vec![0, 1]);
        assert_eq!(s[6], vec![0, 1, 2]);
        assert_eq!(all_subsets(10).len(), 1023);
    }
}
