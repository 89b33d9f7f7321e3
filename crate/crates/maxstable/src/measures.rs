//! Probability measures on the compactified half-line [0, inf] (the mixing
//! measures of the bivariate limit laws) and atomic measures on
//! [0, inf] x R^2.
//!
//! The point at infinity is a dedicated marker, never a large float; every
//! integrand must supply its limit value at infinity explicitly.

use crate::error::{Error, Result};
use crate::quad;
use rand::Rng;
use std::fmt;

/// A point of the compactified half-line [0, inf].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Finite(f64),
    Infinite,
}

impl Location {
    pub fn new(v: f64) -> Result<Self> {
        if v.is_nan() || v < 0.0 {
            return Err(Error::domain(format!(
                "Location: expected a value in [0, inf], got {v}"
            )));
        }
        if v == f64::INFINITY {
            Ok(Location::Infinite)
        } else {
            Ok(Location::Finite(v))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Location::Infinite)
    }

    /// Finite value, or f64::INFINITY for the marker.
    pub fn as_f64(&self) -> f64 {
        match self {
            Location::Finite(v) => *v,
            Location::Infinite => f64::INFINITY,
        }
    }
}

/// A weighted atom of a [`MixtureMeasure`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: Location,
    pub weight: f64,
}

/// Parametric density families on [0, inf).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityFamily {
    /// f(x) = (x/sigma^2) exp(-x^2 / (2 sigma^2))
    Rayleigh { sigma: f64 },
    /// f(x) = 2 b x^{-3} exp(-b / x^2)
    Type2Gumbel { b: f64 },
}

impl DensityFamily {
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            DensityFamily::Rayleigh { sigma } => {
                x / (sigma * sigma) * (-x * x / (2.0 * sigma * sigma)).exp()
            }
            DensityFamily::Type2Gumbel { b } => 2.0 * b * x.powi(-3) * (-b / (x * x)).exp(),
        }
    }

    /// Quantile of the tail-probability variable: location at CDF value u.
    ///
    /// Rayleigh uses lambda = sigma sqrt(-2 ln(1-u)); the implementation maps
    /// the uniform variable so that u -> 0 is the upper tail for Rayleigh and
    /// the lower tail for Type-2 Gumbel, matching the tailored substitutions.
    fn from_uniform(&self, u: f64) -> f64 {
        match *self {
            // lambda = sigma sqrt(-2 ln u): u ~ U(0,1) gives Rayleigh(sigma).
            DensityFamily::Rayleigh { sigma } => sigma * (-2.0 * u.ln()).sqrt(),
            // lambda = sqrt(b / (-ln u)): u ~ U(0,1) gives Type-2 Gumbel(b).
            DensityFamily::Type2Gumbel { b } => (b / (-u.ln())).sqrt(),
        }
    }
}

/// Substitution used for the continuous part of the quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// lambda = t / (1 - t) on (0, 1), generic.
    Rational,
    /// The family's own probability transform (uniform weight on (0, 1)).
    Tailored,
}

/// Quadrature rule spec for the continuous part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Interval budget of the adaptive integrator and default discretize size.
    pub nodes: usize,
    pub transform: Transform,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes: 200,
            transform: Transform::Tailored,
        }
    }
}

/// A probability measure on [0, inf]: atoms (possibly at 0 and at infinity)
/// plus an optional parametric density component.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureMeasure {
    atoms: Vec<Atom>,
    density: Option<(DensityFamily, f64)>,
    quadrature: QuadratureSpec,
}

impl MixtureMeasure {
    /// Rayleigh(sigma) mixing measure, Eq.-(2.4)-style density.
    pub fn rayleigh(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("rayleigh: sigma must be > 0, got {sigma}")));
        }
        Ok(MixtureMeasure {
            atoms: Vec::new(),
            density: Some((DensityFamily::Rayleigh { sigma }, 1.0)),
            quadrature: QuadratureSpec::default(),
        })
    }

    /// Type-2 Gumbel(b) mixing measure.
    pub fn type2_gumbel(b: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::domain(format!("type2_gumbel: b must be > 0, got {b}")));
        }
        Ok(MixtureMeasure {
            atoms: Vec::new(),
            density: Some((DensityFamily::Type2Gumbel { b }, 1.0)),
            quadrature: QuadratureSpec::default(),
        })
    }

    /// Point mass at `location` (the infinity marker is allowed).
    pub fn dirac(location: Location) -> Self {
        MixtureMeasure {
            atoms: vec![Atom {
                location,
                weight: 1.0,
            }],
            density: None,
            quadrature: QuadratureSpec::default(),
        }
    }

    /// Empirical measure: weight 1/n per sample, equal samples merged.
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("empirical: needs at least one sample"));
        }
        let n = samples.len() as f64;
        let mut sorted: Vec<f64> = Vec::with_capacity(samples.len());
        for &s in samples {
            if s.is_nan() || s < 0.0 {
                return Err(Error::domain(format!("empirical: invalid sample {s}")));
            }
            sorted.push(s);
        }
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut atoms: Vec<Atom> = Vec::new();
        for &s in &sorted {
            let loc = Location::new(s)?;
            match atoms.last_mut() {
                Some(last) if last.location == loc => last.weight += 1.0 / n,
                _ => atoms.push(Atom {
                    location: loc,
                    weight: 1.0 / n,
                }),
            }
        }
        MixtureMeasure::from_atoms(atoms)
    }

    /// Purely atomic measure from explicit atoms (weights must sum to 1
    /// within 1e-9; they are rescaled to unit mass exactly).
    pub fn from_atoms(mut atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::domain("from_atoms: empty atom list"));
        }
        let mut total = 0.0;
        for a in &atoms {
            if !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(Error::domain(format!("from_atoms: invalid weight {}", a.weight)));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "from_atoms: weights sum to {total}, expected 1"
            )));
        }
        for a in &mut atoms {
            a.weight /= total;
        }
        // Locations must be pairwise distinct.
        let mut sorted = atoms.clone();
        sorted.sort_by(|x, y| x.location.as_f64().partial_cmp(&y.location.as_f64()).unwrap());
        for w in sorted.windows(2) {
            if w[0].location == w[1].location {
                return Err(Error::domain(format!(
                    "from_atoms: duplicate atom location {:?}",
                    w[0].location
                )));
            }
        }
        Ok(MixtureMeasure {
            atoms,
            density: None,
            quadrature: QuadratureSpec::default(),
        })
    }

    /// Override the quadrature spec.
    pub fn with_quadrature(mut self, quadrature: QuadratureSpec) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<(DensityFamily, f64)> {
        self.density
    }

    pub fn is_atomic(&self) -> bool {
        self.density.is_none()
    }

    /// Mass of the atom at the infinity marker.
    pub fn mass_at_infinity(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.location.is_infinite())
            .map(|a| a.weight)
            .sum()
    }

    /// Mass of the atom at zero.
    pub fn mass_at_zero(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.location == Location::Finite(0.0))
            .map(|a| a.weight)
            .sum()
    }

    /// Integrate `f` against the measure. `f_at_infinity` is the (finite)
    /// limit of `f` at the infinity marker, supplied explicitly.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, f_at_infinity: f64) -> Result<f64> {
        let mut total = 0.0;
        for a in &self.atoms {
            let v = match a.location {
                Location::Finite(x) => f(x),
                Location::Infinite => f_at_infinity,
            };
            if v.is_nan() {
                return Err(Error::NonFiniteIntegrand {
                    location: a.location.as_f64(),
                });
            }
            total += a.weight * v;
        }
        if let Some((family, weight)) = self.density {
            let budget = self.quadrature.nodes.max(64) * 8;
            // Keep transformed nodes strictly inside (0, 1): deep adaptive
            // refinement of boundary layers would otherwise round a node onto
            // an endpoint, where the substitution degenerates.
            let interior = |u: f64| u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            let q = match self.quadrature.transform {
                Transform::Tailored => quad::adaptive(
                    |u| {
                        let x = family.from_uniform(interior(u));
                        Ok(f(x))
                    },
                    0.0,
                    1.0,
                    1e-14,
                    1e-12,
                    budget,
                )?,
                Transform::Rational => quad::adaptive(
                    |t| {
                        let t = interior(t);
                        let x = t / (1.0 - t);
                        let jac = 1.0 / ((1.0 - t) * (1.0 - t));
                        Ok(f(x) * family.pdf(x) * jac)
                    },
                    0.0,
                    1.0,
                    1e-14,
                    1e-12,
                    budget,
                )?,
            };
            total += weight * q.value;
        }
        Ok(total)
    }

    /// Replace the continuous part by `n_nodes` quadrature atoms.
    ///
    /// Idempotent on purely atomic measures. Nodes come from a composite
    /// Gauss-Legendre scheme in the tailored uniform variable, dyadically
    /// graded toward u = 0 and reparameterized by u = 1 - s^2 on the upper
    /// half so both endpoint boundary layers are resolved.
    pub fn discretize(&self, n_nodes: usize) -> Result<MixtureMeasure> {
        if n_nodes == 0 {
            return Err(Error::domain("discretize: n_nodes must be >= 1"));
        }
        let (family, cont_weight) = match self.density {
            None => return Ok(self.clone()),
            Some(d) => d,
        };

        let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(n_nodes + 8);
        if n_nodes < 32 {
            let rule = quad::gauss_legendre(n_nodes);
            nodes.extend(rule.iter_on(0.0, 1.0));
        } else {
            let levels = (n_nodes / 8).clamp(8, 24);
            let per_panel = 6usize;
            // Dyadic panels [0, 2^-L], [2^-L, 2^-(L-1)], ..., [1/4, 1/2].
            let mut lo = 0.0;
            let mut hi = 0.5f64.powi(levels as i32);
            let rule = quad::gauss_legendre(per_panel);
            for _ in 0..levels {
                nodes.extend(rule.iter_on(lo, hi));
                lo = hi;
                hi *= 2.0;
            }
            // Upper half via u = 1 - s^2, du = 2 s ds, s in (0, 1/sqrt(2)).
            let n_up = n_nodes.saturating_sub(per_panel * levels).max(8);
            let upper = quad::gauss_legendre(n_up);
            let s_max = std::f64::consts::FRAC_1_SQRT_2;
            nodes.extend(
                upper
                    .iter_on(0.0, s_max)
                    .map(|(s, w)| (1.0 - s * s, w * 2.0 * s)),
            );
        }

        let mut atoms = self.atoms.clone();
        let mut new_atoms: Vec<Atom> = nodes
            .iter()
            .map(|&(u, w)| Atom {
                location: Location::Finite(family.from_uniform(u)),
                weight: w * cont_weight,
            })
            .collect();
        // Exact unit mass.
        let total: f64 =
            atoms.iter().map(|a| a.weight).sum::<f64>() + new_atoms.iter().map(|a| a.weight).sum::<f64>();
        atoms.append(&mut new_atoms);
        for a in &mut atoms {
            a.weight /= total;
        }
        let mut out = MixtureMeasure {
            atoms,
            density: None,
            quadrature: self.quadrature,
        };
        out.quadrature.transform = Transform::Tailored;
        Ok(out)
    }

    /// Draw one location (atoms by weight, continuous part by inverse CDF).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Location {
        let mut u: f64 = rng.gen();
        for a in &self.atoms {
            if u < a.weight {
                return a.location;
            }
            u -= a.weight;
        }
        if let Some((family, _)) = self.density {
            let mut v: f64 = rng.gen();
            while v <= 0.0 {
                v = rng.gen();
            }
            return Location::Finite(family.from_uniform(v));
        }
        // Rounding fell past the last atom.
        self.atoms
            .last()
            .map(|a| a.location)
            .unwrap_or(Location::Finite(0.0))
    }

    /// Serialize to the measure text format (see README). Purely parametric
    /// measures emit a header line, purely atomic ones emit atom lines.
    pub fn to_text(&self) -> Result<String> {
        match (&self.density, self.atoms.is_empty()) {
            (Some((family, w)), true) if *w == 1.0 => Ok(match family {
                DensityFamily::Rayleigh { sigma } => format!("rayleigh {sigma:.17e}\n"),
                DensityFamily::Type2Gumbel { b } => format!("type2gumbel {b:.17e}\n"),
            }),
            (None, false) => {
                let mut out = String::new();
                for a in &self.atoms {
                    match a.location {
                        Location::Finite(x) => {
                            out.push_str(&format!("{:.17e} {:.17e}\n", x, a.weight))
                        }
                        Location::Infinite => out.push_str(&format!("inf {:.17e}\n", a.weight)),
                    }
                }
                Ok(out)
            }
            _ => Err(Error::domain(
                "to_text: mixed atom/density measures have no text form",
            )),
        }
    }

    /// Parse the measure text format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut data_lines: Vec<(usize, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                data_lines.push((i + 1, line));
            }
        }
        if data_lines.is_empty() {
            return Err(Error::Parse {
                line: 0,
                column: 0,
                message: "empty measure file".into(),
            });
        }
        let (first_no, first) = data_lines[0];
        let head = first.split_whitespace().next().unwrap();
        if head.chars().next().unwrap().is_alphabetic() && head != "inf" {
            if data_lines.len() > 1 {
                return Err(Error::Parse {
                    line: data_lines[1].0,
                    column: 0,
                    message: "parametric header must be the only line".into(),
                });
            }
            let fields: Vec<&str> = first.split_whitespace().collect();
            let param = |idx: usize| -> Result<f64> {
                fields
                    .get(idx)
                    .ok_or_else(|| Error::Parse {
                        line: first_no,
                        column: idx + 1,
                        message: "missing parameter".into(),
                    })?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse {
                        line: first_no,
                        column: idx + 1,
                        message: e.to_string(),
                    })
            };
            return match fields[0] {
                "rayleigh" => MixtureMeasure::rayleigh(param(1)?),
                "type2gumbel" => MixtureMeasure::type2_gumbel(param(1)?),
                "dirac" => {
                    let loc = if fields.get(1) == Some(&"inf") {
                        Location::Infinite
                    } else {
                        Location::new(param(1)?)?
                    };
                    Ok(MixtureMeasure::dirac(loc))
                }
                other => Err(Error::Parse {
                    line: first_no,
                    column: 1,
                    message: format!("unknown family '{other}'"),
                }),
            };
        }
        let mut atoms = Vec::new();
        for (line_no, line) in data_lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    column: fields.len(),
                    message: format!("expected 'location weight', got {} fields", fields.len()),
                });
            }
            let location = if fields[0] == "inf" {
                Location::Infinite
            } else {
                let v = fields[0].parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    column: 1,
                    message: e.to_string(),
                })?;
                Location::new(v).map_err(|e| Error::Parse {
                    line: line_no,
                    column: 1,
                    message: e.to_string(),
                })?
            };
            let weight = fields[1].parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                column: 2,
                message: e.to_string(),
            })?;
            atoms.push(Atom { location, weight });
        }
        MixtureMeasure::from_atoms(atoms)
    }
}

impl fmt::Display for MixtureMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.density, self.atoms.len()) {
            (Some((DensityFamily::Rayleigh { sigma }, w)), 0) if *w == 1.0 => {
                write!(f, "rayleigh({sigma})")
            }
            (Some((DensityFamily::Type2Gumbel { b }, w)), 0) if *w == 1.0 => {
                write!(f, "type2gumbel({b})")
            }
            (None, 1) => match self.atoms[0].location {
                Location::Finite(x) => write!(f, "dirac({x})"),
                Location::Infinite => write!(f, "dirac(inf)"),
            },
            (None, n) => write!(f, "atoms(n={n})"),
            _ => write!(f, "mixture"),
        }
    }
}

/// One atom of an eta measure on [0, inf] x R^2 (lambda, theta, gamma).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaAtom {
    pub lambda: Location,
    pub theta: f64,
    pub gamma: f64,
    pub weight: f64,
}

/// An atomic probability measure on [0, inf] x R^2.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaMeasure {
    atoms: Vec<EtaAtom>,
}

impl EtaMeasure {
    /// Weights must sum to 1 within 1e-9 (rescaled exactly); the uniform
    /// integrability surrogate sum w (e^{2 theta} + e^{2 gamma}) must be
    /// finite.
    pub fn new(mut atoms: Vec<EtaAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::domain("EtaMeasure: empty atom list"));
        }
        let mut total = 0.0;
        let mut surrogate = 0.0;
        for a in &atoms {
            if !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(Error::domain(format!("EtaMeasure: invalid weight {}", a.weight)));
            }
            if !a.theta.is_finite() || !a.gamma.is_finite() {
                return Err(Error::domain("EtaMeasure: theta and gamma must be finite"));
            }
            total += a.weight;
            surrogate += a.weight * ((2.0 * a.theta).exp() + (2.0 * a.gamma).exp());
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "EtaMeasure: weights sum to {total}, expected 1"
            )));
        }
        if !surrogate.is_finite() {
            return Err(Error::domain(
                "EtaMeasure: uniform-integrability surrogate is not finite",
            ));
        }
        for a in &mut atoms {
            a.weight /= total;
        }
        Ok(EtaMeasure { atoms })
    }

    pub fn atoms(&self) -> &[EtaAtom] {
        &self.atoms
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn density_normalization() {
        let nu = MixtureMeasure::rayleigh(1.0).unwrap();
        let one = nu.integrate(|_| 1.0, 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-9, "{one}");
        let nu = MixtureMeasure::type2_gumbel(0.7).unwrap();
        let one = nu.integrate(|_| 1.0, 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-10, "{one}");
    }

    #[test]
    fn dirac_and_empirical() {
        let nu = MixtureMeasure::dirac(Location::Infinite);
        assert_eq!(nu.atoms().len(), 1);
        assert_eq!(nu.mass_at_infinity(), 1.0);

        let emp = MixtureMeasure::empirical(&[0.5, 0.5, 2.0]).unwrap();
        let atoms = emp.atoms();
        assert_eq!(atoms.len(), 2);
        assert!((atoms[0].weight - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(atoms[0].location, Location::Finite(0.5));
        assert!((atoms[1].weight - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn integrate_atoms_and_moments() {
        let nu = MixtureMeasure::dirac(Location::new(2.0).unwrap());
        assert_eq!(nu.integrate(|x| x * x, f64::INFINITY).unwrap(), 4.0);

        // Second moment of Rayleigh(sigma) is 2 sigma^2.
        let nu = MixtureMeasure::rayleigh(1.5).unwrap();
        let m2 = nu.integrate(|x| x * x, f64::INFINITY).unwrap();
        assert!((m2 - 4.5).abs() < 1e-8, "{m2}");

        // int exp(-2/x^2) dnu for Type-2 Gumbel(1) = 1/3.
        let nu = MixtureMeasure::type2_gumbel(1.0).unwrap();
        let v = nu.integrate(|x| (-2.0 / (x * x)).exp(), 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn tailored_and_rational_transforms_agree() {
        let nu = MixtureMeasure::rayleigh(0.8).unwrap();
        let alt = nu.clone().with_quadrature(QuadratureSpec {
            nodes: 200,
            transform: Transform::Rational,
        });
        let f = |x: f64| (1.0 + x).recip();
        let a = nu.integrate(f, 0.0).unwrap();
        let b = alt.integrate(f, 0.0).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn discretize_idempotent_on_atoms() {
        let nu = MixtureMeasure::dirac(Location::new(1.0).unwrap());
        let d = nu.discretize(64).unwrap();
        assert_eq!(d, nu);
    }

    #[test]
    fn discretize_matches_moments() {
        let nu = MixtureMeasure::rayleigh(1.0).unwrap();
        let d = nu.discretize(128).unwrap();
        assert!(d.is_atomic());
        let mean = d.integrate(|x| x, f64::INFINITY).unwrap();
        let exact = (std::f64::consts::PI / 2.0).sqrt();
        assert!((mean - exact).abs() < 1e-4, "{mean} vs {exact}");

        let nu = MixtureMeasure::type2_gumbel(2.0).unwrap();
        let d = nu.discretize(128).unwrap();
        let a = d.integrate(|x| (-x).exp(), 0.0).unwrap();
        let b = nu.integrate(|x| (-x).exp(), 0.0).unwrap();
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }

    #[test]
    fn discretize_self_consistency_suite() {
        // discretize-then-integrate vs direct integrate for the standard
        // test integrands (lambda^2 omitted for Type-2 Gumbel: infinite).
        let phi = |x: f64| crate::special::norm_cdf(x);
        for sigma in [0.5, 1.0, 2.0] {
            let nu = MixtureMeasure::rayleigh(sigma).unwrap();
            let d = nu.discretize(128).unwrap();
            for (f, f_inf) in [
                (Box::new(|x: f64| x) as Box<dyn Fn(f64) -> f64>, f64::INFINITY),
                (Box::new(|x: f64| x * x), f64::INFINITY),
                (Box::new(|x: f64| (-x).exp()), 0.0),
                (Box::new(phi), 1.0),
            ] {
                let a = d.integrate(&f, f_inf).unwrap();
                let b = nu.integrate(&f, f_inf).unwrap();
                assert!((a - b).abs() < 1e-4, "sigma={sigma}: {a} vs {b}");
            }
        }
        for b_par in [0.5, 1.0, 2.0] {
            let nu = MixtureMeasure::type2_gumbel(b_par).unwrap();
            let d = nu.discretize(128).unwrap();
            for (f, f_inf) in [
                (Box::new(|x: f64| x) as Box<dyn Fn(f64) -> f64>, f64::INFINITY),
                (Box::new(|x: f64| (-x).exp()), 0.0),
                (Box::new(phi), 1.0),
            ] {
                let a = d.integrate(&f, f_inf).unwrap();
                let b = nu.integrate(&f, f_inf).unwrap();
                assert!((a - b).abs() < 1e-4, "b={b_par}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn empirical_law_of_large_numbers() {
        let sigma = 1.3;
        let nu = MixtureMeasure::rayleigh(sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000usize;
        let samples: Vec<f64> = (0..n)
            .map(|_| match nu.sample(&mut rng) {
                Location::Finite(x) => x,
                Location::Infinite => unreachable!(),
            })
            .collect();
        let emp = MixtureMeasure::empirical(&samples).unwrap();
        let mean_emp = emp.integrate(|x| x, f64::INFINITY).unwrap();
        let mean = nu.integrate(|x| x, f64::INFINITY).unwrap();
        // sd of Rayleigh
        let sd = sigma * (2.0 - std::f64::consts::PI / 2.0).sqrt();
        let tol = 5.0 * sd / (n as f64).sqrt();
        assert!((mean_emp - mean).abs() < tol, "{mean_emp} vs {mean}");
    }

    #[test]
    fn integrate_reports_nan_node() {
        let nu = MixtureMeasure::dirac(Location::new(2.0).unwrap());
        let err = nu.integrate(|_| f64::NAN, 0.0).unwrap_err();
        assert!(matches!(err, Error::NonFiniteIntegrand { .. }));
    }

    #[test]
    fn text_round_trip() {
        let nu = MixtureMeasure::from_atoms(vec![
            Atom {
                location: Location::Finite(0.5),
                weight: 0.25,
            },
            Atom {
                location: Location::Infinite,
                weight: 0.75,
            },
        ])
        .unwrap();
        let text = nu.to_text().unwrap();
        let back = MixtureMeasure::from_text(&text).unwrap();
        assert_eq!(nu, back);

        let r = MixtureMeasure::rayleigh(1.25).unwrap();
        let back = MixtureMeasure::from_text(&r.to_text().unwrap()).unwrap();
        assert_eq!(r, back);

        let err = MixtureMeasure::from_text("0.5 0.25\nbogus").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn atom_validation() {
        assert!(MixtureMeasure::from_atoms(vec![Atom {
            location: Location::Finite(1.0),
            weight: 0.5,
        }])
        .is_err());
        assert!(Location::new(-1.0).is_err());
        assert!(MixtureMeasure::rayleigh(0.0).is_err());
        assert!(MixtureMeasure::type2_gumbel(-1.0).is_err());
    }

    #[test]
    fn eta_measure_validation() {
        let eta = EtaMeasure::new(vec![EtaAtom {
            lambda: Location::Finite(1.0),
            theta: 0.0,
            gamma: 0.0,
            weight: 1.0,
        }])
        .unwrap();
        assert_eq!(eta.atoms().len(), 1);
        assert!(EtaMeasure::new(vec![EtaAtom {
            lambda: Location::Finite(1.0),
            theta: f64::INFINITY,
            gamma: 0.0,
            weight: 1.0,
        }])
        .is_err());
        assert!(EtaMeasure::new(vec![EtaAtom {
            lambda: Location::Finite(1.0),
            theta: 0.0,
            gamma: 0.0,
            weight: 0.5,
        }])
        .is_err());
    }
}
