//! Property tests for the structural invariants: normal-CDF symmetry,
//! Frechet bounds and monotonicity of the bivariate family, unit mass of
//! constructed measures, and text-format round trips.

use maxstable::distributions::hr_bivariate_cdf;
use maxstable::measures::{Atom, Location, MixtureMeasure};
use maxstable::special::std_normal_cdf;
use proptest::prelude::*;

proptest! {
    #[test]
    fn normal_cdf_symmetry(x in -35.0f64..35.0) {
        let s = std_normal_cdf(x).unwrap() + std_normal_cdf(-x).unwrap();
        prop_assert!((s - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn hr_cdf_bounds_and_monotonicity(
        x in -5.0f64..5.0,
        y in -5.0f64..5.0,
        lambda in 0.0f64..20.0,
        step in 0.01f64..2.0,
    ) {
        let f = hr_bivariate_cdf(x, y, lambda).unwrap();
        let lower = (-(-x).exp() - (-y).exp()).exp();
        let upper = (-(-x.min(y)).exp()).exp();
        prop_assert!(f >= lower - 1e-12 && f <= upper + 1e-12);
        // nondecreasing in each argument
        let fx = hr_bivariate_cdf(x + step, y, lambda).unwrap();
        let fy = hr_bivariate_cdf(x, y + step, lambda).unwrap();
        prop_assert!(fx >= f - 1e-12);
        prop_assert!(fy >= f - 1e-12);
    }

    #[test]
    fn empirical_measures_have_unit_mass(samples in prop::collection::vec(0.0f64..50.0, 1..40)) {
        let nu = MixtureMeasure::empirical(&samples).unwrap();
        let total = nu.integrate(|_| 1.0, 1.0).unwrap();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn measure_text_round_trip(raw in prop::collection::vec((0.0f64..100.0, 0.05f64..1.0), 1..12)) {
        // distinct locations with normalized weights
        let mut atoms: Vec<Atom> = Vec::new();
        let total: f64 = raw.iter().map(|&(_, w)| w).sum();
        for (i, &(loc, w)) in raw.iter().enumerate() {
            atoms.push(Atom {
                location: Location::new(loc + i as f64 * 200.0).unwrap(),
                weight: w / total,
            });
        }
        let nu = MixtureMeasure::from_atoms(atoms).unwrap();
        let text = nu.to_text().unwrap();
        let back = MixtureMeasure::from_text(&text).unwrap();
        prop_assert_eq!(nu, back);
    }
}
