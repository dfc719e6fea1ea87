// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;

use spinboson_rwa::bath::{discretize, CutoffShape, DiscretizedBath, Mode, ModelParams, Scheme, SpectralDensity, VACUUM};
use spinboson_rwa::exact::ExactModel;
use spinboson_rwa::friedrichs::solve_survival;
use spinboson_rwa::grid::TimeGrid;
use spinboson_rwa::output::Table;
use spinboson_rwa::scenario::preset;

fn small_bath() -> impl Strategy<Value = DiscretizedBath> {
    prop::collection::vec((0.3..2.0f64, 0.01..0.3f64), 1..=3)
        .prop_map(|m| DiscretizedBath::new(m.into_iter().map(|(omega, coupling)| Mode { omega, coupling }).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_map_is_a_valid_channel(
        bath in small_bath(),
        omega in 0.5..1.5f64,
        beta in prop::option::of(1.0..8.0f64),
        m in 1usize..=3,
    ) {
        let params = ModelParams::new(omega, beta.unwrap_or(VACUUM), 1.0).unwrap();
        let model = ExactModel::new_unchecked(&bath, &params, m).unwrap();
        let times: Vec<f64> = (0..=40).map(|i| 0.5 * i as f64).collect();
        let c = model.map_coefficients(&times).unwrap();
        for i in 0..c.len() {
            prop_assert!((c.alpha[i] + c.gamma[i] - 1.0).abs() < 1e-10);
            prop_assert!((c.xi[i] + c.zeta[i] - 1.0).abs() < 1e-10);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&c.alpha[i]));
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&c.xi[i]));
            prop_assert!(c.eta[i].norm_sqr() <= c.alpha[i] * c.xi[i] + 1e-10);
        }
        prop_assert!((c.alpha[0] - 1.0).abs() < 1e-12 && (c.xi[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_band_discretisation_keeps_total_weight(
        level in 1e-4..1.0f64,
        lo in 0.0..2.0f64,
        width in 0.1..5.0f64,
        n in 1usize..=64,
        gl in any::<bool>(),
    ) {
        let j = SpectralDensity::flat_band(level, lo, lo + width).unwrap();
        let scheme = if gl { Scheme::GaussLegendre } else { Scheme::Midpoint };
        let bath = discretize(&j, n, scheme).unwrap();
        prop_assert_eq!(bath.len(), n);
        let exact = level * width;
        prop_assert!((bath.total_weight() - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomial_densities(
        a in 1u32..=3,
        scale in 1e-3..1.0f64,
        cutoff in 0.5..5.0f64,
        extra in 0usize..8,
    ) {
        let n = (a as usize + 2) / 2 + extra;
        let j = SpectralDensity::ohmic(a as f64, scale, cutoff, CutoffShape::Hard).unwrap();
        let bath = discretize(&j, n, Scheme::GaussLegendre).unwrap();
        let exact = scale * cutoff.powi(a as i32 + 1) / (a as f64 + 1.0);
        prop_assert!((bath.total_weight() - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn config_hash_ignores_labels_and_tracks_physics(name in "[a-z]{1,12}", d in 1e-9..0.5f64) {
        let base = preset("jc-vacuum").unwrap().scenario();
        let mut renamed = base.clone();
        renamed.name = name;
        prop_assert_eq!(base.config_hash(), renamed.config_hash());
        let reparsed = spinboson_rwa::scenario::Scenario::from_toml_str(&base.to_toml()).unwrap();
        prop_assert_eq!(base.config_hash(), reparsed.config_hash());
        let mut shifted = base.clone();
        shifted.model.omega += d;
        prop_assert_ne!(base.config_hash(), shifted.config_hash());
    }

    #[test]
    fn csv_round_trips_every_finite_value(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..50)) {
        let mut t = Table::new("x", &["v"]);
        for &v in &values {
            t.push(vec![v]);
        }
        let csv = t.to_csv();
        let back: Vec<f64> = csv.lines().skip(1).map(|l| l.parse().unwrap()).collect();
        prop_assert_eq!(back, values);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn volterra_conserves_probability_for_flat_bands(
        level in 1e-3..0.02f64,
        lo in 0.1..0.8f64,
        hi in 1.2..3.0f64,
    ) {
        let j = SpectralDensity::flat_band(level, lo, hi).unwrap();
        let t_max = 1.0 / (std::f64::consts::PI * level);
        let steps = (t_max * (hi - 1.0).max(1.0) / 0.05).ceil() as usize;
        let s = solve_survival(&j, 1.0, &TimeGrid::new(t_max, steps).unwrap()).unwrap();
        for i in 0..s.len() {
            prop_assert!((s.amplitude[i].norm_sqr() + s.flip_norm[i] - 1.0).abs() < 1e-5);
            prop_assert!(s.amplitude[i].norm() <= 1.0 + 1e-9);
        }
    }
}
