use std::io::{BufReader, Seek, SeekFrom};

use proptest::prelude::*;
use uavsim_core::contract::{build_menu, verify_ic, EconomicParams, OfferMenu};
use uavsim_core::geom::Region;
use uavsim_core::ingest::{haar_forward, haar_inverse, read_record_stream, write_record_stream};
use uavsim_core::learning::TransmissionRecord;
use uavsim_core::mixture::{Component, Cov2, MixtureKind, MixtureModel};

fn econ<F: uavsim_core::Scalar>(alpha: f64, hover: f64) -> EconomicParams<F> {
    EconomicParams { energy_cost_per_j: F::lit(alpha), hover_power_w: F::lit(hover), move_power_w: F::lit(hover), ..Default::default() }
}

proptest! {
    #[test]
    fn menu_power_closed_form_in_single_precision(
        alpha in 0.1f64..5.0,
        hover in 1.0f64..50.0,
        demand_exp in 6.0f64..11.0,
        frac in 0.0f64..0.5,
    ) {
        let (t_total, d) = (1080.0f32, 10f32.powf(demand_exp as f32));
        let menu = build_menu::<f32>(d, t_total, &econ(alpha, hover), 0.5).unwrap();
        let t = frac as f32 * t_total;
        let theta = d / (alpha as f32 * (t_total - t));
        let expect = hover as f32 * t_total * t_total / ((t_total - t) * (t_total - t));
        prop_assert!((menu.power(theta) - expect).abs() <= 1e-4 * expect);
        let ic = verify_ic(&menu, 50).unwrap();
        prop_assert!(ic.monotone && ic.max_deviation_steps <= 1, "{:?}", ic);
    }

    #[test]
    fn haar_round_trip(series in prop::collection::vec(-1e3f64..1e3, 8..80), levels in 1usize..4) {
        let back = haar_inverse(&haar_forward(&series, levels).unwrap());
        prop_assert_eq!(back.len(), series.len());
        for (a, b) in back.iter().zip(&series) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn region_set_algebra(a in prop::collection::vec(any::<bool>(), 36), b in prop::collection::vec(any::<bool>(), 36)) {
        let full = Region::<f64>::full(0.0, 0.0, 10.0, 6, 6).unwrap();
        let (ra, rb) = (full.with_mask(a).unwrap(), full.with_mask(b).unwrap());
        let (u, i) = (ra.union(&rb).unwrap(), ra.intersection(&rb).unwrap());
        prop_assert!(i.is_subset_of(&ra) && i.is_subset_of(&rb));
        prop_assert!(ra.is_subset_of(&u) && rb.is_subset_of(&u));
        prop_assert_eq!(u.cell_count() + i.cell_count(), ra.cell_count() + rb.cell_count());
    }

    #[test]
    fn density_surface_is_nonnegative(
        comps in prop::collection::vec((0.0f64..5.0, -100.0f64..100.0, -100.0f64..100.0, 1.0f64..400.0), 1..5),
        x in -300.0f64..300.0,
        y in -300.0f64..300.0,
    ) {
        let components = comps.iter().map(|&(w, mx, my, v)| Component { weight: w, mean: [mx, my], cov: Cov2::isotropic(v) }).collect();
        let m = MixtureModel::new(MixtureKind::DensityFunction, components).unwrap();
        prop_assert!(m.eval([x, y]) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn record_stream_file_round_trip(recs in prop::collection::vec((0.0f64..1e8, -5e3f64..5e3, -5e3f64..5e3, 0.0f64..3600.0), 0..40)) {
        let mut records: Vec<TransmissionRecord<f64>> = recs
            .iter()
            .map(|&(rate, x, y, t)| TransmissionRecord { rate_bps: rate, location: [x, y], time_s: t })
            .collect();
        records.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        let mut file = tempfile::tempfile().unwrap();
        write_record_stream(&[(4, records.as_slice())], &mut file).unwrap();
        file.seek(SeekFrom::Start(0)).unwrap();
        let back = read_record_stream::<f64>(BufReader::new(file)).unwrap();
        prop_assert_eq!(back.get(&4).cloned().unwrap_or_default(), records);
    }
}
