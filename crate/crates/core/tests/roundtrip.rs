use breatherlab::checkpoint::Checkpoint;
use breatherlab::config::{ExperimentConfig, ExperimentKind};
use breatherlab::random::{band_limited_field, rng};
use breatherlab::solver::{self, Scheme, SolverConfig};
use breatherlab::{Grid1D, PerturbationField};
use num_complex::Complex64;
use proptest::prelude::*;

fn field_strategy() -> impl Strategy<Value = PerturbationField> {
    (1.0f64..500.0, 1usize..40).prop_flat_map(|(length, half)| {
        prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 2 * half).prop_map(move |pairs| {
            let grid = Grid1D::new(length, pairs.len()).unwrap();
            let samples = pairs.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            PerturbationField::new(grid, samples).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn checkpoint_round_trip_is_bit_exact(field in field_strategy(), t in -1e3f64..1e3, s in 0.6f64..4.0, midpoint: bool) {
        let scheme = if midpoint { Scheme::ExponentialMidpoint } else { Scheme::PicardDuhamel };
        let original = Checkpoint { t, s, scheme, field };
        let mut bytes = Vec::new();
        original.write_to(&mut bytes).unwrap();
        let back = Checkpoint::read_from(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.t.to_bits(), t.to_bits());
        prop_assert_eq!(back.s.to_bits(), s.to_bits());
        prop_assert_eq!(back.scheme, scheme);
        prop_assert_eq!(back.field.grid().length().to_bits(), original.field.grid().length().to_bits());
        for (a, b) in back.field.samples().iter().zip(original.field.samples()) {
            prop_assert_eq!((a.re.to_bits(), a.im.to_bits()), (b.re.to_bits(), b.im.to_bits()));
        }
    }

    #[test]
    fn truncated_checkpoints_are_rejected(field in field_strategy(), cut in 1usize..64) {
        let mut bytes = Vec::new();
        Checkpoint { t: 0.0, s: 1.0, scheme: Scheme::PicardDuhamel, field }.write_to(&mut bytes).unwrap();
        bytes.truncate(bytes.len().saturating_sub(cut));
        prop_assert!(Checkpoint::read_from(bytes.as_slice()).is_err());
    }

    #[test]
    fn transform_round_trip_and_parseval(field in field_strategy()) {
        let grid = field.grid();
        let back = grid.backward(&grid.forward(field.samples()));
        let scale = field.linf_norm().max(1.0);
        for (a, b) in back.iter().zip(field.samples()) {
            prop_assert!((a - b).norm() <= 1e-12 * scale);
        }
        let l2 = field.l2_norm();
        prop_assert!((field.to_spectral().parseval_l2() - l2).abs() <= 1e-12 * l2.max(1.0));
    }
}

#[test]
fn config_toml_round_trip() {
    for kind in [
        ExperimentKind::Simulate,
        ExperimentKind::GrowthScan,
        ExperimentKind::PeregrineInstability,
        ExperimentKind::KmInstability,
    ] {
        let cfg = ExperimentConfig::default_for(kind);
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg, "{text}");
    }
}

#[test]
fn restart_from_checkpoint_continues_the_run() {
    let grid = Grid1D::new(40.0, 128).unwrap();
    let w0 = band_limited_field(&grid, &mut rng(4), 3.0, true).scaled(0.05);
    let full = SolverConfig { t_end: 1.0, dt: 1e-2, snapshot_interval: 0.5, ..Default::default() };
    let reference = solver::run(&w0, &full).unwrap();

    let half = SolverConfig { t_end: 0.5, ..full.clone() };
    let first = solver::run(&w0, &half).unwrap();
    let mut bytes = Vec::new();
    let last = first.last();
    Checkpoint { t: last.t, s: half.s, scheme: half.scheme, field: last.field.clone() }.write_to(&mut bytes).unwrap();
    let restored = Checkpoint::read_from(bytes.as_slice()).unwrap();
    let second = solver::run_from(&restored.field, restored.t, &full).map_err(|f| f.error).unwrap();

    let end = second.last();
    assert_eq!(end.t, 1.0);
    let diff = end.field.sub(&reference.last().field).unwrap().hs_norm(1.0).unwrap();
    assert!(diff <= 1e-12, "restart drifted by {diff:e}");
}
