use cosim::estimators::{Dimensions, ErrorEstimator, EstimatorError, LocalErrors, SyncPoint};
use cosim::master::IndicatorSetup;
use cosim::{
    attach_indicator, compare_with_reference, run, scaled_tolerances, AggregationKind, Builtin,
    ControllerConfig, ErrorIndicator, EstimatorKind, OscillatorParams, QuarterCarSetup, Run,
    Stepping,
};
use proptest::prelude::*;

fn oscillator(params: OscillatorParams, t_start: f64, t_stop: f64, dt: f64) -> Run {
    run(Builtin::Oscillator(params).scenario(t_start, t_stop, Stepping::Fixed { dt })).unwrap()
}

fn quarter_car_adaptive(kind: EstimatorKind, t_stop: f64, parallel: bool) -> Run {
    let system = Builtin::QuarterCar(QuarterCarSetup::default());
    let has_ft = true;
    let p = kind.order(0, has_ft);
    let mut s = system.scenario(0.0, t_stop, Stepping::Adaptive(ControllerConfig::for_order(p)));
    let typical: &[f64] = match kind {
        EstimatorKind::Nepce { .. } => &[1e3, 0.3],
        EstimatorKind::Predictor => &[0.3, 1e3],
        EstimatorKind::Ecco => &[3.0],
    };
    attach_indicator(
        &mut s,
        kind,
        scaled_tolerances(2e-3, typical).unwrap(),
        AggregationKind::Max,
    )
    .unwrap();
    s.parallel = parallel;
    run(s).unwrap()
}

/// Reports zero error once it has seen `warmup` points.
struct Silent {
    warmup: usize,
    seen: usize,
}

impl ErrorEstimator for Silent {
    fn name(&self) -> &str {
        "silent"
    }
    fn error_count(&self, _: Dimensions) -> usize {
        1
    }
    fn order(&self) -> usize {
        1
    }
    fn estimate(&mut self, _: &SyncPoint<'_>) -> Result<Option<LocalErrors>, EstimatorError> {
        self.seen += 1;
        Ok((self.seen > self.warmup).then(|| LocalErrors {
            errors: vec![0.0],
            magnitudes: vec![1.0],
        }))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fixed_runs_end_exactly_at_t_stop(
        t_start in -1.0f64..1.0,
        span in 0.0f64..0.5,
        dt in 1e-3f64..0.2,
    ) {
        let t_stop = t_start + span;
        let r = oscillator(OscillatorParams::default(), t_start, t_stop, dt);
        prop_assert_eq!(r.records[0].t, t_start);
        prop_assert_eq!(r.final_time(), Some(t_stop));
        let n = r.steps();
        let exact = span / dt;
        prop_assert!(n as f64 >= exact - 1e-9 && (n as f64) < exact + 1.0 + 1e-9, "n={} exact={}", n, exact);
        for w in r.records.windows(2) {
            prop_assert!(w[1].t > w[0].t);
            prop_assert!(w[1].dt <= dt * (1.0 + 1e-9));
            prop_assert!(w[1].dt > 0.0);
        }
    }

    #[test]
    fn inputs_lag_outputs_by_one_step(dt in 1e-3f64..0.05, steps in 1usize..40) {
        let r = oscillator(OscillatorParams::default(), 0.0, dt * steps as f64, dt);
        for rec in &r.records {
            // u = L y at the same synchronization point
            prop_assert_eq!(rec.u[0], rec.y[1]);
            prop_assert_eq!(rec.u[1], rec.y[0]);
        }
        // the mass sees a constant force over each step, so its velocity
        // changes by the previous spring force times h / m
        let m = OscillatorParams::default().mass;
        for w in r.records.windows(2) {
            let dv = w[1].y[0] - w[0].y[0];
            let expect = w[0].u[0] * w[1].dt / m;
            prop_assert!((dv - expect).abs() <= 1e-9 * (1.0 + expect.abs()), "{} vs {}", dv, expect);
        }
    }

    #[test]
    fn energy_residual_is_power_times_scaled_step(dt in 1e-3f64..0.05) {
        let r = oscillator(OscillatorParams::damped(), 0.0, 1.0, dt);
        for rec in &r.records[1..] {
            let expect = rec.delta_p[0] * rec.dt / 2.0;
            prop_assert!((rec.delta_e[0] - expect).abs() <= 1e-12 * expect.abs().max(1e-300));
        }
    }

    #[test]
    fn identical_inputs_give_identical_records(dt in 1e-3f64..0.05, x0 in -2.0f64..2.0) {
        let p = OscillatorParams { position: x0, ..OscillatorParams::damped() };
        let a = oscillator(p, 0.0, 1.0, dt);
        let b = oscillator(p, 0.0, 1.0, dt);
        prop_assert_eq!(a.records, b.records);
    }

    #[test]
    fn adaptive_steps_respect_bounds(tol in 1e-4f64..1e-1, dt_start in 1e-4f64..1e-2) {
        let cfg = ControllerConfig { dt_start: Some(dt_start), ..ControllerConfig::for_order(1) };
        let mut s = Builtin::QuarterCar(QuarterCarSetup::default())
            .scenario(0.0, 0.5, Stepping::Adaptive(cfg));
        attach_indicator(
            &mut s,
            EstimatorKind::default(),
            scaled_tolerances(tol, &[1e3, 0.3]).unwrap(),
            AggregationKind::Max,
        )
        .unwrap();
        let r = run(s).unwrap();
        prop_assert_eq!(r.final_time(), Some(0.5));
        prop_assert!((r.records[1].dt - dt_start).abs() <= 1e-15);
        let steps: Vec<f64> = r.records[1..r.records.len() - 1].iter().map(|x| x.dt).collect();
        for &h in &steps {
            prop_assert!((cfg.dt_min * (1.0 - 1e-12)..=cfg.dt_max * (1.0 + 1e-12)).contains(&h));
        }
        for w in steps.windows(2) {
            let ratio = w[1] / w[0];
            let lo = cfg.theta_min.min(cfg.dt_min / w[0]);
            let hi = cfg.theta_max.max(cfg.dt_max / w[0]);
            prop_assert!(ratio >= lo * (1.0 - 1e-12) && ratio <= hi * (1.0 + 1e-12), "ratio {}", ratio);
        }
    }
}

#[test]
fn warm_up_grows_step_at_rate_limit() {
    let cfg = ControllerConfig {
        dt_start: Some(1e-4),
        ..ControllerConfig::for_order(1)
    };
    let mut s = Builtin::QuarterCar(QuarterCarSetup::default()).scenario(
        0.0,
        0.2,
        Stepping::Adaptive(cfg),
    );
    s.indicator = Some(IndicatorSetup {
        estimator: Box::new(Silent { warmup: 3, seen: 0 }),
        indicator: ErrorIndicator {
            tolerances: scaled_tolerances(1e-3, &[1.0]).unwrap(),
            aggregation: AggregationKind::Max,
        },
    });
    let r = run(s).unwrap();
    for (n, rec) in r.records[1..r.records.len() - 1].iter().enumerate() {
        let expect = (cfg.dt_max).min(1e-4 * cfg.theta_max.powi(n as i32));
        assert!(
            (rec.dt - expect).abs() <= 1e-12 * expect,
            "step {n}: {} vs {expect}",
            rec.dt
        );
        if n < 3 {
            assert_eq!(rec.eps, 0.0);
        }
    }
}

#[test]
fn parallel_matches_sequential() {
    let fixed = |parallel| {
        let mut s = Builtin::QuarterCar(QuarterCarSetup::default()).scenario(
            0.0,
            1.0,
            Stepping::Fixed { dt: 1e-3 },
        );
        s.parallel = parallel;
        run(s).unwrap().records
    };
    assert_eq!(fixed(true), fixed(false));
    for kind in [
        EstimatorKind::default(),
        EstimatorKind::Predictor,
        EstimatorKind::Ecco,
    ] {
        let a = quarter_car_adaptive(kind, 1.0, true);
        let b = quarter_car_adaptive(kind, 1.0, false);
        assert_eq!(a.records, b.records, "{kind:?}");
    }
}

#[test]
fn every_estimator_drives_an_adaptive_run() {
    for kind in [
        EstimatorKind::default(),
        EstimatorKind::Nepce {
            feedthrough_correction: true,
        },
        EstimatorKind::Predictor,
        EstimatorKind::Ecco,
    ] {
        let r = quarter_car_adaptive(kind, 2.0, false);
        assert!(r.divergence.is_none(), "{kind:?}");
        assert_eq!(r.final_time(), Some(2.0));
        assert!(r.records.iter().any(|x| x.eps > 0.0), "{kind:?}");
        let distinct = r.records[1..]
            .windows(2)
            .filter(|w| w[0].dt != w[1].dt)
            .count();
        assert!(distinct > 0, "{kind:?} never changed the step");
    }
}

#[test]
fn undamped_coupling_error_grows() {
    let system = Builtin::Oscillator(OscillatorParams::default());
    let r = oscillator(OscillatorParams::default(), 0.0, 2.0, 0.05);
    let times: Vec<f64> = r.records.iter().map(|x| x.t).collect();
    let reference = system.reference(0.0, 2.0, &times).unwrap();
    let cmp = compare_with_reference(&r.records, &reference).unwrap();
    let peak = |lo: f64, hi: f64, k: usize| {
        cmp.t
            .iter()
            .zip(&cmp.dy)
            .filter(|(t, _)| **t > lo && **t <= hi)
            .fold(0.0f64, |m, (_, dy)| m.max(dy[k].abs()))
    };
    for k in 0..2 {
        let early = peak(0.0, 1.0, k);
        let late = peak(1.0, 2.0, k);
        assert!(early > 0.0);
        assert!(late > early, "output {k}: {early} then {late}");
    }
}

#[test]
fn undamped_energy_trends_upward() {
    let r = oscillator(OscillatorParams::default(), 0.0, 5.0, 0.05);
    let e: Vec<f64> = r.records.iter().map(|x| x.energy.unwrap()).collect();
    let per_second: Vec<f64> = e.chunks(20).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    assert!(per_second.windows(2).all(|w| w[1] > w[0]), "{per_second:?}");
    assert!(r.cumulative_delta_e() > 0.0);
}
