use proptest::prelude::*;
use vanet_core::mobility::{NetworkSnapshot, VehicleState};
use vanet_sim::summary::{distribution, line_fit};
use vanet_sim::trace::{parse_trace, write_csv, TraceFormat};

fn snapshots() -> impl Strategy<Value = (f64, Vec<Vec<(f64, f64, f64, f64)>>)> {
    let vehicle = (-5e3f64..5e3, -5e3f64..5e3, 0.0f64..40.0, 0.0f64..std::f64::consts::TAU);
    (prop_oneof![Just(1.0), Just(0.5), Just(2.0)], prop::collection::vec(prop::collection::vec(vehicle, 1..6), 1..8))
}

proptest! {
    #[test]
    fn trace_csv_round_trip((step_s, steps) in snapshots()) {
        let snaps: Vec<NetworkSnapshot> = steps
            .iter()
            .enumerate()
            .map(|(t, vs)| {
                let vs = vs
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, y, s, h))| VehicleState::new(format!("veh{i}").as_str(), x, y, s, h).unwrap())
                    .collect();
                NetworkSnapshot::new(t as u64, step_s, vs, vec![]).unwrap()
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&snaps, &mut buf).unwrap();
        let back = parse_trace(std::str::from_utf8(&buf).unwrap(), TraceFormat::Csv).unwrap();
        prop_assert_eq!(back.len(), snaps.len());
        for (a, b) in snaps.iter().zip(&back) {
            prop_assert_eq!(a.step, b.step);
            if snaps.len() > 1 {
                prop_assert!((a.step_s - b.step_s).abs() < 1e-9);
            }
            prop_assert_eq!(a.vehicles.len(), b.vehicles.len());
            for (u, v) in a.vehicles.iter().zip(&b.vehicles) {
                prop_assert_eq!(&u.id, &v.id);
                prop_assert!((u.x - v.x).abs() <= 5e-4 && (u.y - v.y).abs() <= 5e-4);
                prop_assert!((u.speed - v.speed).abs() <= 5e-3);
                prop_assert!((u.heading - v.heading).abs() <= 5e-3);
            }
        }
    }

    #[test]
    fn quartiles_match_textbook_interpolation(values in prop::collection::vec(-1e6f64..1e6, 1..200)) {
        let d = distribution(&values).unwrap();
        let mut s = values.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = s.len();
        // 1-based position 1 + (n - 1) p
        let oracle = |p: f64| {
            let k = 1.0 + (n as f64 - 1.0) * p;
            let j = k.floor() as usize;
            if j >= n { s[n - 1] } else { s[j - 1] + (k - j as f64) * (s[j] - s[j - 1]) }
        };
        let tol = |x: f64| 1e-9 * x.abs().max(1.0);
        prop_assert!((d.q1 - oracle(0.25)).abs() <= tol(d.q1));
        prop_assert!((d.median - oracle(0.5)).abs() <= tol(d.median));
        prop_assert!((d.q3 - oracle(0.75)).abs() <= tol(d.q3));
        prop_assert_eq!((d.min, d.max), (s[0], s[n - 1]));
        let mean = s.iter().sum::<f64>() / n as f64;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        prop_assert!((d.mean - mean).abs() <= tol(mean) * 1e3);
        prop_assert!((d.stddev - var.sqrt()).abs() <= tol(var.sqrt()) * 1e3);
    }

    #[test]
    fn line_fit_recovers_exact_lines(slope in -10.0f64..10.0, intercept in -10.0f64..10.0, n in 2usize..50) {
        prop_assume!(slope.abs() > 1e-3);
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + intercept).collect();
        let f = line_fit(&xs, &ys).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-8);
        prop_assert!((f.intercept - intercept).abs() < 1e-8);
        prop_assert!((f.r - slope.signum()).abs() < 1e-9);
    }
}
