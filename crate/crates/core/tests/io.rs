mod common;

use common::{dim, unit_values, wiggly_eight};
use figeight::io::{read_orbit, write_orbit, write_plot_csv, OrbitFile};
use figeight::loop_space::{LoopPath, Series};
use figeight::Potential;
use nalgebra::DVector;
use proptest::prelude::*;

fn potential() -> impl Strategy<Value = Potential> {
    prop_oneof![
        (-1.9f64..4.0).prop_filter("nonzero", |a| a.abs() > 1e-6).prop_map(|a| Potential::homogeneous(a).unwrap()),
        Just(Potential::LennardJones),
    ]
}

/// Coordinates spanning many binades, so shortest-form printing is exercised.
fn any_loop(n: usize) -> impl Strategy<Value = LoopPath> {
    (1e-3f64..1e3, proptest::collection::vec((-1.0f64..1.0, -12i32..12), dim(n))).prop_map(move |(period, raw)| {
        let c = DVector::from_iterator(raw.len(), raw.iter().map(|(m, e)| m * 10f64.powi(*e)));
        LoopPath::from_coords(period, n, c).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orbit_json_reproduces_amplitudes_bit_for_bit(q in any_loop(5), pot in potential()) {
        let file = OrbitFile::new(&q, &pot).unwrap();
        let back = OrbitFile::from_json(&file.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.period.to_bits(), q.period().to_bits());
        prop_assert_eq!(back.potential.potential().unwrap(), pot);
        let p = back.path().unwrap();
        for (x, y) in p.coords().iter().zip(q.coords().iter()) {
            prop_assert!((x - y).abs() <= 4.0 * f64::EPSILON * y.abs());
        }
    }

    #[test]
    fn orbit_files_round_trip_on_disk(noise in unit_values(6), period in 0.5f64..30.0) {
        let q = wiggly_eight(period, 6, &noise, 1.0);
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("orbit.json");
        let pot = Potential::LennardJones;
        write_orbit(&file, &q, &pot).unwrap();
        let (p, back) = read_orbit(&file).unwrap();
        prop_assert_eq!(back, pot);
        prop_assert_eq!(OrbitFile::new(&p, &pot).unwrap(), OrbitFile::new(&q, &pot).unwrap());
    }
}

#[test]
fn plot_rows_are_the_sampled_positions() {
    let q = wiggly_eight(2.0, 6, &vec![0.3; dim(6)], 1.0);
    let mut buf = Vec::new();
    write_plot_csv(&q, 10, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let rows: Vec<Vec<f64>> = reader.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 10);
    for row in &rows {
        let pos = q.evaluate(row[0]);
        for b in 0..3 {
            assert_eq!(row[1 + 2 * b], pos[b][0]);
            assert_eq!(row[2 + 2 * b], pos[b][1]);
        }
    }
    assert_eq!(rows[9][0], 1.8);
    assert!(write_plot_csv(&q, 0, Vec::new()).is_err());
}
