use pilotforge::harness::{csv_string, parse_csv, preset, run_scenario};

const FIG1: &str = include_str!("golden/fig1_t100_s42.csv");

#[test]
fn fig1_matches_frozen_output() {
    let mut s = preset("fig1").unwrap();
    s.trials = 100;
    s.seed = 42;
    let text = csv_string(&run_scenario(&s).unwrap());
    if text != FIG1 {
        let (got, want) = (parse_csv(&text).unwrap(), parse_csv(FIG1).unwrap());
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert_eq!((&g.method, g.tau, g.nrf), (&w.method, w.tau, w.nrf));
            assert!(
                (g.mean_nmse - w.mean_nmse).abs() <= 1e-5 * w.mean_nmse,
                "{} tau {}: {} vs frozen {}",
                g.method,
                g.tau,
                g.mean_nmse,
                w.mean_nmse
            );
        }
        panic!("output differs from the frozen file only in low-order digits");
    }
}
