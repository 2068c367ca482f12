use proptest::prelude::*;
use radgas::diagnostics::{fit_decay_exponent, DiagnosticsRecord};
use radgas::elliptic::BcKind;
use radgas::flux::{FluxConfig, FluxKind};
use radgas::io::{checkpoint, emit_config, parse_config_str, read_series, restore, write_series};
use radgas::stationary::EndpointStates;
use radgas::stepper::{Perturbation, SimConfig, Simulation};
use radgas::Error;

fn cfg() -> SimConfig {
    SimConfig {
        nx: 96,
        ny: 8,
        lx: 60.0,
        ly: 8.0,
        t_end: 1e9,
        record_every: 5,
        perturbation: Perturbation::Gaussian {
            amp: 0.01,
            x0: 5.0,
            y0: 3.0,
            sx: 1.0,
            sy: 1.5,
        },
        ..SimConfig::default()
    }
}

fn records(sim: &mut Simulation, steps: usize) -> Vec<[u64; 23]> {
    let mut out = Vec::new();
    for _ in 0..steps {
        sim.advance().unwrap();
        if sim.steps.is_multiple_of(sim.cfg.record_every) {
            out.push(sim.record().unwrap().to_row().map(f64::to_bits));
        }
    }
    out
}

#[test]
fn restart_reproduces_records_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mid.bin");
    let c = cfg();

    let mut full = Simulation::new(&c).unwrap();
    let all = records(&mut full, 100);

    let mut first = Simulation::new(&c).unwrap();
    let mut split = records(&mut first, 50);
    checkpoint(&first.state, &path).unwrap();
    let mut resumed = Simulation::from_state(&c, restore(&path).unwrap()).unwrap();
    split.extend(records(&mut resumed, 50));

    assert_eq!(all.len(), 20);
    assert_eq!(all, split);
    assert_eq!(full.state.t.to_bits(), resumed.state.t.to_bits());
}

#[test]
fn restore_rejects_foreign_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.bin");
    let sim = Simulation::new(&cfg()).unwrap();
    checkpoint(&sim.state, &path).unwrap();
    let other = SimConfig { nx: 128, ..cfg() };
    assert!(matches!(
        Simulation::from_state(&other, restore(&path).unwrap()),
        Err(Error::ShapeMismatch(_))
    ));
}

#[test]
fn edited_header_is_shape_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.bin");
    let sim = Simulation::new(&cfg()).unwrap();
    checkpoint(&sim.state, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
    let header = String::from_utf8(bytes[..nl].to_vec()).unwrap();
    let edited = header.replacen(" 96 ", " 95 ", 1);
    assert_ne!(edited, header);
    let mut out = edited.into_bytes();
    out.extend_from_slice(&bytes[nl..]);
    std::fs::write(&path, out).unwrap();
    assert!(matches!(restore(&path), Err(Error::ShapeMismatch(_))));
}

#[test]
fn series_round_trip_gives_identical_fit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let recs: Vec<DiagnosticsRecord> = (0..40)
        .map(|k| {
            let t = k as f64 * 0.7;
            let mut row = [0.0; 23];
            row[0] = t;
            row[1] = 0.013 * (1.0 + t).powf(-0.37) * (1.0 + 0.01 * (k as f64).sin());
            DiagnosticsRecord::from_row(&row)
        })
        .collect();
    write_series(&recs, &path).unwrap();
    let back = read_series(&path).unwrap();
    let fit = |r: &[DiagnosticsRecord]| {
        let t: Vec<f64> = r.iter().map(|x| x.t).collect();
        let v: Vec<f64> = r.iter().map(|x| x.sup_v).collect();
        fit_decay_exponent(&t, &v, 0.5).unwrap()
    };
    assert_eq!(fit(&recs).exponent.to_bits(), fit(&back).exponent.to_bits());
}

#[test]
fn empty_series_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    write_series(&[], &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);
    assert!(read_series(&path).unwrap().is_empty());
}

fn arb_config() -> impl Strategy<Value = SimConfig> {
    let pert = prop_oneof![
        Just(Perturbation::None),
        (1e-4f64..0.1, 1.0f64..20.0, 0.0f64..16.0, 0.5f64..4.0, 0.5f64..4.0)
            .prop_map(|(amp, x0, y0, sx, sy)| Perturbation::Gaussian { amp, x0, y0, sx, sy }),
        (1e-4f64..0.1, 0.6f64..3.0).prop_map(|(amp, beta)| Perturbation::WeightedTail { amp, beta }),
    ];
    let g = prop_oneof![
        Just(FluxKind::Burgers),
        Just(FluxKind::Zero),
        (-2.0f64..2.0).prop_map(FluxKind::Linear),
    ];
    (
        -2.0f64..-0.5,
        0.05f64..=1.0,
        g,
        (3u32..10, 2u32..7, 10.0f64..300.0, 1.0f64..64.0),
        (0.05f64..0.9, 0.0f64..500.0, 0.0f64..0.99, 1usize..100, any::<u64>()),
        any::<bool>(),
        pert,
    )
        .prop_map(|(um, frac, g, (nx, ny, lx, ly), (cfl, t_end, alpha, rec, seed), hom, perturbation)| {
            SimConfig {
                endpoints: EndpointStates::new(um, um * (1.0 - frac)).unwrap(),
                flux: FluxConfig::new(g, 1.0).unwrap(),
                nx: 1 << nx,
                ny: 1 << ny,
                lx,
                ly,
                cfl,
                t_end,
                bc: if hom { BcKind::Homogeneous } else { BcKind::Compatibility },
                alpha,
                perturbation,
                record_every: rec,
                seed,
            }
        })
}

proptest! {
    #[test]
    fn config_round_trip(c in arb_config()) {
        let text = emit_config(&c);
        let back = parse_config_str(&text).unwrap();
        prop_assert_eq!(back, c);
    }
}
