//! All four estimators on one synchronized three-path channel.

use chirploc::estimators::{estimate, AoaEstimate, Method};
use chirploc::harness::pipeline::prepare_csi;
use chirploc::harness::ExperimentConfig;
use chirploc::simenv::{Reflector, Scenario};
use chirploc::Result;

pub fn run_example() -> Result<Vec<AoaEstimate>> {
    let cfg = ExperimentConfig {
        scenario: Scenario {
            tx: [-5.0, 20.0],
            // strong reflectors so both clear the model-order threshold
            reflectors: vec![
                Reflector {
                    gain: Some(1.0),
                    ..Reflector::at(25.0, 45.0)
                },
                Reflector {
                    gain: Some(1.0),
                    ..Reflector::at(-45.0, 30.0)
                },
            ],
            snr_db: Some(20.0),
            seed: 6,
            ..Scenario::default()
        },
        ..ExperimentConfig::default()
    };
    let sc = &cfg.scenario;
    let truth: Vec<f64> = sc.geometry_to_paths(0)?.iter().map(|p| p.theta).collect();
    println!("true angles: {truth:.1?}");
    let csi = prepare_csi(&sc.synthesize_captures(0)?, &cfg.pipeline())?.synced;
    let mut out = Vec::new();
    for m in Method::ALL {
        match estimate(&csi, m, &cfg.estimator) {
            Ok(e) => {
                println!("{:<20} order {}  angles {:.1?}", m.name(), e.model_order, e.angles);
                out.push(e);
            }
            Err(e) => println!("{:<20} failed: {e}", m.name()),
        }
    }
    Ok(out)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
