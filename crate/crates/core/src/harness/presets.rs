//! Ready-made scenes.

use super::config::{ExperimentConfig, Region};
use crate::estimators::Method;
use crate::simenv::{ApPose, Reflector, Scenario};

/// Open 100 m x 60 m lawn with an AP in every corner looking at the
/// center, named A..D counter-clockwise from the origin, and three distant
/// reflectors standing in for buildings.
pub fn outdoor_lawn() -> ExperimentConfig {
    let center = [50.0, 30.0];
    let corners = [[0.0, 0.0], [100.0, 0.0], [100.0, 60.0], [0.0, 60.0]];
    ExperimentConfig {
        name: "outdoor_lawn".into(),
        trials: 100,
        methods: Method::ALL.to_vec(),
        tx_region: Some(Region {
            min: [10.0, 10.0],
            max: [90.0, 50.0],
        }),
        scenario: Scenario {
            tx: center,
            aps: corners.iter().map(|&c| ApPose::facing(c, center)).collect(),
            reflectors: vec![
                Reflector::at(50.0, -15.0),
                Reflector::at(115.0, 35.0),
                Reflector::at(30.0, 75.0),
            ],
            snr_db: Some(10.0),
            seed: 7,
            ..Default::default()
        },
        ..Default::default()
    }
}

/// Cluttered 25 m x 15 m room: four corner APs and five reflectors on or
/// near the walls.
pub fn indoor_room() -> ExperimentConfig {
    let center = [12.5, 7.5];
    let corners = [[0.0, 0.0], [25.0, 0.0], [25.0, 15.0], [0.0, 15.0]];
    ExperimentConfig {
        name: "indoor_room".into(),
        trials: 100,
        methods: Method::ALL.to_vec(),
        tx_region: Some(Region {
            min: [3.0, 3.0],
            max: [22.0, 12.0],
        }),
        scenario: Scenario {
            tx: center,
            aps: corners.iter().map(|&c| ApPose::facing(c, center)).collect(),
            reflectors: vec![
                Reflector::at(6.0, 14.5),
                Reflector::at(18.0, 14.5),
                Reflector::at(24.5, 9.0),
                Reflector::at(12.0, 0.5),
                Reflector::at(0.5, 7.0),
            ],
            snr_db: Some(10.0),
            seed: 11,
            ..Default::default()
        },
        ..Default::default()
    }
}

pub fn by_name(name: &str) -> Option<ExperimentConfig> {
    match name {
        "outdoor_lawn" => Some(outdoor_lawn()),
        "indoor_room" => Some(indoor_room()),
        _ => None,
    }
}

pub const NAMES: [&str; 2] = ["outdoor_lawn", "indoor_room"];
