//! Bearing likelihood maps of three APs multiplied into one heat map.

use chirploc::fusion::{angles_heatmap, fuse, locate, GridSpec, LocateMode, Location};
use chirploc::simenv::ApPose;
use chirploc::Result;

pub fn run_example() -> Result<Location> {
    let tx = [32.0, 21.0];
    let aps = [
        ApPose::facing([0.0, 0.0], [25.0, 15.0]),
        ApPose::facing([50.0, 0.0], [25.0, 15.0]),
        ApPose::facing([25.0, 30.0], [25.0, 15.0]),
    ];
    let grid = GridSpec::covering(&[[0.0, 0.0], [50.0, 30.0]], 5.0, 0.5)?;
    let mut maps = Vec::new();
    for (i, ap) in aps.iter().enumerate() {
        let bearing = (tx[1] - ap.position[1]).atan2(tx[0] - ap.position[0]).to_degrees();
        // one decoy bearing per AP, as a reflection would produce
        let angles = [ap.relative_angle(bearing), ap.relative_angle(bearing) + 25.0 - 10.0 * i as f64];
        maps.push(angles_heatmap(ap, &angles, 3.0, &grid)?);
    }
    let fused = fuse(&maps)?;
    let loc = locate(&fused, LocateMode::Argmax)?;
    println!("argmax   ({:.2}, {:.2}), truth ({}, {})", loc.x, loc.y, tx[0], tx[1]);
    let c = locate(&fused, LocateMode::Centroid { fraction: 0.5 })?;
    println!("centroid ({:.2}, {:.2})", c.x, c.y);
    let path = std::env::temp_dir().join("chirploc_heatmap.txt");
    fused.write_text(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    println!("heat map written to {}", path.display());
    Ok(loc)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
