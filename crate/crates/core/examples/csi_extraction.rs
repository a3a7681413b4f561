//! Single-path captures through preamble averaging and pulse compression.

use chirploc::csi::csi_from_captures;
use chirploc::simenv::Scenario;
use chirploc::Result;

pub fn run_example() -> Result<chirploc::csi::CsiMatrix> {
    let sc = Scenario {
        tx: [4.0, 10.0],
        offsets: false,
        snr_db: Some(10.0),
        ..Scenario::default()
    };
    let paths = sc.geometry_to_paths(0)?;
    println!("direct path: theta {:.2} deg, tau {:.2} ns", paths[0].theta, paths[0].tau * 1e9);
    let caps = sc.synthesize_captures(0)?;
    let csi = csi_from_captures(&caps, &sc.chirp, &sc.plan, &sc.geometry)?;
    for i in 0..csi.channels() {
        let (a, b) = (csi.values[(0, i)], csi.values[(1, i)]);
        println!(
            "ch{i}: |H| {:.4}  inter-antenna phase {:+.4} rad",
            a.norm(),
            (b * a.conj()).arg()
        );
    }
    println!(
        "expected inter-antenna phase {:+.4} rad",
        sc.geometry.antenna_phase(paths[0].theta, sc.plan.fc_base)
    );
    Ok(csi)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
