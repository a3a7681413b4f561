//! One burst of uploads replayed through the ingestion service in process.

use std::sync::{Arc, Mutex};

use chirploc::harness::ingest::{burst_records, LocationRecord, Service, ServiceSetup};
use chirploc::harness::pipeline::quantize;
use chirploc::harness::{presets, LogEntry};
use chirploc::Result;

#[derive(Clone, Default)]
struct Sink(Arc<Mutex<Vec<u8>>>);

impl std::io::Write for Sink {
    fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(b);
        Ok(b.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

pub fn run_example() -> Result<Vec<LocationRecord>> {
    let cfg = presets::indoor_room();
    let sink = Sink::default();
    let service = Service::new(ServiceSetup::from_config(&cfg)?, Box::new(sink.clone()));
    let sc = cfg.trial_scenario(0);
    let mut caps = Vec::new();
    for ap in 0..sc.aps.len() {
        let mut c = sc.synthesize_captures(ap)?;
        quantize(&mut c);
        caps.push(c);
    }
    let records = burst_records(&caps, 0.0, 0.03);
    let mut emitted = 0;
    for rec in &records {
        emitted += service.submit(rec)?;
    }
    emitted += service.flush()?;
    println!("{} uploads, {emitted} location(s)", records.len());
    let log = String::from_utf8(sink.0.lock().unwrap().clone()).expect("log is utf-8");
    let mut locs = Vec::new();
    for line in log.lines() {
        if let LogEntry::Location(l) = serde_json::from_str(line)? {
            println!("located ({:.2}, {:.2}), truth ({:.2}, {:.2})", l.x, l.y, sc.tx[0], sc.tx[1]);
            locs.push(l);
        }
    }
    Ok(locs)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
