//! Regret simulation, index timing and CSV output.

pub mod bench;
pub mod csv_io;
pub mod simulate;

pub use bench::{bench, recorded_pool, IndexInput, TimingReport};
pub use csv_io::{read_regret_csv, read_timing_csv, write_regret_csv, write_timing_csv};
pub use simulate::{record_times, run_once, simulate, RegretTrace, RunConfig, RunOutcome, TracePoint};
