//! `oram`: run an operation file through the offline ORAM.

use std::fs::File;
use std::io::BufReader;

use oblivq::oram::{read_operations, run_with, write_results, RunOptions};
use oblivq::{Memory, TraceConfig};

use crate::{CmdResult, OramArgs, Outcome};

pub fn run(args: &OramArgs) -> CmdResult {
    let ops = read_operations(BufReader::new(File::open(&args.input)?))?;
    let mut mem = Memory::new(TraceConfig::COUNT);
    let options = RunOptions {
        default: args.default,
        backend: args.backend.backend(),
        ..RunOptions::default()
    };
    let reads = run_with(&mut mem, &ops, args.capacity, options)?;
    write_results(args.output.open()?, &reads)?;
    Ok(Outcome::Ok)
}
