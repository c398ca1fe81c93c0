#![no_main]

use libfuzzer_sys::fuzz_target;
use qgem::config::{Command, RunConfig};

const COMMANDS: [Command; 5] = [
    Command::EntropySweep,
    Command::WitnessSweep,
    Command::Measure,
    Command::DecoEstimate,
    Command::GroupOps,
];

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_config_str(text) {
        for command in COMMANDS {
            let _ = cfg.validate(command);
        }
    }
});
