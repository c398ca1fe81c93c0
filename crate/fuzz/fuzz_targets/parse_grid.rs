#![no_main]

use libfuzzer_sys::fuzz_target;
use qgem::config::{parse_grid_list, parse_seeds, Grid};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = text.parse::<Grid>() {
        let values = grid.values();
        assert_eq!(values.len(), grid.steps);
        assert_eq!(grid.to_string().parse::<Grid>().unwrap(), grid);
    }
    let _ = parse_grid_list(text);
    let _ = parse_seeds(text);
});
