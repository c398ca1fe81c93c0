#![no_main]

use libfuzzer_sys::fuzz_target;
use qgem::pauli::MeasurementPlan;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(plan) = MeasurementPlan::from_json(text) {
        // from_json validates, so a decoded plan must re-encode and decode.
        let again = MeasurementPlan::from_json(&plan.to_json().unwrap()).unwrap();
        assert_eq!(again, plan);
    }
});
