#![no_main]

use libfuzzer_sys::fuzz_target;
use lrm::models::MilpModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = MilpModel::parse_lp(text) {
        let again = MilpModel::parse_lp(&model.to_lp()).expect("written model parses");
        assert_eq!(again.num_constraints(), model.num_constraints());
    }
});
