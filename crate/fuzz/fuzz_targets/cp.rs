#![no_main]

use libfuzzer_sys::fuzz_target;
use lrm::models::CpModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = CpModel::parse(text) {
        let again = CpModel::parse(&model.to_text()).expect("written model parses");
        assert_eq!(again.num_constraints(), model.num_constraints());
    }
});
