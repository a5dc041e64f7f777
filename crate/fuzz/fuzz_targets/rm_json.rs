#![no_main]

use libfuzzer_sys::fuzz_target;
use lrm::RewardMachine;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((rm, alphabet)) = RewardMachine::from_json(text) {
        let (again, _) =
            RewardMachine::from_json(&rm.to_json(&alphabet)).expect("written machine parses");
        assert_eq!(again.num_states(), rm.num_states());
        let _ = rm.to_dot(&alphabet);
    }
});
